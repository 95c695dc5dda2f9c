import numpy as np
import pytest

from trackfuse.masks import Mask, enforce_nonoverlap, rle_encode


def mask_from_rows(rows) -> Mask:
    """Build a mask from strings like '.#.' (one char per pixel)."""
    grid = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
    return rle_encode(grid)


def block_mask(width, height, x0, y0, x1, y1) -> Mask:
    arr = np.zeros((height, width), dtype=bool)
    arr[y0:y1 + 1, x0:x1 + 1] = True
    return rle_encode(arr)


def random_mask(rng, width, height, density=0.3) -> Mask:
    return rle_encode(rng.random((height, width)) < density)


def random_disjoint_segments(rng, width, height, max_segments) -> list[Mask]:
    """Up to max_segments random rectangles, made disjoint, empties dropped."""
    n = int(rng.integers(0, max_segments + 1))
    masks = []
    for _ in range(n):
        x0 = int(rng.integers(0, width))
        y0 = int(rng.integers(0, height))
        x1 = int(rng.integers(x0, width))
        y1 = int(rng.integers(y0, height))
        masks.append(block_mask(width, height, x0, y0, min(x1, width - 1), min(y1, height - 1)))
    if not masks:
        return []
    disjoint = enforce_nonoverlap(masks, list(range(len(masks))))
    return [m for m in disjoint if not m.is_empty()]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# --- acceptance reporting -------------------------------------------------

ACCEPTANCE_RESULTS = []


def record_acceptance(criterion: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((criterion, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        line = f"{criterion}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
