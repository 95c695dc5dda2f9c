"""Shared conformance checks every propagator backend must pass.

The request set is canonical and fixed so that backends without a live
model can be exercised from recorded fixtures: identity alignment,
identity propagation, two-trajectory cardinality, empty-mask transport,
and an error reply for an unanswerable query.  The same checks run
in-process against the synthetic propagator and over the wire against
any backend command.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .errors import ProtocolError, PropagationError, TrackfuseError
from .masks import Mask, rle_encode
from .warp import MemoryEntry, Propagator

GRID = 16
UNKNOWN_FRAME = 9999


def _block(x0: int, y0: int, x1: int, y1: int) -> Mask:
    arr = np.zeros((GRID, GRID), dtype=bool)
    arr[y0:y1 + 1, x0:x1 + 1] = True
    return rle_encode(arr)


def mask_a() -> Mask:
    return _block(3, 2, 6, 5)


def mask_b() -> Mask:
    return _block(8, 9, 11, 12)


def empty_mask() -> Mask:
    return Mask.empty(GRID, GRID)


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def canonical_requests() -> list[dict]:
    """The wire-level request set, in the order the checks issue them."""
    return [
        {
            "op": "align",
            "entries": [{"frame": 0, "id": 0, "mask": mask_a().to_json()}],
            "query_frame": 0,
        },
        {
            "op": "propagate",
            "entries": [{"frame": 1, "id": 1, "mask": mask_a().to_json()}],
            "query_frame": 1,
        },
        {
            "op": "propagate",
            "entries": [
                {"frame": 1, "id": 1, "mask": mask_a().to_json()},
                {"frame": 1, "id": 2, "mask": mask_b().to_json()},
            ],
            "query_frame": 1,
        },
        {
            "op": "align",
            "entries": [{"frame": 2, "id": 0, "mask": empty_mask().to_json()}],
            "query_frame": 2,
        },
        {
            "op": "propagate",
            "entries": [{"frame": 0, "id": 1, "mask": mask_a().to_json()}],
            "query_frame": UNKNOWN_FRAME,
        },
    ]


def run_checks(propagator: Propagator) -> list[CheckResult]:
    """Run every conformance check against a live propagator object."""
    results: list[CheckResult] = []

    def check(name: str, fn: Callable[[], Optional[str]]) -> None:
        try:
            detail = fn()
        except Exception as exc:  # any escape is a failure with context
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
        else:
            results.append(CheckResult(name, detail is None, detail or ""))

    def align_identity() -> Optional[str]:
        out = propagator.align_to_reference(mask_a(), 0, 0)
        return None if out == mask_a() else "aligned mask differs from stored mask"

    def propagate_identity() -> Optional[str]:
        out = propagator.propagate([MemoryEntry(1, 1, mask_a())], 1)
        if set(out) != {1}:
            return f"expected ids {{1}}, got {sorted(out)}"
        return None if out[1] == mask_a() else "propagated mask differs from stored mask"

    def cardinality() -> Optional[str]:
        out = propagator.propagate(
            [MemoryEntry(1, 1, mask_a()), MemoryEntry(1, 2, mask_b())], 1
        )
        if set(out) != {1, 2}:
            return f"expected ids {{1, 2}}, got {sorted(out)}"
        if out[1] != mask_a() or out[2] != mask_b():
            return "identity propagation altered a mask"
        return None

    def empty_transport() -> Optional[str]:
        out = propagator.align_to_reference(empty_mask(), 2, 2)
        return None if out.is_empty() else "empty mask came back non-empty"

    def unknown_query_errors() -> Optional[str]:
        try:
            propagator.propagate([MemoryEntry(0, 1, mask_a())], UNKNOWN_FRAME)
        except (ProtocolError, PropagationError, TrackfuseError):
            return None
        return "unanswerable query did not raise an error"

    check("align-identity", align_identity)
    check("propagate-identity", propagate_identity)
    check("cardinality", cardinality)
    check("empty-transport", empty_transport)
    check("unknown-query-errors", unknown_query_errors)
    return results


def run_backend_checks(command, timeout_ms: Optional[int] = None) -> list[CheckResult]:
    """Spawn a backend command and run the conformance checks over the wire."""
    from .client import PropagatorClient

    with PropagatorClient(command, timeout_ms) as prop:
        return run_checks(prop)


def identity_responses() -> list[Dict]:
    """Expected responses to :func:`canonical_requests` from an ideal backend.

    Useful for recording replay fixtures: masks come back unchanged, and
    the unanswerable query yields an error.
    """
    out: list[Dict] = []
    for request in canonical_requests():
        if request["query_frame"] == UNKNOWN_FRAME:
            out.append({"error": f"frame {UNKNOWN_FRAME} is not available"})
            continue
        masks = [
            {"id": e["id"], "mask": e["mask"]}
            for e in sorted(request["entries"], key=lambda e: e["id"])
        ]
        out.append({"masks": masks})
    return out
