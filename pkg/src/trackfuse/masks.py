"""Binary instance masks over a fixed frame grid.

A mask is stored run-length encoded: a row-major scan of the bitmap is
split into alternating runs of zeros and ones, where the first run counts
zeros and is the only run allowed to be zero length.  Masks are immutable
values; every operation returns a new mask.  The JSON wire form is
``{"w": int, "h": int, "runs": [int, ...]}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, MaskFormatError


class Mask:
    """Immutable binary mask of ``height`` rows by ``width`` columns."""

    __slots__ = ("width", "height", "runs", "_array", "_area")

    def __init__(self, width: int, height: int, runs: Sequence[int]):
        if int(width) <= 0 or int(height) <= 0:
            raise MaskFormatError(f"mask dimensions must be positive, got {width}x{height}")
        runs = tuple(int(r) for r in runs)
        if not runs:
            raise MaskFormatError("runs may not be empty")
        if any(r < 0 for r in runs):
            raise MaskFormatError("run lengths must be non-negative")
        if any(r == 0 for r in runs[1:]):
            raise MaskFormatError("only the first run may be zero")
        total = sum(runs)
        if total != int(width) * int(height):
            raise MaskFormatError(
                f"runs sum to {total}, expected {int(width) * int(height)} for {width}x{height}"
            )
        self.width = int(width)
        self.height = int(height)
        self.runs = runs
        self._array = None
        self._area = None

    @classmethod
    def from_array(cls, bitmap) -> "Mask":
        return rle_encode(bitmap)

    @classmethod
    def empty(cls, width: int, height: int) -> "Mask":
        return cls(width, height, (width * height,))

    @classmethod
    def full(cls, width: int, height: int) -> "Mask":
        return cls(width, height, (0, width * height))

    def to_array(self) -> np.ndarray:
        """Decode to a read-only (height, width) bool array."""
        if self._array is None:
            values = np.resize(np.array([False, True]), len(self.runs))
            flat = np.repeat(values, self.runs)
            arr = flat.reshape(self.height, self.width)
            arr.setflags(write=False)
            self._array = arr
        return self._array

    @property
    def area(self) -> int:
        """Number of set pixels."""
        if self._area is None:
            self._area = sum(self.runs[1::2])
        return self._area

    def is_empty(self) -> bool:
        return self.area == 0

    def same_shape(self, other: "Mask") -> bool:
        return self.width == other.width and self.height == other.height

    def to_json(self) -> dict:
        return {"w": self.width, "h": self.height, "runs": list(self.runs)}

    @classmethod
    def from_json(cls, obj: dict) -> "Mask":
        try:
            return cls(obj["w"], obj["h"], obj["runs"])
        except (KeyError, TypeError) as exc:
            raise MaskFormatError(f"bad mask object: {exc}") from exc

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.runs == other.runs
        )

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.runs))

    def __repr__(self) -> str:
        return f"Mask({self.width}x{self.height}, area={self.area})"


def rle_encode(bitmap) -> Mask:
    """Encode a 2-D boolean grid into a canonical run-length mask."""
    arr = np.asarray(bitmap)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise MaskFormatError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
    flat = arr.astype(bool).ravel()
    n = flat.size
    boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], boundaries, [n]))
    runs = tuple(int(r) for r in np.diff(starts))
    if flat[0]:
        runs = (0,) + runs
    height, width = arr.shape
    return Mask(width, height, runs)


def _require_same_dims(a: Mask, b: Mask) -> None:
    if not a.same_shape(b):
        raise DimensionMismatch(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union of two masks; 0.0 when both are empty."""
    _require_same_dims(a, b)
    aa, ba = a.to_array(), b.to_array()
    inter = int(np.count_nonzero(aa & ba))
    uni = a.area + b.area - inter
    if uni == 0:
        return 0.0
    return inter / uni


def intersection(a: Mask, b: Mask) -> Mask:
    _require_same_dims(a, b)
    return rle_encode(a.to_array() & b.to_array())


def union(a: Mask, b: Mask) -> Mask:
    """Pixel-wise OR of two masks."""
    _require_same_dims(a, b)
    return rle_encode(a.to_array() | b.to_array())


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel coordinates, inclusive on both ends."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate box {self}")

    @property
    def area(self) -> int:
        return (self.x_max - self.x_min + 1) * (self.y_max - self.y_min + 1)


def tightest_bbox(m: Mask) -> Optional[BBox]:
    """Minimal box containing every set pixel, or None for an empty mask."""
    if m.is_empty():
        return None
    arr = m.to_array()
    rows = np.flatnonzero(arr.any(axis=1))
    cols = np.flatnonzero(arr.any(axis=0))
    return BBox(int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1]))


def enforce_nonoverlap(masks: Sequence[Mask], priority: Sequence[int]) -> list[Mask]:
    """Resolve overlaps: each contested pixel goes to the lowest-rank mask.

    ``priority[i]`` is the rank of ``masks[i]``; smaller rank wins.  Equal
    ranks fall back to list order.  Non-contested pixels are untouched, so
    the outputs cover exactly the union of the inputs and are pairwise
    disjoint.
    """
    if len(masks) != len(priority):
        raise ValueError("masks and priority must have equal length")
    if not masks:
        return []
    for m in masks[1:]:
        _require_same_dims(masks[0], m)
    order = sorted(range(len(masks)), key=lambda i: (priority[i], i))
    occupied = np.zeros((masks[0].height, masks[0].width), dtype=bool)
    out: list[Optional[Mask]] = [None] * len(masks)
    for i in order:
        kept = masks[i].to_array() & ~occupied
        occupied |= kept
        out[i] = rle_encode(kept)
    return out  # type: ignore[return-value]


class SegmentSet:
    """Non-overlapping instance masks detected (or tracked) on one frame.

    ``ids`` and ``scores`` are optional parallel lists; a missing score
    means full confidence (1.0).  An empty frame is a set with zero
    segments.
    """

    __slots__ = ("frame_index", "segments", "scores", "ids")

    def __init__(self, frame_index, segments=(), scores=None, ids=None):
        self.frame_index = int(frame_index)
        self.segments = tuple(segments)
        self.scores = None if scores is None else tuple(float(s) for s in scores)
        self.ids = None if ids is None else tuple(ids)
        if self.scores is not None and len(self.scores) != len(self.segments):
            raise ValueError("scores length must match segments")
        if self.ids is not None and len(self.ids) != len(self.segments):
            raise ValueError("ids length must match segments")
        if not self.segments:
            self.scores = None
            self.ids = None

    def effective_scores(self) -> tuple[float, ...]:
        if self.scores is not None:
            return self.scores
        return (1.0,) * len(self.segments)

    def validate(self) -> None:
        """Check the pairwise-disjointness invariant; raises on violation."""
        if not self.segments:
            return
        first = self.segments[0]
        acc = np.zeros((first.height, first.width), dtype=bool)
        for k, seg in enumerate(self.segments):
            _require_same_dims(first, seg)
            arr = seg.to_array()
            if np.any(acc & arr):
                raise MaskFormatError(
                    f"frame {self.frame_index}: segment {k} overlaps an earlier segment"
                )
            acc |= arr

    def __len__(self) -> int:
        return len(self.segments)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SegmentSet):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.segments == other.segments
            and self.scores == other.scores
            and self.ids == other.ids
        )

    def __repr__(self) -> str:
        return f"SegmentSet(frame={self.frame_index}, n={len(self.segments)})"
