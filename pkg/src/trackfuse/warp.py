"""Frame-to-frame affine transforms and the synthetic mask propagator.

An affine is six row-major numbers ``[a, b, tx, c, d, ty]`` acting on
pixel coordinates ``(x, y)`` as ``x' = a*x + b*y + tx``, ``y' = c*x +
d*y + ty``.  The synthetic propagator keeps one warp per consecutive
frame pair and carries masks across arbitrary gaps by composing (and
inverting) the chain.  Rasterization is inverse-mapped nearest neighbor:
a target pixel is set iff its inverse-mapped source pixel is set, and
pixels mapped outside the frame are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Protocol, Sequence

import numpy as np

from .errors import PropagationError
from .masks import Mask, rle_encode

IDENTITY_AFFINE = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

_MIN_DET = 1e-9


def _det(affine: Sequence[float]) -> float:
    a, b, _, c, d, _ = affine
    return a * d - b * c


@dataclass(frozen=True)
class WarpField:
    """Invertible affine transform from one frame's pixels to another's."""

    from_frame: int
    to_frame: int
    affine: tuple[float, ...]

    def __post_init__(self):
        affine = tuple(float(v) for v in self.affine)
        if len(affine) != 6:
            raise ValueError(f"affine must have 6 entries, got {len(affine)}")
        if abs(_det(affine)) <= _MIN_DET:
            raise ValueError(f"affine is not invertible (det={_det(affine):.3g})")
        object.__setattr__(self, "affine", affine)


def compose_affines(first: Sequence[float], then: Sequence[float]) -> tuple[float, ...]:
    """Affine equal to applying ``first`` and then ``then``."""
    a1, b1, tx1, c1, d1, ty1 = first
    a2, b2, tx2, c2, d2, ty2 = then
    return (
        a2 * a1 + b2 * c1,
        a2 * b1 + b2 * d1,
        a2 * tx1 + b2 * ty1 + tx2,
        c2 * a1 + d2 * c1,
        c2 * b1 + d2 * d1,
        c2 * tx1 + d2 * ty1 + ty2,
    )


def invert_affine(affine: Sequence[float]) -> tuple[float, ...]:
    a, b, tx, c, d, ty = affine
    det = a * d - b * c
    if abs(det) <= _MIN_DET:
        raise ValueError(f"affine is not invertible (det={det:.3g})")
    ia, ib, ic, id_ = d / det, -b / det, -c / det, a / det
    return (ia, ib, -(ia * tx + ib * ty), ic, id_, -(ic * tx + id_ * ty))


def compose_warps(a: WarpField, b: WarpField) -> WarpField:
    """Chain two warps; requires ``a.to_frame == b.from_frame``."""
    if a.to_frame != b.from_frame:
        raise ValueError(
            f"cannot compose warp ending at frame {a.to_frame} with one starting at {b.from_frame}"
        )
    return WarpField(a.from_frame, b.to_frame, compose_affines(a.affine, b.affine))


@lru_cache(maxsize=64)
def _pixel_grid(width: int, height: int):
    ys, xs = np.mgrid[0:height, 0:width]
    xs = xs.ravel().astype(np.float64)
    ys = ys.ravel().astype(np.float64)
    xs.setflags(write=False)
    ys.setflags(write=False)
    return xs, ys


def warp_mask(mask: Mask, affine: Sequence[float]) -> Mask:
    """Apply an affine to a mask via inverse-mapped nearest neighbor."""
    inv = invert_affine(affine)
    xs, ys = _pixel_grid(mask.width, mask.height)
    sx = inv[0] * xs + inv[1] * ys + inv[2]
    sy = inv[3] * xs + inv[4] * ys + inv[5]
    sxi = np.floor(sx + 0.5).astype(np.int64)
    syi = np.floor(sy + 0.5).astype(np.int64)
    inside = (sxi >= 0) & (sxi < mask.width) & (syi >= 0) & (syi < mask.height)
    src = mask.to_array()
    out = np.zeros(mask.height * mask.width, dtype=bool)
    out[inside] = src[syi[inside], sxi[inside]]
    return rle_encode(out.reshape(mask.height, mask.width))


@dataclass(frozen=True)
class MemoryEntry:
    """One stored (frame, trajectory, mask) triple in the memory bank."""

    frame_index: int
    trajectory_id: int
    mask: Mask


class Propagator(Protocol):
    """Contract for anything that can carry masks between frames."""

    def propagate(self, entries: Sequence[MemoryEntry], query_frame: int) -> Dict[int, Mask]:
        """One mask per distinct trajectory id, expressed at the query frame."""
        ...

    def align_to_reference(self, mask: Mask, from_frame: int, ref_frame: int) -> Mask:
        """The mask re-expressed in the reference frame's coordinates."""
        ...


class SyntheticWarpPropagator:
    """Propagator backed by exact per-frame-pair affine warps.

    Pure and thread-safe: the warp table is fixed at construction.  Only
    each trajectory's most recent entry is used; the affine chain between
    any two covered frames is composed (and inverted for backward hops)
    on demand.
    """

    def __init__(self, warps: Iterable[WarpField]):
        self._steps: Dict[int, WarpField] = {}
        for w in warps:
            if w.to_frame != w.from_frame + 1:
                raise ValueError(
                    f"synthetic warps must link consecutive frames, got {w.from_frame}->{w.to_frame}"
                )
            if w.from_frame in self._steps:
                raise ValueError(f"duplicate warp for frame pair {w.from_frame}->{w.to_frame}")
            self._steps[w.from_frame] = w

    def chain_affine(self, from_frame: int, to_frame: int) -> tuple[float, ...]:
        if from_frame == to_frame:
            return IDENTITY_AFFINE
        affine = IDENTITY_AFFINE
        if to_frame > from_frame:
            for f in range(from_frame, to_frame):
                step = self._steps.get(f)
                if step is None:
                    raise PropagationError(
                        f"no warp covering frame pair {f}->{f + 1}", f, f + 1
                    )
                affine = compose_affines(affine, step.affine)
        else:
            for f in range(from_frame - 1, to_frame - 1, -1):
                step = self._steps.get(f)
                if step is None:
                    raise PropagationError(
                        f"no warp covering frame pair {f}->{f + 1}", f, f + 1
                    )
                affine = compose_affines(affine, invert_affine(step.affine))
        return affine

    def align_to_reference(self, mask: Mask, from_frame: int, ref_frame: int) -> Mask:
        if from_frame == ref_frame:
            return mask
        return warp_mask(mask, self.chain_affine(from_frame, ref_frame))

    def propagate(self, entries: Sequence[MemoryEntry], query_frame: int) -> Dict[int, Mask]:
        latest: Dict[int, MemoryEntry] = {}
        for entry in entries:
            prev = latest.get(entry.trajectory_id)
            if prev is None or entry.frame_index >= prev.frame_index:
                latest[entry.trajectory_id] = entry
        result: Dict[int, Mask] = {}
        for tid in sorted(latest):
            entry = latest[tid]
            result[tid] = self.align_to_reference(entry.mask, entry.frame_index, query_frame)
        return result
