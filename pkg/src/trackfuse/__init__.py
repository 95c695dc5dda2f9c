"""Training-free video instance-mask tracking over a pluggable propagator."""

__version__ = "0.1.0"

from .masks import BBox, Mask, SegmentSet, enforce_nonoverlap, iou, rle_encode, tightest_bbox, union
from .warp import MemoryEntry, Propagator, SyntheticWarpPropagator, WarpField, compose_warps, warp_mask

__all__ = [
    "__version__",
    "BBox",
    "Mask",
    "SegmentSet",
    "enforce_nonoverlap",
    "iou",
    "rle_encode",
    "tightest_bbox",
    "union",
    "MemoryEntry",
    "Propagator",
    "SyntheticWarpPropagator",
    "WarpField",
    "compose_warps",
    "warp_mask",
]
