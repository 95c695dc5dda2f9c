"""Window filtering: distill one clean segment set per time window.

Per-frame detections inside a window are aligned to the window's
reference frame (its first frame), sorted by temporal proximity then
area, grouped into tracklets by greedy mutual-overlap pairing, and each
tracklet is reduced to the single member with the highest summed overlap
to its peers.  Detections that fail to reappear on every window frame
are discarded, which is what suppresses one-off detector mistakes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .masks import Mask, SegmentSet, enforce_nonoverlap, iou
from .warp import Propagator


@dataclass(frozen=True)
class SortedSegment:
    """A window segment plus the keys it was ordered by."""

    mask: Mask
    source_frame: int
    frame_distance: int
    area: int
    original_index: int


@dataclass
class Tracklet:
    """Mutually-paired segments, one per window frame.

    ``positions`` index into the sorted segment list and are ascending;
    ``anchor_position`` is the candidate that initiated the pairing.
    """

    members: list[SortedSegment]
    positions: list[int]
    anchor_position: int

    @property
    def member_frames(self) -> set[int]:
        return {m.source_frame for m in self.members}


def sort_segments(aligned_sets: Sequence[SegmentSet], ref_frame: int) -> list[SortedSegment]:
    """Flatten per-frame sets into one list ordered for pairing.

    Order: frame distance to the reference ascending, then area
    descending, then (source frame, index within its frame) ascending.
    """
    out = []
    for seg_set in aligned_sets:
        for idx, mask in enumerate(seg_set.segments):
            out.append(
                SortedSegment(
                    mask=mask,
                    source_frame=seg_set.frame_index,
                    frame_distance=abs(seg_set.frame_index - ref_frame),
                    area=mask.area,
                    original_index=idx,
                )
            )
    out.sort(key=lambda s: (s.frame_distance, -s.area, s.source_frame, s.original_index))
    return out


def pair_matrix(segments: Sequence[SortedSegment]) -> np.ndarray:
    """Symmetric pairwise-IoU matrix over the sorted segments."""
    n = len(segments)
    a = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        a[i, i] = iou(segments[i].mask, segments[i].mask)
        for j in range(i + 1, n):
            v = iou(segments[i].mask, segments[j].mask)
            a[i, j] = v
            a[j, i] = v
    return a


def build_tracklets(
    segments: Sequence[SortedSegment],
    a: np.ndarray,
    theta: float,
    window_frames: Sequence[int],
    min_frames: Optional[int] = None,
) -> list[Tracklet]:
    """Greedy tracklet construction over the sorted segments.

    Each candidate, taken in sort order, picks from every other window
    frame the not-yet-consumed segment with maximal overlap among those
    strictly above ``theta`` (ties go to the earlier sort position).  A
    tracklet is emitted only when at least ``min_frames`` frames are
    covered (default: all of them), and emitting consumes its members.
    """
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    t = len(window_frames)
    need = t if min_frames is None else min(min_frames, t)
    n = len(segments)
    consumed = [False] * n
    tracklets: list[Tracklet] = []
    for i in range(n):
        if consumed[i]:
            continue
        partners: list[int] = []
        for frame in window_frames:
            if frame == segments[i].source_frame:
                continue
            best = -1
            for j in range(n):
                if j == i or consumed[j] or segments[j].source_frame != frame:
                    continue
                if a[i, j] > theta and (best < 0 or a[i, j] > a[i, best]):
                    best = j
            if best >= 0:
                partners.append(best)
        if 1 + len(partners) >= need:
            positions = sorted([i] + partners)
            for j in positions:
                consumed[j] = True
            tracklets.append(
                Tracklet(
                    members=[segments[j] for j in positions],
                    positions=positions,
                    anchor_position=i,
                )
            )
    return tracklets


def vote(tr: Tracklet, a: np.ndarray) -> SortedSegment:
    """The tracklet member with the maximum summed overlap to its peers.

    Ties resolve to the earliest sort position, which also covers the
    two-member case where the sums are equal by symmetry.
    """
    best_pos = None
    best_sum = -1.0
    for k in tr.positions:
        s = sum(a[k, l] for l in tr.positions if l != k)
        if s > best_sum:
            best_sum = s
            best_pos = k
    return tr.members[tr.positions.index(best_pos)]


def run_iaf(
    window_frames: Sequence[int],
    detections: Sequence[SegmentSet],
    propagator: Propagator,
    theta: float,
    min_frames: Optional[int] = None,
) -> SegmentSet:
    """Filter one window of detections down to the reference frame.

    ``detections[i]`` must belong to ``window_frames[i]``.  A one-frame
    window bypasses filtering entirely (the reference detections pass
    through unchanged); otherwise segments are aligned, sorted, paired,
    voted, and finally made pairwise disjoint in tracklet emission order.
    """
    if len(window_frames) != len(detections):
        raise ValueError("one detection set per window frame required")
    if not window_frames:
        raise ValueError("window must contain at least one frame")
    for frame, det in zip(window_frames, detections):
        if det.frame_index != frame:
            raise ValueError(f"detection set for frame {det.frame_index} given for frame {frame}")
    ref_frame = window_frames[0]
    if len(window_frames) == 1:
        return detections[0]

    aligned: list[SegmentSet] = [detections[0]]
    for det in detections[1:]:
        moved = [
            propagator.align_to_reference(m, det.frame_index, ref_frame) for m in det.segments
        ]
        aligned.append(SegmentSet(det.frame_index, moved))

    segments = sort_segments(aligned, ref_frame)
    a = pair_matrix(segments)
    tracklets = build_tracklets(segments, a, theta, window_frames, min_frames)
    voted = [vote(tr, a) for tr in tracklets]
    disjoint = enforce_nonoverlap([s.mask for s in voted], list(range(len(voted))))
    kept = [m for m in disjoint if not m.is_empty()]
    return SegmentSet(ref_frame, kept)
