"""Memory refinement: trajectory lifecycle across time windows.

Tracked masks propagated from the bank are reconciled with the window's
filtered segments.  Matched pairs merge by pixel-wise union and refresh
the trajectory; unmatched segments become birth candidates that must be
re-observed in consecutive windows before admission; unmatched
trajectories accrue misses and are evicted after enough consecutive
ones.  Identities are strictly increasing and never reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence

from .assignment import Matching
from .errors import TrackfuseError
from .masks import Mask, SegmentSet, enforce_nonoverlap, iou, union
from .warp import MemoryEntry, Propagator

SNAPSHOT_VERSION = 1


@dataclass
class Trajectory:
    """A persistent object identity with its latest refined mask."""

    id: int
    latest_mask: Mask
    latest_frame: int
    miss_count: int = 0


@dataclass
class NewCandidate:
    """A segment suspected to be a new object, awaiting confirmation."""

    mask: Mask
    frame_index: int
    first_window: int
    hit_count: int = 1


@dataclass
class MemoryBank:
    """Single-owner per-video store of trajectories and birth candidates."""

    trajectories: Dict[int, Trajectory] = field(default_factory=dict)
    candidates: list[NewCandidate] = field(default_factory=list)
    next_id: int = 1

    def ordered_ids(self) -> list[int]:
        return sorted(self.trajectories)

    def new_trajectory(self, mask: Mask, frame_index: int) -> Trajectory:
        traj = Trajectory(id=self.next_id, latest_mask=mask, latest_frame=frame_index)
        self.next_id += 1
        self.trajectories[traj.id] = traj
        return traj

    def to_json(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "next_id": self.next_id,
            "trajectories": [
                {
                    "id": t.id,
                    "latest_frame": t.latest_frame,
                    "miss_count": t.miss_count,
                    "mask": t.latest_mask.to_json(),
                }
                for t in (self.trajectories[i] for i in self.ordered_ids())
            ],
            "candidates": [
                {
                    "frame": c.frame_index,
                    "first_window": c.first_window,
                    "hit_count": c.hit_count,
                    "mask": c.mask.to_json(),
                }
                for c in self.candidates
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MemoryBank":
        if obj.get("version") != SNAPSHOT_VERSION:
            raise TrackfuseError(f"unsupported bank snapshot version {obj.get('version')!r}")
        bank = cls(next_id=int(obj["next_id"]))
        for t in obj["trajectories"]:
            bank.trajectories[int(t["id"])] = Trajectory(
                id=int(t["id"]),
                latest_mask=Mask.from_json(t["mask"]),
                latest_frame=int(t["latest_frame"]),
                miss_count=int(t["miss_count"]),
            )
        for c in obj["candidates"]:
            bank.candidates.append(
                NewCandidate(
                    mask=Mask.from_json(c["mask"]),
                    frame_index=int(c["frame"]),
                    first_window=int(c["first_window"]),
                    hit_count=int(c["hit_count"]),
                )
            )
        return bank


def track_reference(
    bank: MemoryBank, ref_frame: int, propagator: Propagator
) -> Dict[int, Mask]:
    """Propagate every stored trajectory to the window's reference frame."""
    if not bank.trajectories:
        return {}
    entries = [
        MemoryEntry(t.latest_frame, t.id, t.latest_mask)
        for t in (bank.trajectories[i] for i in bank.ordered_ids())
    ]
    return propagator.propagate(entries, ref_frame)


def refine(
    bank: MemoryBank,
    tracks: Dict[int, Mask],
    segs: SegmentSet,
    matching: Matching,
    *,
    lambda1: int,
    lambda2: int,
    theta: float,
    ref_frame: int,
    window_index: int,
    propagator: Propagator,
    render_missed: bool = False,
) -> Dict[int, Mask]:
    """Reconcile tracked and detected masks; update the bank in place.

    Returns the refined id->mask map for the reference frame.  Matched
    pairs take the pixel-wise union of both masks.  Unmatched segments
    are checked against surviving candidates (overlap above ``theta``
    after carrying the candidate to this frame); a candidate observed in
    ``lambda1`` consecutive windows is promoted under a fresh id.
    Unmatched trajectories miss; ``lambda2`` consecutive misses delete
    them, and until deletion they contribute no mask unless
    ``render_missed`` is set.
    """
    track_ids = sorted(tracks)
    refined: Dict[int, Mask] = {}
    matched_order: list[tuple[float, int]] = []  # (iou, id)
    missed_ids: list[int] = []
    unmatched_seg_slots: list[int] = []

    for pair in matching.pairs:
        if pair.track_slot is not None and pair.track_slot >= len(track_ids):
            raise TrackfuseError(f"matching track slot {pair.track_slot} out of range")
        if pair.seg_slot is not None and pair.seg_slot >= len(segs.segments):
            raise TrackfuseError(f"matching seg slot {pair.seg_slot} out of range")
        if pair.matched:
            tid = track_ids[pair.track_slot]
            refined[tid] = union(tracks[tid], segs.segments[pair.seg_slot])
            bank.trajectories[tid].miss_count = 0
            matched_order.append((pair.iou, tid))
        else:
            if pair.track_slot is not None:
                missed_ids.append(track_ids[pair.track_slot])
            if pair.seg_slot is not None:
                unmatched_seg_slots.append(pair.seg_slot)

    rendered_missed_ids: list[int] = []
    for tid in sorted(missed_ids):
        traj = bank.trajectories[tid]
        traj.miss_count += 1
        if traj.miss_count >= lambda2:
            del bank.trajectories[tid]
        elif render_missed:
            refined[tid] = tracks[tid]
            rendered_missed_ids.append(tid)

    # Candidate continuity: survivors from the previous window, carried to
    # this reference frame, may re-match an unmatched segment.
    survivors = list(bank.candidates)
    carried = [
        propagator.align_to_reference(c.mask, c.frame_index, ref_frame) for c in survivors
    ]
    survivor_used = [False] * len(survivors)
    next_candidates: list[NewCandidate] = []
    promoted_ids: list[int] = []

    def promote(mask: Mask) -> None:
        traj = bank.new_trajectory(mask, ref_frame)
        refined[traj.id] = mask
        promoted_ids.append(traj.id)

    for slot in sorted(unmatched_seg_slots):
        seg_mask = segs.segments[slot]
        best = -1
        best_iou = theta
        for k, cand_mask in enumerate(carried):
            if survivor_used[k]:
                continue
            v = iou(seg_mask, cand_mask)
            if v > best_iou:
                best_iou = v
                best = k
        if best >= 0:
            survivor_used[best] = True
            cand = survivors[best]
            cand.hit_count += 1
            cand.mask = seg_mask
            cand.frame_index = ref_frame
            if cand.hit_count >= lambda1:
                promote(cand.mask)
            else:
                next_candidates.append(cand)
        else:
            if lambda1 <= 1:
                promote(seg_mask)
            else:
                next_candidates.append(
                    NewCandidate(mask=seg_mask, frame_index=ref_frame, first_window=window_index)
                )
    # Candidates not re-observed this window lapse (consecutiveness).
    bank.candidates = next_candidates

    if refined:
        order: list[int] = []
        for pair_iou, tid in sorted(matched_order, key=lambda x: (-x[0], x[1])):
            order.append(tid)
        order.extend(sorted(promoted_ids))
        order.extend(sorted(rendered_missed_ids))
        rank = {tid: r for r, tid in enumerate(order)}
        ids = list(refined)
        disjoint = enforce_nonoverlap([refined[i] for i in ids], [rank[i] for i in ids])
        refined = dict(zip(ids, disjoint))

    for tid, mask in refined.items():
        traj = bank.trajectories[tid]
        traj.latest_mask = mask
        traj.latest_frame = ref_frame
    return refined


def track_window_remainder(
    bank: MemoryBank,
    ref_frame: int,
    frames: Sequence[int],
    propagator: Propagator,
) -> Dict[int, Dict[int, Mask]]:
    """Carry this window's refined trajectories onto its remaining frames.

    Only trajectories refreshed at the reference frame render; per-frame
    outputs are made disjoint with ascending-id priority.  Returns
    ``{frame: {id: mask}}`` in the given frame order.
    """
    ids = [
        tid
        for tid in bank.ordered_ids()
        if bank.trajectories[tid].latest_frame == ref_frame
    ]
    out: Dict[int, Dict[int, Mask]] = {}
    if not ids:
        for frame in frames:
            out[frame] = {}
        return out
    entries = [
        MemoryEntry(ref_frame, tid, bank.trajectories[tid].latest_mask) for tid in ids
    ]
    for frame in frames:
        moved = propagator.propagate(entries, frame)
        ordered = sorted(moved)
        disjoint = enforce_nonoverlap([moved[i] for i in ordered], list(range(len(ordered))))
        out[frame] = dict(zip(ordered, disjoint))
    return out
