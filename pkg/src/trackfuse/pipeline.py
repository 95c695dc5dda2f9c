"""End-to-end video driver: window scheduling and module wiring.

Frames are consumed in non-overlapping windows.  Each window is filtered
down to its reference frame, matched against the propagated memory bank,
refined, and the refreshed bank is carried onto the window's remaining
frames.  Everything is deterministic given inputs and configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

from . import __version__
from .assignment import match_track_seg
from .errors import TrackfuseError
from .iaf import run_iaf
from .masks import Mask, SegmentSet, enforce_nonoverlap
from .memory import MemoryBank, refine, track_reference, track_window_remainder
from .warp import Propagator


@dataclass(frozen=True)
class Config:
    """Engine hyperparameters; defaults follow the reference setting."""

    T: int = 3
    theta: float = 0.5
    lambda1: int = 1
    lambda2: int = 3
    matched_iou_min: float = 0.0
    min_frames: Optional[int] = None  # None: tracklets must span the full window
    render_missed: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not (0.0 < self.theta < 1.0):
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.lambda1 < 1 or self.lambda2 < 1:
            raise ValueError("lambda1 and lambda2 must be >= 1")
        if self.matched_iou_min < 0:
            raise ValueError("matched_iou_min must be >= 0")
        if self.min_frames is not None and self.min_frames < 1:
            raise ValueError("min_frames must be >= 1 when given")

    def to_json(self) -> dict:
        return {
            "T": self.T,
            "theta": self.theta,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "matched_iou_min": self.matched_iou_min,
            "min_frames": self.min_frames,
            "render_missed": self.render_missed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Config":
        known = {
            "T", "theta", "lambda1", "lambda2",
            "matched_iou_min", "min_frames", "render_missed",
        }
        unknown = set(obj) - known
        if unknown:
            raise TrackfuseError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class VideoResult:
    """Per-frame instance masks with stable identities, plus run metadata."""

    frames: list[SegmentSet]
    config: Config
    seed: Optional[int] = None
    version: str = field(default=__version__)


def schedule_windows(num_frames: int, t: int) -> list[list[int]]:
    """Consecutive disjoint windows of length ``t``; the tail keeps the rest."""
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    if t < 1:
        raise ValueError("window length must be >= 1")
    return [list(range(s, min(s + t, num_frames))) for s in range(0, num_frames, t)]


def _result_frame(frame: int, by_id: Dict[int, Mask]) -> SegmentSet:
    ids = [i for i in sorted(by_id) if not by_id[i].is_empty()]
    return SegmentSet(frame, [by_id[i] for i in ids], ids=ids)


def run_video(
    num_frames: int,
    detections: Sequence[SegmentSet],
    propagator: Propagator,
    config: Config,
    *,
    seed: Optional[int] = None,
    use_iaf: bool = True,
    use_iar: bool = True,
    bank: Optional[MemoryBank] = None,
) -> VideoResult:
    """Run the full tracking stage over one video.

    ``detections`` must hold one (possibly empty) segment set per frame.
    ``use_iaf`` / ``use_iar`` disable one stage for ablations: without
    window filtering, the raw reference-frame detections feed refinement;
    without memory refinement, each window's filtered segments are
    emitted under window-local identities with no bank.
    """
    if len(detections) != num_frames:
        raise ValueError(f"expected {num_frames} detection sets, got {len(detections)}")
    for f, det in enumerate(detections):
        if det.frame_index != f:
            raise ValueError(f"detections[{f}] carries frame_index {det.frame_index}")
    if bank is None:
        bank = MemoryBank()
    windows = schedule_windows(num_frames, config.T)
    out: list[Optional[SegmentSet]] = [None] * num_frames
    ablation_next_id = 1

    for w_index, frames in enumerate(windows):
        ref = frames[0]
        window_dets = [detections[f] for f in frames]
        if use_iaf:
            seg_set = run_iaf(frames, window_dets, propagator, config.theta, config.min_frames)
        else:
            seg_set = SegmentSet(ref, [m for m in detections[ref].segments if not m.is_empty()])

        if not use_iar:
            ids = list(range(ablation_next_id, ablation_next_id + len(seg_set.segments)))
            ablation_next_id += len(seg_set.segments)
            by_id = dict(zip(ids, seg_set.segments))
            out[ref] = _result_frame(ref, by_id)
            for frame in frames[1:]:
                moved = {
                    i: propagator.align_to_reference(m, ref, frame) for i, m in by_id.items()
                }
                ordered = sorted(moved)
                disjoint = enforce_nonoverlap(
                    [moved[i] for i in ordered], list(range(len(ordered)))
                )
                out[frame] = _result_frame(frame, dict(zip(ordered, disjoint)))
            continue

        tracks = track_reference(bank, ref, propagator)
        track_masks = [tracks[i] for i in sorted(tracks)]
        matching = match_track_seg(track_masks, seg_set.segments, config.matched_iou_min)
        refined = refine(
            bank,
            tracks,
            seg_set,
            matching,
            lambda1=config.lambda1,
            lambda2=config.lambda2,
            theta=config.theta,
            ref_frame=ref,
            window_index=w_index,
            propagator=propagator,
            render_missed=config.render_missed,
        )
        out[ref] = _result_frame(ref, refined)
        remainder = track_window_remainder(bank, ref, frames[1:], propagator)
        for frame in frames[1:]:
            out[frame] = _result_frame(frame, remainder[frame])

    return VideoResult(frames=out, config=config, seed=seed)  # type: ignore[arg-type]
