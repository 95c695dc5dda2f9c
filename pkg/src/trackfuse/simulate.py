"""Synthetic benchmark generator: moving instances plus a noisy detector.

Ground truth is driven by a single global affine per frame pair shared
by all instances, so the emitted warp files reproduce the scene motion
exactly.  The detector model corrupts ground truth with per-frame
drops, boundary jitter (morphological dilate/erode), one-frame spurious
blobs, and optionally a persistent spurious blob.  Everything is
deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .masks import Mask, SegmentSet, enforce_nonoverlap, rle_encode
from .warp import WarpField, warp_mask


@dataclass(frozen=True)
class EllipseSpec:
    """Axis-aligned ellipse: center (cx, cy), semi-axes (ax, ay)."""

    cx: float
    cy: float
    ax: float
    ay: float

    def __post_init__(self):
        if self.ax <= 0 or self.ay <= 0:
            raise ValueError(f"ellipse axes must be positive, got ({self.ax}, {self.ay})")

    def to_json(self) -> dict:
        return {"cx": self.cx, "cy": self.cy, "ax": self.ax, "ay": self.ay}

    @classmethod
    def from_json(cls, obj: dict) -> "EllipseSpec":
        return cls(float(obj["cx"]), float(obj["cy"]), float(obj["ax"]), float(obj["ay"]))


@dataclass(frozen=True)
class InstanceSpec:
    """One object: alive on frames [birth_frame, death_frame)."""

    birth_frame: int
    death_frame: int
    shape: EllipseSpec

    def to_json(self) -> dict:
        return {"birth": self.birth_frame, "death": self.death_frame, "shape": self.shape.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "InstanceSpec":
        return cls(int(obj["birth"]), int(obj["death"]), EllipseSpec.from_json(obj["shape"]))


@dataclass(frozen=True)
class ScenarioSpec:
    """A synthetic video: frame grid, instances, and global scene motion.

    ``motion`` is one affine applied between every consecutive frame
    pair, or a list with one affine per pair.
    """

    width: int
    height: int
    num_frames: int
    instances: tuple[InstanceSpec, ...]
    motion: tuple = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be positive")
        if self.num_frames < 1:
            raise ValueError("num_frames must be >= 1")
        object.__setattr__(self, "instances", tuple(self.instances))
        motion = self.motion
        if motion and isinstance(motion[0], (list, tuple)):
            motion = tuple(tuple(float(v) for v in m) for m in motion)
            if len(motion) != self.num_frames - 1:
                raise ValueError(
                    f"per-pair motion needs {self.num_frames - 1} affines, got {len(motion)}"
                )
        else:
            motion = tuple(float(v) for v in motion)
            if len(motion) != 6:
                raise ValueError("motion affine must have 6 entries")
        object.__setattr__(self, "motion", motion)
        for inst in self.instances:
            if not (0 <= inst.birth_frame < inst.death_frame <= self.num_frames):
                raise ValueError(
                    f"instance lifetime [{inst.birth_frame}, {inst.death_frame}) outside video"
                )
            s = inst.shape
            if (
                s.cx - s.ax < 0
                or s.cx + s.ax > self.width - 1
                or s.cy - s.ay < 0
                or s.cy + s.ay > self.height - 1
            ):
                raise ValueError(f"instance shape {s} does not lie within the frame at birth")

    def step_affine(self, from_frame: int) -> tuple[float, ...]:
        if self.motion and isinstance(self.motion[0], tuple):
            return self.motion[from_frame]
        return self.motion  # type: ignore[return-value]

    def to_json(self) -> dict:
        motion = self.motion
        if motion and isinstance(motion[0], tuple):
            motion = [list(m) for m in motion]
        else:
            motion = list(motion)
        return {
            "width": self.width,
            "height": self.height,
            "num_frames": self.num_frames,
            "instances": [inst.to_json() for inst in self.instances],
            "motion": motion,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioSpec":
        return cls(
            width=int(obj["width"]),
            height=int(obj["height"]),
            num_frames=int(obj["num_frames"]),
            instances=tuple(InstanceSpec.from_json(i) for i in obj["instances"]),
            motion=obj.get("motion", (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)),
            seed=int(obj.get("seed", 0)),
        )


@dataclass(frozen=True)
class PersistentFPSpec:
    """A spurious blob that survives several frames, moving with the scene."""

    start_frame: int
    duration: int
    shape: EllipseSpec

    def to_json(self) -> dict:
        return {"start": self.start_frame, "duration": self.duration, "shape": self.shape.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "PersistentFPSpec":
        return cls(int(obj["start"]), int(obj["duration"]), EllipseSpec.from_json(obj["shape"]))


@dataclass(frozen=True)
class NoiseSpec:
    """Detector imperfection model.

    ``jitter`` is an inclusive integer radius range; a negative radius
    erodes the boundary, a positive one dilates it.  ``fp_rate`` injects
    a one-frame blob disjoint from every true mask.
    """

    fp_rate: float = 0.0
    fn_rate: float = 0.0
    jitter: tuple[int, int] = (0, 0)
    persistent_fp: Optional[PersistentFPSpec] = None
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.fp_rate <= 1.0 and 0.0 <= self.fn_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        jitter = (int(self.jitter[0]), int(self.jitter[1]))
        if jitter[0] > jitter[1]:
            raise ValueError(f"jitter range is reversed: {jitter}")
        object.__setattr__(self, "jitter", jitter)

    def to_json(self) -> dict:
        out = {
            "fp_rate": self.fp_rate,
            "fn_rate": self.fn_rate,
            "jitter": list(self.jitter),
            "seed": self.seed,
        }
        if self.persistent_fp is not None:
            out["persistent_fp"] = self.persistent_fp.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseSpec":
        pfp = obj.get("persistent_fp")
        return cls(
            fp_rate=float(obj.get("fp_rate", 0.0)),
            fn_rate=float(obj.get("fn_rate", 0.0)),
            jitter=tuple(obj.get("jitter", (0, 0))),
            persistent_fp=None if pfp is None else PersistentFPSpec.from_json(pfp),
            seed=int(obj.get("seed", 0)),
        )


def demo_scenario() -> ScenarioSpec:
    """Bundled demo: two bouncing instances, one mid-video birth/death."""
    num_frames = 60
    motion = tuple(
        (1.0, 0.0, 1.0 if (f // 10) % 2 == 0 else -1.0,
         0.0, 1.0, -1.0 if (f // 14) % 2 == 0 else 1.0)
        for f in range(num_frames - 1)
    )
    return ScenarioSpec(
        width=96,
        height=96,
        num_frames=num_frames,
        instances=(
            InstanceSpec(0, 60, EllipseSpec(30.0, 34.0, 13.0, 10.0)),
            InstanceSpec(12, 48, EllipseSpec(66.0, 62.0, 11.0, 12.0)),
        ),
        motion=motion,
        seed=7,
    )


def demo_noise() -> NoiseSpec:
    return NoiseSpec(fp_rate=0.2, fn_rate=0.05, jitter=(-2, 0), seed=11)


def rasterize_ellipse(shape: EllipseSpec, width: int, height: int) -> Mask:
    ys, xs = np.mgrid[0:height, 0:width]
    inside = ((xs - shape.cx) / shape.ax) ** 2 + ((ys - shape.cy) / shape.ay) ** 2 <= 1.0
    return rle_encode(inside)


def generate_ground_truth(spec: ScenarioSpec) -> tuple[list[SegmentSet], list[WarpField]]:
    """Rasterize the scenario into per-frame sets plus the exact warps.

    An instance is rasterized at birth and then carried frame to frame by
    the scene warp itself, so warp files reproduce ground-truth motion
    exactly (pixels leaving the frame are gone for good).
    """
    warps = [
        WarpField(f, f + 1, spec.step_affine(f)) for f in range(spec.num_frames - 1)
    ]
    blank = Mask.empty(spec.width, spec.height)
    current: list[Mask] = [blank] * len(spec.instances)
    frames: list[SegmentSet] = []
    for f in range(spec.num_frames):
        for k, inst in enumerate(spec.instances):
            if f == inst.birth_frame:
                m = rasterize_ellipse(inst.shape, spec.width, spec.height)
                if m.is_empty():
                    raise ValueError(f"instance {k} rasterizes to nothing at birth")
                current[k] = m
            elif inst.birth_frame < f < inst.death_frame:
                current[k] = warp_mask(current[k], spec.step_affine(f - 1))
            else:
                current[k] = blank
        alive = [k for k in range(len(spec.instances)) if not current[k].is_empty()]
        masks = enforce_nonoverlap([current[k] for k in alive], list(range(len(alive))))
        keep = [(k, m) for k, m in zip(alive, masks) if not m.is_empty()]
        frames.append(
            SegmentSet(f, [m for _, m in keep], ids=[k for k, _ in keep])
        )
    return frames, warps


def _disk(radius: int) -> np.ndarray:
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    return xs * xs + ys * ys <= radius * radius


def _jittered(mask: Mask, radius: int) -> Mask:
    if radius == 0:
        return mask
    arr = mask.to_array()
    if radius > 0:
        out = ndimage.binary_dilation(arr, structure=_disk(radius))
    else:
        out = ndimage.binary_erosion(arr, structure=_disk(-radius), border_value=0)
    return rle_encode(out)


def _sample_blob(
    rng: np.random.Generator, width: int, height: int, occupied: np.ndarray, tries: int = 50
) -> Optional[Mask]:
    """A random ellipse disjoint from everything already on the frame."""
    max_ax = max(3.0, min(width, height) / 8.0)
    for _ in range(tries):
        ax = rng.uniform(2.0, max_ax)
        ay = rng.uniform(2.0, max_ax)
        cx = rng.uniform(ax, width - 1 - ax)
        cy = rng.uniform(ay, height - 1 - ay)
        blob = rasterize_ellipse(EllipseSpec(cx, cy, ax, ay), width, height)
        if blob.is_empty():
            continue
        if not np.any(blob.to_array() & occupied):
            return blob
    return None


def corrupt(
    gt: Sequence[SegmentSet],
    noise: NoiseSpec,
    *,
    scenario: Optional[ScenarioSpec] = None,
) -> list[SegmentSet]:
    """Degrade ground truth into detector-style output.

    True segments keep their ids (harmless: the engine ignores detection
    ids); injected blobs carry no id.  With all rates zero and zero
    jitter the output equals the input.  A scenario is only needed when a
    persistent spurious blob must follow the scene motion.
    """
    rng = np.random.default_rng(noise.seed)
    pfp_mask: Optional[Mask] = None
    out: list[SegmentSet] = []
    for seg_set in gt:
        masks: list[Mask] = []
        ids: list[Optional[int]] = []
        gt_ids = seg_set.ids if seg_set.ids is not None else list(range(len(seg_set.segments)))
        for mask, gid in zip(seg_set.segments, gt_ids):
            dropped = noise.fn_rate > 0 and rng.random() < noise.fn_rate
            radius = int(rng.integers(noise.jitter[0], noise.jitter[1] + 1))
            if dropped:
                continue
            jm = _jittered(mask, radius)
            if not jm.is_empty():
                masks.append(jm)
                ids.append(gid)
        if masks:
            masks = enforce_nonoverlap(masks, list(range(len(masks))))
            keep = [(m, i) for m, i in zip(masks, ids) if not m.is_empty()]
            masks = [m for m, _ in keep]
            ids = [i for _, i in keep]

        if seg_set.segments:
            width, height = seg_set.segments[0].width, seg_set.segments[0].height
        elif scenario is not None:
            width, height = scenario.width, scenario.height
        elif masks:
            width, height = masks[0].width, masks[0].height
        else:
            width = height = None  # type: ignore[assignment]

        if width is not None:
            occupied = np.zeros((height, width), dtype=bool)
            for m in seg_set.segments:
                occupied |= m.to_array()
            for m in masks:
                occupied |= m.to_array()

            pfp = noise.persistent_fp
            if pfp is not None:
                if seg_set.frame_index == pfp.start_frame:
                    pfp_mask = rasterize_ellipse(pfp.shape, width, height)
                elif (
                    pfp_mask is not None
                    and pfp.start_frame < seg_set.frame_index < pfp.start_frame + pfp.duration
                ):
                    if scenario is not None:
                        pfp_mask = warp_mask(
                            pfp_mask, scenario.step_affine(seg_set.frame_index - 1)
                        )
                else:
                    pfp_mask = None
                if pfp_mask is not None:
                    clipped = rle_encode(pfp_mask.to_array() & ~occupied)
                    if not clipped.is_empty():
                        masks.append(clipped)
                        ids.append(None)
                        occupied |= clipped.to_array()

            if noise.fp_rate > 0 and rng.random() < noise.fp_rate:
                blob = _sample_blob(rng, width, height, occupied)
                if blob is not None:
                    masks.append(blob)
                    ids.append(None)

        out.append(SegmentSet(seg_set.frame_index, masks, ids=ids if masks else None))
    return out
