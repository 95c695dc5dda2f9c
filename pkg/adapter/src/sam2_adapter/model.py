"""Live session: SAM2 video predictor behind the propagator protocol.

Stored masks are fed to the predictor as dense mask prompts (not points
or boxes) and propagated to the query frame; logits are binarized at
zero, i.e. probability 0.5.  One process serves one video; the frames
directory is scanned once at startup.  Requests whose entries already
sit at the query frame are answered from the stored masks directly, so
the identity contract holds bit-exactly regardless of the model.

Imports of torch/sam2 happen lazily so the replay path stays dependency
free.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .protocol import BadRequest, decode_mask, encode_mask, identity_answer, masks_response

FRAME_SUFFIXES = (".jpg", ".jpeg", ".png")


def _list_frames(frames_dir) -> list[Path]:
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise ValueError(f"frames directory not found: {frames_dir}")
    frames = sorted(
        p for p in frames_dir.iterdir() if p.suffix.lower() in FRAME_SUFFIXES
    )
    if not frames:
        raise ValueError(f"no frame images in {frames_dir}")
    return frames


class Sam2Session:
    """Single-video serving state around a SAM2 video predictor."""

    def __init__(self, frames_dir, checkpoint, model_cfg="configs/sam2.1/sam2.1_hiera_b+.yaml",
                 device="cuda"):
        self.frames = _list_frames(frames_dir)
        try:
            import torch  # noqa: F401
            from sam2.build_sam import build_sam2_video_predictor
        except ImportError as exc:
            raise RuntimeError(
                "the live adapter needs the 'model' extra (torch + sam2); "
                "use --replay for fixture mode"
            ) from exc
        self._predictor = build_sam2_video_predictor(model_cfg, checkpoint, device=device)
        self._state = self._predictor.init_state(video_path=str(frames_dir))

    def _check_frame(self, frame: int) -> None:
        if not (0 <= frame < len(self.frames)):
            raise BadRequest(f"frame {frame} is not available ({len(self.frames)} frames)")

    def handle(self, op, entries, query_frame) -> dict:
        for entry in entries:
            self._check_frame(entry["frame"])
        self._check_frame(query_frame)
        direct = identity_answer(entries, query_frame)
        if direct is not None:
            return direct

        predictor, state = self._predictor, self._state
        predictor.reset_state(state)
        latest = {}
        for entry in entries:  # most recent entry per id wins
            prev = latest.get(entry["id"])
            if prev is None or entry["frame"] >= prev["frame"]:
                latest[entry["id"]] = entry
        start = None
        for entry in latest.values():
            mask = decode_mask(entry["mask"])
            predictor.add_new_mask(state, entry["frame"], entry["id"], mask)
            start = entry["frame"] if start is None else max(start, entry["frame"])

        reverse = query_frame < start
        span = abs(query_frame - start)
        out = {}
        for frame_idx, obj_ids, mask_logits in predictor.propagate_in_video(
            state,
            start_frame_idx=start,
            max_frame_num_to_track=span,
            reverse=reverse,
        ):
            if frame_idx != query_frame:
                continue
            for obj_id, logits in zip(obj_ids, mask_logits):
                bitmap = (logits[0] > 0.0).cpu().numpy().astype(bool)
                out[int(obj_id)] = encode_mask(bitmap)
            break
        missing = set(latest) - set(out)
        if missing:
            # out-of-view objects still need an explicit empty answer
            h, w = decode_mask(next(iter(latest.values()))["mask"]).shape
            empty = encode_mask(np.zeros((h, w), dtype=bool))
            for obj_id in missing:
                out[obj_id] = empty
        return masks_response(out)
