"""Render predicted mask boundaries onto frame images for inspection."""

from __future__ import annotations

import colorsys
import shutil
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InputFormatError
from .masks import SegmentSet


def color_for_id(instance_id: int) -> tuple[int, int, int]:
    """Stable, well-spread color per identity (golden-ratio hue walk)."""
    hue = (instance_id * 0.6180339887498949) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.95, 1.0)
    return int(r * 255), int(g * 255), int(b * 255)


def _boundary(mask_arr: np.ndarray) -> np.ndarray:
    eroded = ndimage.binary_erosion(mask_arr, border_value=0)
    return mask_arr & ~eroded


def list_frame_images(frames_dir) -> list[Path]:
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise InputFormatError(frames_dir, None, "not a directory")
    images = sorted(p for p in frames_dir.iterdir() if p.suffix.lower() == ".png")
    if not images:
        raise InputFormatError(frames_dir, None, "no .png frames found")
    return images


def render_overlays(frames_dir, preds: Sequence[SegmentSet], out_dir) -> list[Path]:
    """Write one overlay PNG per frame; untouched frames are copied."""
    images = list_frame_images(frames_dir)
    if len(images) < len(preds):
        raise InputFormatError(
            frames_dir, None, f"{len(preds)} frames predicted but only {len(images)} images"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for seg_set, src in zip(preds, images):
        dst = out_dir / src.name
        if not seg_set.segments:
            shutil.copyfile(src, dst)
            written.append(dst)
            continue
        img = Image.open(src).convert("RGB")
        arr = np.array(img)
        ids = seg_set.ids if seg_set.ids is not None else range(len(seg_set.segments))
        for mask, sid in zip(seg_set.segments, ids):
            if mask.height != arr.shape[0] or mask.width != arr.shape[1]:
                raise InputFormatError(
                    src, None,
                    f"mask is {mask.width}x{mask.height} but image is "
                    f"{arr.shape[1]}x{arr.shape[0]}",
                )
            edge = _boundary(mask.to_array())
            arr[edge] = color_for_id(0 if sid is None else int(sid))
        Image.fromarray(arr).save(dst)
        written.append(dst)
    return written
