"""Readers and writers for the JSONL/JSON file formats.

Detections and results share one line-per-frame schema so long
untrimmed videos stream naturally.  Loaders validate structure against
the published schemas and report failures as ``path:line``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import jsonschema

from . import schemas
from .errors import InputFormatError, MaskFormatError, TrackfuseError
from .masks import Mask, SegmentSet
from .pipeline import Config, VideoResult
from .warp import WarpField


def _parse_line(path, line_no: int, line: str, schema) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise InputFormatError(path, line_no, f"invalid JSON: {exc.msg}") from exc
    try:
        schemas.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        raise InputFormatError(path, line_no, f"schema violation: {exc.message}") from exc
    return obj


def segment_set_to_record(seg_set: SegmentSet) -> dict:
    segments = []
    ids = seg_set.ids if seg_set.ids is not None else (None,) * len(seg_set.segments)
    scores = seg_set.scores if seg_set.scores is not None else (None,) * len(seg_set.segments)
    for mask, sid, score in zip(seg_set.segments, ids, scores):
        entry: dict = {}
        if sid is not None:
            entry["id"] = int(sid)
        if score is not None:
            entry["score"] = float(score)
        entry["mask"] = mask.to_json()
        segments.append(entry)
    return {"frame": seg_set.frame_index, "segments": segments}


def record_to_segment_set(obj: dict) -> SegmentSet:
    masks, ids, scores = [], [], []
    any_id = False
    any_score = False
    for entry in obj["segments"]:
        masks.append(Mask.from_json(entry["mask"]))
        sid = entry.get("id")
        score = entry.get("score")
        ids.append(sid)
        scores.append(1.0 if score is None else float(score))
        any_id = any_id or sid is not None
        any_score = any_score or score is not None
    return SegmentSet(
        obj["frame"],
        masks,
        scores=scores if any_score else None,
        ids=ids if any_id else None,
    )


def load_frames_jsonl(path) -> list[SegmentSet]:
    """Load a detections/results file; frames must be 0..n-1 in order."""
    path = Path(path)
    out: list[SegmentSet] = []
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputFormatError(path, None, str(exc)) from exc
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = _parse_line(path, line_no, line, schemas.FRAME_RECORD_SCHEMA)
        try:
            seg_set = record_to_segment_set(obj)
            seg_set.validate()
        except (MaskFormatError, ValueError) as exc:
            raise InputFormatError(path, line_no, str(exc)) from exc
        if seg_set.frame_index != len(out):
            raise InputFormatError(
                path, line_no, f"expected frame {len(out)}, got {seg_set.frame_index}"
            )
        out.append(seg_set)
    if not out:
        raise InputFormatError(path, None, "no frames found")
    return out


def dump_frames_jsonl(frames: Sequence[SegmentSet], path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for seg_set in frames:
            fh.write(json.dumps(segment_set_to_record(seg_set), separators=(",", ":")))
            fh.write("\n")


def load_warps_jsonl(path) -> list[WarpField]:
    path = Path(path)
    out: list[WarpField] = []
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputFormatError(path, None, str(exc)) from exc
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = _parse_line(path, line_no, line, schemas.WARP_RECORD_SCHEMA)
        try:
            out.append(WarpField(obj["from"], obj["to"], tuple(obj["affine"])))
        except ValueError as exc:
            raise InputFormatError(path, line_no, str(exc)) from exc
    return out


def dump_warps_jsonl(warps: Sequence[WarpField], path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for w in warps:
            record = {"from": w.from_frame, "to": w.to_frame, "affine": list(w.affine)}
            fh.write(json.dumps(record, separators=(",", ":")))
            fh.write("\n")


def _load_json_file(path, schema) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputFormatError(path, None, str(exc)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    try:
        schemas.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        raise InputFormatError(path, None, f"schema violation: {exc.message}") from exc
    return obj


def load_config(path) -> Config:
    obj = _load_json_file(path, schemas.CONFIG_SCHEMA)
    try:
        return Config.from_json(obj)
    except (TrackfuseError, ValueError) as exc:
        raise InputFormatError(path, None, str(exc)) from exc


def load_scenario(path):
    from .simulate import ScenarioSpec

    obj = _load_json_file(path, schemas.SCENARIO_SCHEMA)
    try:
        return ScenarioSpec.from_json(obj)
    except ValueError as exc:
        raise InputFormatError(path, None, str(exc)) from exc


def load_noise(path):
    from .simulate import NoiseSpec

    obj = _load_json_file(path, schemas.NOISE_SCHEMA)
    try:
        return NoiseSpec.from_json(obj)
    except ValueError as exc:
        raise InputFormatError(path, None, str(exc)) from exc


def dump_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_metadata(result: VideoResult, backend: Optional[str] = None) -> dict:
    return {
        "version": schemas.SCHEMA_VERSION,
        "engine": result.version,
        "config": result.config.to_json(),
        "seed": result.seed,
        "frames": len(result.frames),
        "backend": backend,
    }
