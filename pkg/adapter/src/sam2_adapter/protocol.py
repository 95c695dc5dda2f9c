"""Wire protocol: line-delimited JSON over stdin/stdout.

A request is one of

    {"op": "propagate", "entries": [{"frame", "id", "mask"}, ...], "query_frame": q}
    {"op": "align",     "entries": [exactly one entry],           "query_frame": q}

where a mask is ``{"w": int, "h": int, "runs": [int, ...]}`` (row-major
run lengths alternating zeros/ones, first run counts zeros).  The reply
is ``{"masks": [{"id", "mask"}, ...]}`` sorted by id, or
``{"error": message}``.  The serving loop answers bad input with an
error line instead of dying, and flushes after every reply so the
engine's timeout never trips on buffering.
"""

from __future__ import annotations

import json
import sys
from typing import Sequence

import numpy as np


class BadRequest(Exception):
    """Request cannot be served; the message goes into the error reply."""


def decode_mask(obj) -> np.ndarray:
    if not isinstance(obj, dict):
        raise BadRequest("mask must be an object")
    try:
        width, height, runs = int(obj["w"]), int(obj["h"]), list(obj["runs"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadRequest(f"bad mask object: {exc}") from exc
    if width < 1 or height < 1:
        raise BadRequest("mask dimensions must be positive")
    if not runs or any((not isinstance(r, int)) or r < 0 for r in runs):
        raise BadRequest("mask runs must be non-negative integers")
    if any(r == 0 for r in runs[1:]):
        raise BadRequest("only the first run may be zero")
    if sum(runs) != width * height:
        raise BadRequest("mask runs do not cover the grid")
    values = np.resize(np.array([False, True]), len(runs))
    return np.repeat(values, runs).reshape(height, width)


def encode_mask(bitmap: np.ndarray) -> dict:
    flat = np.asarray(bitmap, dtype=bool).ravel()
    boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], boundaries, [flat.size]))
    runs = [int(r) for r in np.diff(starts)]
    if flat[0]:
        runs = [0] + runs
    height, width = bitmap.shape
    return {"w": width, "h": height, "runs": runs}


def parse_request(obj) -> tuple[str, list[dict], int]:
    if not isinstance(obj, dict):
        raise BadRequest("request must be an object")
    op = obj.get("op")
    if op not in ("propagate", "align"):
        raise BadRequest(f"unknown op {op!r}")
    entries = obj.get("entries")
    if not isinstance(entries, list) or not entries:
        raise BadRequest("entries must be a non-empty list")
    if op == "align" and len(entries) != 1:
        raise BadRequest("align takes exactly one entry")
    parsed = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise BadRequest("entry must be an object")
        try:
            frame = int(entry["frame"])
            obj_id = int(entry["id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BadRequest(f"bad entry: {exc}") from exc
        decode_mask(entry.get("mask"))  # shape check up front
        parsed.append({"frame": frame, "id": obj_id, "mask": entry["mask"]})
    query = obj.get("query_frame")
    if not isinstance(query, int) or query < 0:
        raise BadRequest("query_frame must be a non-negative integer")
    return op, parsed, query


def masks_response(by_id: dict) -> dict:
    return {"masks": [{"id": k, "mask": by_id[k]} for k in sorted(by_id)]}


def identity_answer(entries: Sequence[dict], query_frame: int) -> dict | None:
    """Stored masks answer the request directly when nothing needs moving."""
    if any(e["frame"] != query_frame for e in entries):
        return None
    by_id = {}
    for e in entries:  # later entries win, matching most-recent semantics
        by_id[e["id"]] = e["mask"]
    return masks_response(by_id)


def serve_loop(session, stdin=None, stdout=None) -> None:
    """Answer requests until EOF; any failure becomes an error reply."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {"error": f"malformed request JSON: {exc.msg}"}
        else:
            try:
                op, entries, query = parse_request(obj)
                reply = session.handle(op, entries, query)
            except BadRequest as exc:
                reply = {"error": str(exc)}
            except Exception as exc:  # model failures must not kill the loop
                reply = {"error": f"{type(exc).__name__}: {exc}"}
        stdout.write(json.dumps(reply, separators=(",", ":")) + "\n")
        stdout.flush()
