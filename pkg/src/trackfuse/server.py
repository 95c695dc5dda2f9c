"""Reference stdio backend serving the synthetic warp propagator.

Reads one JSON request per line on stdin and writes one JSON response
per line on stdout until EOF.  Useful both as a real backend for
``trackfuse run --backend`` and as the known-good peer in protocol
tests.  Malformed or unanswerable requests produce ``{"error": ...}``
responses; the loop never crashes on bad input.
"""

from __future__ import annotations

import json
import sys
from typing import Sequence

import jsonschema

from . import schemas
from .errors import PropagationError, TrackfuseError
from .masks import Mask
from .warp import MemoryEntry, SyntheticWarpPropagator, WarpField


def handle_request(propagator: SyntheticWarpPropagator, obj: dict) -> dict:
    try:
        schemas.validate(obj, schemas.PROPAGATE_REQUEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        return {"error": f"bad request: {exc.message}"}
    try:
        entries = [
            MemoryEntry(e["frame"], e["id"], Mask.from_json(e["mask"])) for e in obj["entries"]
        ]
        query = obj["query_frame"]
        if obj["op"] == "align":
            if len(entries) != 1:
                return {"error": "align takes exactly one entry"}
            entry = entries[0]
            moved = propagator.align_to_reference(entry.mask, entry.frame_index, query)
            masks = {entry.trajectory_id: moved}
        else:
            masks = propagator.propagate(entries, query)
        return {
            "masks": [
                {"id": tid, "mask": masks[tid].to_json()} for tid in sorted(masks)
            ]
        }
    except (TrackfuseError, PropagationError, ValueError) as exc:
        return {"error": str(exc)}


def serve(warps: Sequence[WarpField], stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    propagator = SyntheticWarpPropagator(warps)
    for line in stdin:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"error": f"malformed request JSON: {exc.msg}"}
        else:
            response = handle_request(propagator, obj)
        stdout.write(json.dumps(response, separators=(",", ":")) + "\n")
        stdout.flush()
