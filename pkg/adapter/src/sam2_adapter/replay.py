"""Fixture-replay session: serve recorded request/response exchanges.

Runs without a GPU, a checkpoint, or the sam2 package.  Identity
requests (every entry already at the query frame) are answered from the
stored masks, matching what the live adapter does; anything else must
match a recorded fixture line ``{"request": {...}, "response": {...}}``
after key-order canonicalization.
"""

from __future__ import annotations

import json
from pathlib import Path

from .protocol import identity_answer


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class ReplaySession:
    def __init__(self, fixtures_path):
        self._responses = {}
        path = Path(fixtures_path)
        for line_no, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                request, response = record["request"], record["response"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad fixture line: {exc}") from exc
            self._responses[canonical(request)] = response

    def handle(self, op, entries, query_frame) -> dict:
        request = {"op": op, "entries": entries, "query_frame": query_frame}
        recorded = self._responses.get(canonical(request))
        if recorded is not None:
            return recorded
        direct = identity_answer(entries, query_frame)
        if direct is not None:
            return direct
        return {"error": f"no recorded fixture for query_frame {query_frame}"}
