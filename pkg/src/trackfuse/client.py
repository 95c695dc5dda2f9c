"""Client for external propagator backends speaking the stdio protocol.

One request at a time travels as a JSON line on the backend's stdin; the
reply comes back as a JSON line on its stdout.  A request is either

    {"op": "propagate", "entries": [{"frame", "id", "mask"}...], "query_frame": q}
    {"op": "align",     "entries": [one entry],                  "query_frame": q}

and a reply is ``{"masks": [{"id", "mask"}...]}`` or ``{"error": msg}``.
The client enforces a timeout (``TRACKFUSE_BACKEND_TIMEOUT_MS``, default
30000) and rejects replies whose ids do not exactly cover the request.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import threading
import time
from typing import Dict, Optional, Sequence

import jsonschema

from . import schemas
from .errors import ProtocolError
from .masks import Mask
from .warp import MemoryEntry

DEFAULT_TIMEOUT_MS = 30000
TIMEOUT_ENV = "TRACKFUSE_BACKEND_TIMEOUT_MS"


def _timeout_seconds(timeout_ms: Optional[int]) -> float:
    if timeout_ms is None:
        timeout_ms = int(os.environ.get(TIMEOUT_ENV, DEFAULT_TIMEOUT_MS))
    return timeout_ms / 1000.0


class BackendClient:
    """Owns one backend subprocess and serializes requests to it."""

    def __init__(self, command, timeout_ms: Optional[int] = None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self._timeout = _timeout_seconds(timeout_ms)
        self._lock = threading.Lock()
        self._buffer = b""
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot start backend {self.command!r}: {exc}") from exc

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=5)
        except Exception:
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_line(self, deadline: float) -> bytes:
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ProtocolError(
                    f"backend timed out after {self._timeout:.1f}s: {self.command!r}"
                )
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if chunk == b"":
                code = self._proc.poll()
                raise ProtocolError(f"backend exited (status {code}) before replying")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def request(self, payload: dict) -> dict:
        with self._lock:  # one in-flight request per backend
            if self._proc.poll() is not None:
                raise ProtocolError(f"backend is not running (status {self._proc.returncode})")
            line = json.dumps(payload, separators=(",", ":")) + "\n"
            try:
                self._proc.stdin.write(line.encode())
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ProtocolError(f"backend pipe closed: {exc}") from exc
            raw = self._read_line(time.monotonic() + self._timeout)
        try:
            response = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed backend response: {raw[:200]!r}") from exc
        try:
            schemas.validate(response, schemas.PROPAGATE_RESPONSE_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ProtocolError(f"backend response violates schema: {exc.message}") from exc
        if "error" in response:
            raise ProtocolError(f"backend error: {response['error']}")
        return response


class PropagatorClient:
    """Propagator contract implemented over a backend subprocess."""

    def __init__(self, command, timeout_ms: Optional[int] = None):
        self._client = BackendClient(command, timeout_ms)

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @staticmethod
    def _entry_payload(entries: Sequence[MemoryEntry]) -> list[dict]:
        return [
            {"frame": e.frame_index, "id": e.trajectory_id, "mask": e.mask.to_json()}
            for e in entries
        ]

    def _masks_by_id(self, response: dict, expected_ids: set[int]) -> Dict[int, Mask]:
        out: Dict[int, Mask] = {}
        for item in response["masks"]:
            tid = item["id"]
            if tid not in expected_ids:
                raise ProtocolError(f"backend returned mask for unknown id {tid}")
            if tid in out:
                raise ProtocolError(f"backend returned duplicate mask for id {tid}")
            out[tid] = Mask.from_json(item["mask"])
        missing = expected_ids - set(out)
        if missing:
            raise ProtocolError(f"backend omitted masks for ids {sorted(missing)}")
        return {tid: out[tid] for tid in sorted(out)}

    def propagate(self, entries: Sequence[MemoryEntry], query_frame: int) -> Dict[int, Mask]:
        if not entries:
            return {}
        payload = {
            "op": "propagate",
            "entries": self._entry_payload(entries),
            "query_frame": int(query_frame),
        }
        response = self._client.request(payload)
        return self._masks_by_id(response, {e.trajectory_id for e in entries})

    def align_to_reference(self, mask: Mask, from_frame: int, ref_frame: int) -> Mask:
        payload = {
            "op": "align",
            "entries": [{"frame": int(from_frame), "id": 0, "mask": mask.to_json()}],
            "query_frame": int(ref_frame),
        }
        response = self._client.request(payload)
        return self._masks_by_id(response, {0})[0]
