"""Append-only request journal shared by the oracle and render clients.

Every outbound request is journaled before dispatch and every inbound
response before the caller observes it, so a journal file is a complete,
replayable record of one session's external traffic. Entries are JSON
lines; non-exchange lines (retries, notes) are tolerated by the replayer.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Iterable


def canonical_json(data: Any) -> str:
    """Stable serialization used for hashing and byte-equality checks."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class Journal:
    """Ordered log of request/response exchanges, optionally mirrored to a file."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.entries: list[dict] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists():
                self.entries = list(read_journal(self.path))

    def append(self, entry: dict) -> dict:
        with self._lock:
            entry = dict(entry)
            entry["seq"] = len(self.entries) + 1
            self.entries.append(entry)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(canonical_json(entry) + "\n")
        return entry

    def record_request(self, channel: str, kind: str, request_id: str,
                       payload: Any, meta: dict | None = None) -> None:
        self.append({
            "event": "request", "channel": channel, "kind": kind,
            "request_id": request_id, "payload": payload, "meta": meta or {},
        })

    def record_response(self, channel: str, kind: str, request_id: str,
                        data: Any, status: str = "ok") -> None:
        self.append({
            "event": "response", "channel": channel, "kind": kind,
            "request_id": request_id, "status": status, "data": data,
        })

    def record_note(self, note: str, **fields: Any) -> None:
        self.append({"event": "note", "note": note, **fields})

    def record_retry(self, channel: str, kind: str, request_id: str, attempt: int, reason: str) -> None:
        self.append({
            "event": "retry", "channel": channel, "kind": kind,
            "request_id": request_id, "attempt": attempt, "reason": reason,
        })

    def exchanges(self, channel: str | None = None) -> list[tuple[dict, dict]]:
        """Paired (request, response) entries, in request order."""
        pending: dict[str, dict] = {}
        pairs: list[tuple[dict, dict]] = []
        for entry in self.entries:
            if entry.get("event") == "request":
                pending[entry["request_id"]] = entry
            elif entry.get("event") == "response":
                req = pending.pop(entry["request_id"], None)
                if req is not None:
                    pairs.append((req, entry))
        if channel is not None:
            pairs = [(q, r) for q, r in pairs if q.get("channel") == channel]
        return pairs


def read_journal(path: str | Path) -> Iterable[dict]:
    """Parse a journal file; raises ValueError on a corrupt line."""
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: corrupt journal line: {exc}") from exc
    return out
