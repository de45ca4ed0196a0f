"""Append-only event log with idempotent ingest and deterministic replay.

On-disk format, one JSON object per line, stable key order:

    {"kind": "rating", "ts": "2026-01-05T09:30:00", "user_id": "u1", "value": 4}
    {"kind": "message_sent", "ts": ..., "user_id": ..., "value": "<message_id>"}
    {"kind": "message_read", "ts": ..., "user_id": ..., "value": "<message_id>"}

This schema is the replay contract: rebuilding state from the file must be
bit-for-bit equivalent to the live run. Duplicate events (same user,
timestamp, kind, value) are acknowledged but stored once. Per-user ordering is
by (ts, kind, value), so same-timestamp events replay in a stable order no
matter the arrival order.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from bisect import insort
from dataclasses import dataclass
from pathlib import Path

from .timebase import check_ts

KIND_RATING = "rating"
KIND_SENT = "message_sent"
KIND_READ = "message_read"
EVENT_KINDS = (KIND_RATING, KIND_SENT, KIND_READ)

RATING_MIN, RATING_MAX = 1, 7


class EventValidationError(ValueError):
    """Raised when an event is malformed; the message is the rejection reason."""


@dataclass(frozen=True)
class Event:
    user_id: str
    ts: str
    kind: str
    value: object  # int rating, or message_id string

    def __post_init__(self):
        if not self.user_id or not isinstance(self.user_id, str):
            raise EventValidationError("user_id must be a nonempty string")
        check_ts(self.ts)
        if self.kind not in EVENT_KINDS:
            raise EventValidationError(f"unknown event kind {self.kind!r}")
        if self.kind == KIND_RATING:
            v = self.value
            if isinstance(v, bool) or not isinstance(v, int):
                raise EventValidationError("rating value must be an integer")
            if not RATING_MIN <= v <= RATING_MAX:
                raise EventValidationError(
                    f"rating {v} outside scale {RATING_MIN}..{RATING_MAX}"
                )
        else:
            if not self.value or not isinstance(self.value, str):
                raise EventValidationError("message events need a message_id string")

    @property
    def key(self) -> tuple:
        return (self.user_id, self.ts, self.kind, str(self.value))

    @property
    def event_id(self) -> str:
        digest = hashlib.sha256("\x1f".join(self.key).encode("utf-8"))
        return digest.hexdigest()[:12]

    @property
    def sort_key(self) -> tuple:
        return (self.ts, self.kind, str(self.value))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ts": self.ts, "user_id": self.user_id, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(user_id=d["user_id"], ts=d["ts"], kind=d["kind"], value=d["value"])


class EventLog:
    """Per-deployment event store. Ingestion is serialized; reads see a
    consistent snapshot because lists are only appended under the lock."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._seen: set[tuple] = set()
        self._by_user: dict[str, list[tuple[tuple, Event]]] = {}
        self._sent_ids: dict[str, set[str]] = {}
        self._fh = None
        if self.path is not None and self.path.exists():
            self._replay_file()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")

    def _replay_file(self):
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    e = Event.from_dict(json.loads(line))
                except (json.JSONDecodeError, KeyError, EventValidationError) as exc:
                    raise EventValidationError(
                        f"{self.path}:{lineno}: corrupt event log line: {exc}"
                    ) from exc
                self._admit(e)

    def _admit(self, e: Event) -> bool:
        if e.key in self._seen:
            return False
        if e.kind == KIND_READ and e.value not in self._sent_ids.get(e.user_id, ()):
            raise EventValidationError(
                f"message_read references {e.value!r}, never sent to {e.user_id}"
            )
        self._seen.add(e.key)
        insort(self._by_user.setdefault(e.user_id, []), (e.sort_key, e))
        if e.kind == KIND_SENT:
            self._sent_ids.setdefault(e.user_id, set()).add(e.value)
        return True

    def ingest(self, e: Event) -> dict:
        """Validate, dedupe, persist. Returns {event_id, duplicate}."""
        with self._lock:
            fresh = self._admit(e)
            if fresh and self._fh is not None:
                self._fh.write(json.dumps(e.to_dict(), sort_keys=True) + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
        return {"event_id": e.event_id, "duplicate": not fresh}

    def for_user(self, user_id: str, before: str | None = None) -> list[Event]:
        """Time-ordered events, optionally restricted to ts < before."""
        with self._lock:
            rows = self._by_user.get(user_id, [])
            if before is None:
                return [e for _, e in rows]
            return [e for k, e in rows if k[0] < before]

    def users(self) -> list[str]:
        with self._lock:
            return sorted(self._by_user)

    def was_sent(self, user_id: str, message_id: str) -> bool:
        with self._lock:
            return message_id in self._sent_ids.get(user_id, ())

    def __len__(self) -> int:
        with self._lock:
            return len(self._seen)

    def close(self):
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None
