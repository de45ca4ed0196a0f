"""Outbound integration client (provisional).

For deployments where an external platform owns the user-facing app, the
engine pushes selected messages out and pulls raw events in through this
minimal interface. The loopback implementation keeps everything in process
and is what tests and the simulator use.
"""

from __future__ import annotations

from typing import Protocol

from .catalog import MessageEntry
from .events import Event


class OutboundClient(Protocol):
    def post_message(self, user_id: str, entry: MessageEntry, ts: str) -> None:
        """Deliver a selected message to the user's device."""

    def fetch_events(self, since: str | None = None) -> list[Event]:
        """Pull user-generated events newer than `since`."""


class LoopbackAdapter:
    """Records outbound messages in memory; no external transport."""

    def __init__(self):
        self.outbox: list[tuple[str, MessageEntry, str]] = []

    def post_message(self, user_id: str, entry: MessageEntry, ts: str) -> None:
        self.outbox.append((user_id, entry, ts))

    def fetch_events(self, since: str | None = None) -> list[Event]:
        return []
