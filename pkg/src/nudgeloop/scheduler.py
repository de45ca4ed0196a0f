"""Cron-like job scheduling over a wall or virtual clock.

Three decision jobs per day, one nightly training job, and a one-shot
clustering job on the day after the exploration week. Completion is tracked
per (job, day) in a durable high-water file, so a restarted process fires
each missed job exactly once, in chronological order, and never re-fires a
completed one. Failures are recorded and retried on the next tick.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from .timebase import check_ts, format_ts, parse_ts, day_index, ts_at

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScheduleConfig:
    decision_times: tuple[str, str, str] = ("10:00:00", "14:00:00", "21:00:00")
    training_time: str = "23:59:00"
    clustering_day: int = 7  # 0-based: the first day after the exploration week
    clustering_time: str = "00:05:00"
    timezone: str = "local"
    clock: str = "virtual"  # "virtual" or "wall"

    def __post_init__(self):
        if len(self.decision_times) != 3 or list(self.decision_times) != sorted(
            set(self.decision_times)
        ):
            raise ValueError("decision times must be three strictly increasing clock times")
        if self.clustering_day < 0:
            raise ValueError("clustering_day must be >= 0")
        if self.clock not in ("virtual", "wall"):
            raise ValueError(f"clock must be 'virtual' or 'wall', got {self.clock!r}")

    def to_dict(self) -> dict:
        return {
            "decision_times": list(self.decision_times),
            "training_time": self.training_time,
            "clustering_day": self.clustering_day,
            "clustering_time": self.clustering_time,
            "timezone": self.timezone,
            "clock": self.clock,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduleConfig":
        return cls(
            decision_times=tuple(d.get("decision_times", cls.decision_times)),
            training_time=d.get("training_time", cls.training_time),
            clustering_day=d.get("clustering_day", cls.clustering_day),
            clustering_time=d.get("clustering_time", cls.clustering_time),
            timezone=d.get("timezone", cls.timezone),
            clock=d.get("clock", cls.clock),
        )


class VirtualClock:
    """Deterministic clock for tests and simulation; only moves forward."""

    def __init__(self, start: str):
        self._now = check_ts(start)

    def now(self) -> str:
        return self._now

    def advance_to(self, ts: str):
        check_ts(ts)
        if ts < self._now:
            raise ValueError(f"clock cannot move backwards ({self._now} -> {ts})")
        self._now = ts

    def advance_minutes(self, minutes: float):
        self.advance_to(format_ts(parse_ts(self._now) + timedelta(minutes=minutes)))


class WallClock:
    def now(self) -> str:
        return format_ts(datetime.now())


class Scheduler:
    """Fires jobs through caller-supplied callables:

    jobs.decide(day, daypart), jobs.train(day), jobs.cluster(day).
    """

    def __init__(
        self,
        start_date: str,
        config: ScheduleConfig,
        jobs,
        state_path: str | os.PathLike,
        clock=None,
    ):
        self.start_date = start_date
        self.config = config
        self.jobs = jobs
        self.clock = clock or (
            WallClock() if config.clock == "wall" else VirtualClock(ts_at(start_date, 0))
        )
        self.state_path = Path(state_path)
        self._lock = threading.RLock()
        self._done: set[str] = set()
        self.failures: dict[str, str] = {}
        if self.state_path.exists():
            with open(self.state_path, encoding="utf-8") as fh:
                saved = json.load(fh)
            self._done = set(saved.get("done", []))
            self.failures = dict(saved.get("failures", {}))

    def _persist(self):
        tmp = self.state_path.with_suffix(".tmp")
        payload = {"done": sorted(self._done), "failures": self.failures}
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.state_path)

    def _due(self, now: str) -> list[tuple[str, str]]:
        """(ts, key) for every job scheduled at or before `now`, oldest first."""
        last_day = day_index(self.start_date, now)
        out = []
        for day in range(0, last_day + 1):
            if day == self.config.clustering_day:
                out.append((ts_at(self.start_date, day, self.config.clustering_time), f"cluster:{day}"))
            for dp, t in enumerate(self.config.decision_times):
                out.append((ts_at(self.start_date, day, t), f"decide:{day}:{dp}"))
            out.append((ts_at(self.start_date, day, self.config.training_time), f"train:{day}"))
        return sorted((ts, key) for ts, key in out if ts <= now)

    def _run(self, key: str):
        kind, rest = key.split(":", 1)
        if kind == "decide":
            day, dp = rest.split(":")
            self.jobs.decide(int(day), int(dp))
        elif kind == "train":
            self.jobs.train(int(rest))
        elif kind == "cluster":
            self.jobs.cluster(int(rest))
        else:
            raise ValueError(f"unknown job key {key}")

    def tick(self, now: str | None = None) -> list[str]:
        """Fire everything due and not yet done; returns the keys that ran."""
        now = now or self.clock.now()
        fired = []
        with self._lock:
            for ts, key in self._due(now):
                if key in self._done:
                    continue
                try:
                    self._run(key)
                except Exception as exc:  # recorded, retried next tick
                    log.error("job %s failed: %s", key, exc)
                    self.failures[key] = str(exc)
                    self._persist()
                    continue
                self._done.add(key)
                self.failures.pop(key, None)
                self._persist()
                fired.append(key)
        return fired

    def done(self) -> set[str]:
        with self._lock:
            return set(self._done)

    def run_forever(self, poll_seconds: float = 30.0, stop_event: threading.Event | None = None):
        """Wall-clock loop for server mode."""
        while stop_event is None or not stop_event.is_set():
            self.tick()
            if stop_event is not None and stop_event.wait(poll_seconds):
                break
            if stop_event is None:
                time.sleep(poll_seconds)
