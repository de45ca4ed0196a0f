"""Timestamps and experiment-day arithmetic.

All timestamps are naive local ISO strings, "YYYY-MM-DDTHH:MM:SS", with
seconds precision. The fixed width makes lexicographic order chronological,
which the event log relies on for replay. Experiment days are 0-based indices
relative to a configured start date; day boundaries fall at midnight.
"""

from __future__ import annotations

import re
from datetime import date, datetime, timedelta

TS_FORMAT = "%Y-%m-%dT%H:%M:%S"
_TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}$")


class BadTimestamp(ValueError):
    pass


def check_ts(ts: str) -> str:
    if not isinstance(ts, str) or not _TS_RE.match(ts):
        raise BadTimestamp(f"timestamp must be YYYY-MM-DDTHH:MM:SS, got {ts!r}")
    try:
        datetime.strptime(ts, TS_FORMAT)
    except ValueError as exc:
        raise BadTimestamp(str(exc)) from None
    return ts


def parse_ts(ts: str) -> datetime:
    return datetime.strptime(check_ts(ts), TS_FORMAT)


def format_ts(dt: datetime) -> str:
    return dt.strftime(TS_FORMAT)


def ts_at(start_date: str, day: int, hms: str = "00:00:00") -> str:
    """Timestamp of clock time `hms` on experiment day `day`."""
    if day < 0:
        raise ValueError(f"day index must be >= 0, got {day}")
    d = date.fromisoformat(start_date) + timedelta(days=day)
    return check_ts(f"{d.isoformat()}T{hms}")


def day_index(start_date: str, ts: str) -> int:
    """Experiment day the timestamp falls on; negative before the start."""
    return (parse_ts(ts).date() - date.fromisoformat(start_date)).days


def add_minutes(ts: str, minutes: float) -> str:
    return format_ts(parse_ts(ts) + timedelta(minutes=minutes))
