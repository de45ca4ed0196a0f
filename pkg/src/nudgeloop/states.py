"""Build feature states and rewards from the event log.

Features are computed from events strictly before the decision time of the
given daypart. Day-scoped features reset at midnight; the total rating count
is cumulative over the whole study. Rewards are evaluated at the boundary
that follows the action: the next decision time for morning and afternoon,
end of day (midnight) for the evening, so every reward reads the acting day's
own counters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .events import EventLog, KIND_RATING, KIND_READ, KIND_SENT
from .mdp import Dataset, Experience, StateVector
from .timebase import ts_at

DEFAULT_DECISION_TIMES = ("10:00:00", "14:00:00", "21:00:00")
END_OF_DAY = "24:00:00"  # sentinel, resolved to next-day midnight


@dataclass(frozen=True)
class RewardConfig:
    w_read: float = 0.5
    w_ratings: float = 0.5

    def __post_init__(self):
        if self.w_read < 0 or self.w_ratings < 0:
            raise ValueError("reward weights must be >= 0")

    def to_dict(self) -> dict:
        return {"w_read": self.w_read, "w_ratings": self.w_ratings}

    @classmethod
    def from_dict(cls, d: dict) -> "RewardConfig":
        return cls(w_read=d["w_read"], w_ratings=d["w_ratings"])


def _is_low(v: int) -> bool:
    return 1 <= v <= 2


def _is_high(v: int) -> bool:
    return 6 <= v <= 7


class StateBuilder:
    def __init__(
        self,
        log: EventLog,
        start_date: str,
        decision_times: tuple[str, str, str] = DEFAULT_DECISION_TIMES,
        reward: RewardConfig | None = None,
    ):
        if list(decision_times) != sorted(decision_times) or len(set(decision_times)) != 3:
            raise ValueError("decision times must be three increasing clock times")
        self.log = log
        self.start_date = start_date
        self.decision_times = tuple(decision_times)
        self.reward_cfg = reward or RewardConfig()

    def decision_ts(self, day: int, daypart: int) -> str:
        return ts_at(self.start_date, day, self.decision_times[daypart])

    def _window(self, user: str, day: int, cut: str):
        """Events before `cut`, split into (all, today's)."""
        events = self.log.for_user(user, before=cut)
        day_start = ts_at(self.start_date, day, "00:00:00")
        today = [e for e in events if e.ts >= day_start]
        return events, today

    def _message_counts(self, today, cut_events) -> tuple[int, int]:
        sent = {e.value for e in today if e.kind == KIND_SENT}
        read = {e.value for e in cut_events if e.kind == KIND_READ and e.value in sent}
        return len(sent), len(read)

    def build_state(self, user: str, day: int, daypart: int) -> StateVector:
        cut = self.decision_ts(day, daypart)
        events, today = self._window(user, day, cut)
        lifetime_ratings = sum(1 for e in events if e.kind == KIND_RATING)
        ratings = [e.value for e in today if e.kind == KIND_RATING]
        if ratings:
            arr = np.asarray(ratings, dtype=float)
            highest, lowest = int(arr.max()), int(arr.min())
            median, sd = float(np.median(arr)), float(arr.std())
        else:
            highest = lowest = 0
            median = sd = 0.0
        received, read = self._message_counts(today, events)
        return StateVector(
            day_part=daypart,
            number_rating=lifetime_ratings,
            highest_rating=highest,
            lowest_rating=lowest,
            median_rating=median,
            sd_rating=sd,
            number_low_rating=sum(1 for v in ratings if _is_low(v)),
            number_medium_rating=sum(1 for v in ratings if not _is_low(v) and not _is_high(v)),
            number_high_rating=sum(1 for v in ratings if _is_high(v)),
            number_message_received=received,
            number_message_read=read,
            read_all_message=int(received > 0 and read == received),
        )

    def latest_rating_today(self, user: str, day: int, daypart: int) -> int | None:
        cut = self.decision_ts(day, daypart)
        _, today = self._window(user, day, cut)
        ratings = [e.value for e in today if e.kind == KIND_RATING]
        return ratings[-1] if ratings else None

    def reward_boundary(self, day: int, daypart: int) -> str:
        if daypart < 2:
            return self.decision_ts(day, daypart + 1)
        return ts_at(self.start_date, day + 1, "00:00:00")

    def compute_reward(self, user: str, day: int, daypart: int) -> float:
        """Read fraction of today's sent messages plus today's rating count,
        per the configured weights, all measured up to the boundary."""
        boundary = self.reward_boundary(day, daypart)
        events, today = self._window(user, day, boundary)
        sent, read = self._message_counts(today, events)
        fraction = read / sent if sent else 0.0
        n_ratings = sum(1 for e in today if e.kind == KIND_RATING)
        return self.reward_cfg.w_read * fraction + self.reward_cfg.w_ratings * n_ratings

    def build_trace(self, user: str, first_day: int, last_day: int):
        """Per-day (state, reward) sequences, actions excluded, inactive days
        included as zero states."""
        from .mdp import Trace

        days = {}
        for day in range(first_day, last_day + 1):
            days[day] = [
                (self.build_state(user, day, dp), self.compute_reward(user, day, dp))
                for dp in range(3)
            ]
        return Trace(user_id=user, days=days)

    def assemble_experiences(
        self, decisions: Iterable, first_day: int, last_day: int
    ) -> tuple[Dataset, dict]:
        """Turn logged decisions into (s, a, r, s') tuples.

        `decisions` are records with user_id/day/daypart/state/action; the
        decision-time state snapshot is authoritative for s, while r and s'
        are recomputed from the event log. Grid slots without a logged
        decision are skipped and counted in the report.
        """
        by_coord = {}
        for d in decisions:
            if first_day <= d.day <= last_day:
                by_coord[(d.user_id, d.day, d.daypart)] = d
        users = sorted({u for u, _, _ in by_coord})
        data = Dataset()
        skipped = 0
        for user in users:
            for day in range(first_day, last_day + 1):
                for dp in range(3):
                    dec = by_coord.get((user, day, dp))
                    if dec is None:
                        skipped += 1
                        continue
                    next_day, next_dp = (day, dp + 1) if dp < 2 else (day + 1, 0)
                    data.add(
                        Experience(
                            user_id=user,
                            s=dec.state,
                            a=dec.action,
                            r=self.compute_reward(user, day, dp),
                            s_prime=self.build_state(user, next_day, next_dp),
                            day_index=day,
                            day_part=dp,
                        )
                    )
        report = {
            "emitted": len(data),
            "skipped_missing_decision": skipped,
            "users": len(users),
            "first_day": first_day,
            "last_day": last_day,
        }
        return data, report
