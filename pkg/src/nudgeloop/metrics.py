"""Run metrics: action distributions, engagement curves, and reward tables.

Everything here is computed from the event and decision logs, so a replay of
the logs yields bit-identical output. The reward table follows the familiar
layout: rows for all dayparts / morning / afternoon / evening, one column per
week, plus starred variants that exclude users inactive after the exploration
week. An online accumulator mirrors the per-decision aggregates so tests can
check that streaming and from-logs paths agree.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .events import EventLog, KIND_RATING, KIND_READ, KIND_SENT
from .mdp import N_ACTIONS
from .states import StateBuilder
from .timebase import day_index

DAYPART_NAMES = ("morning", "afternoon", "evening")


def _mean_sd(samples: list[float]) -> dict:
    if not samples:
        return {"mean": 0.0, "sd": 0.0, "n": 0}
    arr = np.asarray(samples, dtype=float)
    return {"mean": round(float(arr.mean()), 6), "sd": round(float(arr.std()), 6), "n": len(arr)}


def active_users_after(events: EventLog, users: list[str], start_date: str, after_day: int) -> list[str]:
    """Users with at least one rating or read event on day >= after_day."""
    out = []
    for u in users:
        for e in events.for_user(u):
            if e.kind in (KIND_RATING, KIND_READ) and day_index(start_date, e.ts) >= after_day:
                out.append(u)
                break
    return out


def compute_metrics(
    builder: StateBuilder,
    events: EventLog,
    decisions: list,
    users: list[str],
    n_days: int,
    cluster_model=None,
    inactive_after_day: int = 7,
) -> dict:
    users = sorted(users)
    start = builder.start_date

    per_day = [[0] * N_ACTIONS for _ in range(n_days)]
    per_daypart = {dp: [[0] * N_ACTIONS for _ in range(n_days)] for dp in range(3)}
    greedy_final = [0] * N_ACTIONS
    final_week_start = max(0, n_days - 7)
    for d in decisions:
        if not 0 <= d.day < n_days:
            continue
        per_day[d.day][d.action] += 1
        per_daypart[d.daypart][d.day][d.action] += 1
        if d.day >= final_week_start and not d.explored:
            greedy_final[d.action] += 1

    ratings_per_day = []
    read_per_day = []
    by_user_events = {u: events.for_user(u) for u in users}
    for day in range(n_days):
        raters = 0
        n_ratings = 0
        sent = 0
        read = 0
        for u in users:
            day_ratings = 0
            sent_ids = set()
            read_ids = set()
            for e in by_user_events[u]:
                if day_index(start, e.ts) != day:
                    continue
                if e.kind == KIND_RATING:
                    day_ratings += 1
                elif e.kind == KIND_SENT:
                    sent_ids.add(e.value)
                elif e.kind == KIND_READ:
                    read_ids.add(e.value)
            raters += day_ratings > 0
            n_ratings += day_ratings
            sent += len(sent_ids)
            read += len(read_ids & sent_ids)
        ratings_per_day.append(
            {
                "day": day,
                "users_rated": raters,
                "fraction_rated": round(raters / len(users), 6) if users else 0.0,
                "ratings": n_ratings,
            }
        )
        read_per_day.append(
            {
                "day": day,
                "sent": sent,
                "read": read,
                "fraction_read": round(read / sent, 6) if sent else 0.0,
            }
        )

    rewards: dict[tuple[str, int, int], float] = {}
    for u in users:
        for day in range(n_days):
            for dp in range(3):
                rewards[(u, day, dp)] = builder.compute_reward(u, day, dp)

    active = set(active_users_after(events, users, start, inactive_after_day))
    n_weeks = (n_days + 6) // 7

    def week_table(cohort: set[str], week: int) -> dict:
        days = range(7 * week, min(7 * (week + 1), n_days))
        row = {}
        all_samples = [rewards[(u, d, p)] for u in cohort for d in days for p in range(3)]
        row["all_dayparts"] = _mean_sd(all_samples)
        for p, name in enumerate(DAYPART_NAMES):
            row[name] = _mean_sd([rewards[(u, d, p)] for u in cohort for d in days])
        return row

    reward_weeks = []
    for week in range(n_weeks):
        entry = {"week": week + 1, "cohort": week_table(set(users), week)}
        if week >= 1:  # starred variant exists from week 2 on
            entry["active_only"] = week_table(active, week)
        reward_weeks.append(entry)

    ranking = sorted(range(N_ACTIONS), key=lambda a: (-greedy_final[a], a))
    return {
        "days": n_days,
        "users": users,
        "active_after_exploration": sorted(active),
        "action_distribution": {
            "per_day": per_day,
            "per_daypart": {DAYPART_NAMES[dp]: per_daypart[dp] for dp in range(3)},
        },
        "ratings_per_day": ratings_per_day,
        "read_fraction_per_day": read_per_day,
        "reward_weeks": reward_weeks,
        "final_week_greedy": {
            "counts": greedy_final,
            "ranking": ranking,
        },
        "clusters": dict(sorted(cluster_model.assignment.items())) if cluster_model else None,
    }


class OnlineMetrics:
    """Streaming counterpart fed as decisions and rewards happen; used to
    cross-check the from-logs computation."""

    def __init__(self):
        self.action_counts = defaultdict(int)  # (day, daypart, action)
        self.reward_samples: dict[tuple, float] = {}  # (user, day, daypart) -> value

    def observe_decision(self, decision):
        self.action_counts[(decision.day, decision.daypart, decision.action)] += 1

    def observe_reward(self, user: str, day: int, daypart: int, value: float):
        self.reward_samples[(user, day, daypart)] = value

    def per_day_table(self, n_days: int) -> list[list[int]]:
        table = [[0] * N_ACTIONS for _ in range(n_days)]
        for (day, _, action), n in self.action_counts.items():
            if 0 <= day < n_days:
                table[day][action] += n
        return table

    def week_mean(self, week: int, users: set[str], n_days: int) -> float:
        days = range(7 * week, min(7 * (week + 1), n_days))
        vals = [
            v
            for (u, d, p), v in self.reward_samples.items()
            if u in users and d in days
        ]
        return float(np.mean(vals)) if vals else 0.0
