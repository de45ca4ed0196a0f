"""Synthetic-user simulation of the full three-week protocol.

Profiles describe how a synthetic participant reacts to a decision: a read
probability per message category, a rating propensity per daypart, a mood
distribution for the rating values, an optional dropout day, and a one-step
responsiveness memory (receiving the preferred category in the previous
daypart raises both propensities in the current one).

Reactions are derived from (seed, "react", user, day, daypart), never from a
shared random stream, so re-running any prefix of a simulation reproduces the
same events. Combined with idempotent ingest and the scheduler's high-water
marks, a killed and restarted run converges to the same logs as an
uninterrupted one.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .adapter import LoopbackAdapter
from .config import AppConfig
from .engine import Decision
from .events import Event, KIND_RATING, KIND_READ
from .gateway import ServiceGateway
from .mdp import N_ACTIONS
from .rngutil import derived_rng
from .scheduler import ScheduleConfig
from .solver import q_value
from .timebase import add_minutes, ts_at

READ_DELAY_MIN = 20
RATING_DELAY_MIN = 40


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    read_prob: tuple[float, float, float, float]  # indexed by action id; slot 0 unused
    rating_prob: tuple[float, float, float]  # per daypart
    mood_mean: float = 4.5
    mood_sd: float = 1.2
    dropout_day: int | None = None
    preferred_action: int | None = None
    responsiveness: float = 0.0  # propensity boost the daypart after receiving preferred
    rating_lift_on_read: float = 0.0  # extra rating propensity right after reading a message

    def __post_init__(self):
        if len(self.read_prob) != N_ACTIONS or len(self.rating_prob) != 3:
            raise ValueError("read_prob needs 4 entries, rating_prob needs 3")
        for p in (*self.read_prob, *self.rating_prob, self.responsiveness, self.rating_lift_on_read):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probabilities must be in [0,1], got {p}")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "read_prob": list(self.read_prob),
            "rating_prob": list(self.rating_prob),
            "mood_mean": self.mood_mean,
            "mood_sd": self.mood_sd,
            "dropout_day": self.dropout_day,
            "preferred_action": self.preferred_action,
            "responsiveness": self.responsiveness,
            "rating_lift_on_read": self.rating_lift_on_read,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UserProfile":
        return cls(
            user_id=d["user_id"],
            read_prob=tuple(d["read_prob"]),
            rating_prob=tuple(d["rating_prob"]),
            mood_mean=d.get("mood_mean", 4.5),
            mood_sd=d.get("mood_sd", 1.2),
            dropout_day=d.get("dropout_day"),
            preferred_action=d.get("preferred_action"),
            responsiveness=d.get("responsiveness", 0.0),
            rating_lift_on_read=d.get("rating_lift_on_read", 0.0),
        )


def simulate_user_step(
    profile: UserProfile, decision: Decision, rng: np.random.Generator, boosted: bool = False
) -> list[Event]:
    """Events this user emits in reaction to one decision."""
    if profile.dropout_day is not None and decision.day >= profile.dropout_day:
        return []
    boost = profile.responsiveness if boosted else 0.0
    out = []
    read_now = False
    if decision.message is not None:
        p_read = min(1.0, profile.read_prob[decision.action] + boost)
        if rng.random() < p_read:
            read_now = True
            out.append(
                Event(
                    user_id=profile.user_id,
                    ts=add_minutes(decision.ts, READ_DELAY_MIN),
                    kind=KIND_READ,
                    value=decision.message.message_id,
                )
            )
    lift = profile.rating_lift_on_read if read_now else 0.0
    p_rate = min(1.0, profile.rating_prob[decision.daypart] + boost + lift)
    if rng.random() < p_rate:
        value = int(np.clip(round(rng.normal(profile.mood_mean, profile.mood_sd)), 1, 7))
        out.append(
            Event(
                user_id=profile.user_id,
                ts=add_minutes(decision.ts, RATING_DELAY_MIN),
                kind=KIND_RATING,
                value=value,
            )
        )
    return out


@dataclass
class CohortSpec:
    profiles: list[UserProfile] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"profiles": [p.to_dict() for p in self.profiles]}

    @classmethod
    def from_dict(cls, d: dict) -> "CohortSpec":
        return cls(profiles=[UserProfile.from_dict(p) for p in d["profiles"]])

    @classmethod
    def from_file(cls, path) -> "CohortSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def default(cls) -> "CohortSpec":
        """27 users: 13 stay active, 8 drop out after the exploration week,
        6 are near-dormant. Read propensities are ordered encouraging >
        informing > affirming for everyone, with evening engagement highest."""
        active = UserProfile(
            user_id="",
            read_prob=(0.0, 0.95, 0.8, 0.65),
            rating_prob=(0.35, 0.4, 0.5),
            mood_mean=4.6,
            mood_sd=1.1,
            preferred_action=1,
            responsiveness=0.15,
            rating_lift_on_read=0.5,
        )
        dormant = UserProfile(
            user_id="",
            read_prob=(0.0, 0.15, 0.1, 0.06),
            rating_prob=(0.02, 0.02, 0.04),
            mood_mean=3.5,
            mood_sd=1.0,
            rating_lift_on_read=0.1,
        )
        profiles = []
        for i in range(13):
            profiles.append(replace(active, user_id=f"active-{i:02d}"))
        for i in range(8):
            profiles.append(replace(active, user_id=f"dropout-{i:02d}", dropout_day=7))
        for i in range(6):
            profiles.append(replace(dormant, user_id=f"dormant-{i:02d}"))
        return cls(profiles)


@dataclass
class ExperimentReport:
    seed: int
    days: int
    mode: str
    metrics: dict
    week1_action_share: list[float]
    final_week_mean_q: list[float]
    final_week_ranking: list[int]
    week2_mean: float
    week2_mean_active: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "days": self.days,
            "mode": self.mode,
            "week1_action_share": self.week1_action_share,
            "final_week_mean_q": self.final_week_mean_q,
            "final_week_ranking": self.final_week_ranking,
            "week2_mean": self.week2_mean,
            "week2_mean_active": self.week2_mean_active,
            "metrics": self.metrics,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)


class SimDriver:
    """Drives a gateway through simulated days. Re-running days that already
    happened is a no-op thanks to idempotent decisions, ingest, and job marks,
    which is exactly what a post-crash catch-up needs."""

    def __init__(self, cohort: CohortSpec, cfg: AppConfig, adapter=None):
        self.cohort = cohort
        self.cfg = cfg
        self.adapter = adapter or LoopbackAdapter()
        self.gateway = ServiceGateway(cfg, adapter=self.adapter)
        self.by_user = {p.user_id: p for p in cohort.profiles}
        for p in cohort.profiles:
            self.gateway.engine.register_user(p.user_id)

    def _boosted(self, profile: UserProfile, day: int, daypart: int) -> bool:
        if profile.preferred_action is None or profile.responsiveness == 0.0:
            return False
        prev = (day, daypart - 1) if daypart > 0 else (day - 1, 2)
        if prev[0] < 0:
            return False
        d = self.gateway.engine.decisions.get(profile.user_id, *prev)
        return d is not None and d.message is not None and d.action == profile.preferred_action

    def run_day(self, day: int):
        gw = self.gateway
        for dp, t in enumerate(self.cfg.schedule.decision_times):
            gw.clock.advance_to(self.gateway.builder.decision_ts(day, dp))
            gw.tick()
            for profile in self.cohort.profiles:
                decision = gw.engine.decisions.get(profile.user_id, day, dp)
                if decision is None:
                    continue
                rng = derived_rng(self.cfg.seed, "react", profile.user_id, day, dp)
                boosted = self._boosted(profile, day, dp)
                for e in simulate_user_step(profile, decision, rng, boosted=boosted):
                    if e.kind == KIND_RATING:
                        gw.post_rating(e.user_id, e.value, e.ts)
                    else:
                        gw.post_message_read(e.user_id, e.value, e.ts)
        gw.clock.advance_to(ts_at(self.cfg.start_date, day, self.cfg.schedule.training_time))
        gw.tick()

    def run(self, days: int):
        for day in range(days):
            self.run_day(day)

    def report(self, days: int) -> ExperimentReport:
        gw = self.gateway
        metrics = gw.metrics(n_days=days)
        week1 = np.array(metrics["action_distribution"]["per_day"][: min(7, days)]).sum(axis=0)
        share = (week1 / week1.sum()).tolist() if week1.sum() else [0.0] * N_ACTIONS
        q_sums = np.zeros(N_ACTIONS)
        q_n = 0
        final_start = max(0, days - 7)
        for d in gw.engine.decisions.all():
            if d.day < final_start or d.day >= days or d.explored:
                continue
            policy = gw.engine.policies.get(gw.engine.policy_key_for(d.user_id))
            if policy is None:
                continue
            q_sums += [q_value(policy.weights, d.state, a, policy.scheme) for a in range(N_ACTIONS)]
            q_n += 1
        mean_q = (q_sums / q_n).tolist() if q_n else [0.0] * N_ACTIONS
        ranking = sorted(range(N_ACTIONS), key=lambda a: (-mean_q[a], a))
        week2 = next((w for w in metrics["reward_weeks"] if w["week"] == 2), None)
        week2_mean = week2["cohort"]["all_dayparts"]["mean"] if week2 else 0.0
        week2_active = (
            week2["active_only"]["all_dayparts"]["mean"] if week2 and "active_only" in week2 else 0.0
        )
        return ExperimentReport(
            seed=self.cfg.seed,
            days=days,
            mode=self.cfg.mode,
            metrics=metrics,
            week1_action_share=share,
            final_week_mean_q=mean_q,
            final_week_ranking=ranking,
            week2_mean=week2_mean,
            week2_mean_active=week2_active,
        )

    def close(self):
        self.gateway.close()


def run_experiment(
    cohort: CohortSpec | None = None,
    days: int = 21,
    mode: str = "pooled",
    seed: int = 0,
    data_dir: str | None = None,
    k: int = 2,
) -> ExperimentReport:
    cohort = cohort or CohortSpec.default()
    tmp = None
    if data_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="nudgeloop-sim-")
        data_dir = tmp.name
    cfg = AppConfig(
        data_dir=str(data_dir),
        seed=seed,
        mode=mode,
        k=k,
        schedule=ScheduleConfig(clock="virtual"),
    )
    driver = SimDriver(cohort, cfg)
    try:
        driver.run(days)
        return driver.report(days)
    finally:
        driver.close()
        if tmp is not None:
            tmp.cleanup()
