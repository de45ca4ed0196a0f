"""Service gateway: wires the logs, engine, and scheduler into one deployable
unit and exposes the operations the HTTP layer and CLI call.

One gateway owns one data directory:

    events.jsonl        append-only event log
    store/              decisions.jsonl, users.json, clusters.json, policy-*.json
    schedule.json       scheduler high-water marks

Restarting a gateway on the same directory reconstructs the exact state the
previous process had, which is the backbone of the durability guarantees.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .catalog import Catalog
from .config import AppConfig
from .engine import DecisionEngine, UnknownUserError
from .events import Event, EventLog, KIND_RATING, KIND_READ, RATING_MAX, RATING_MIN
from .mdp import ContractViolation
from .metrics import OnlineMetrics, compute_metrics
from .scheduler import Scheduler, VirtualClock, WallClock
from .states import StateBuilder
from .timebase import day_index, ts_at

log = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.status = status


class ServiceGateway:
    def __init__(self, cfg: AppConfig, clock=None, adapter=None):
        self.cfg = cfg
        root = Path(cfg.data_dir)
        root.mkdir(parents=True, exist_ok=True)
        self.events = EventLog(root / "events.jsonl")
        self.builder = StateBuilder(
            self.events,
            cfg.start_date,
            decision_times=tuple(cfg.schedule.decision_times),
            reward=cfg.reward,
        )
        catalog = Catalog.from_file(cfg.catalog_path) if cfg.catalog_path else Catalog.default()
        self.engine = DecisionEngine(
            self.events,
            self.builder,
            root / "store",
            catalog=catalog,
            seed=cfg.seed,
            mode=cfg.mode,
            k=cfg.k,
            exploration_days=cfg.exploration_days,
            solver_cfg=cfg.solver,
            adapter=adapter,
        )
        self.online = OnlineMetrics()
        self.clock = clock or (
            WallClock()
            if cfg.schedule.clock == "wall"
            else VirtualClock(ts_at(cfg.start_date, 0))
        )
        self.scheduler = Scheduler(
            cfg.start_date, cfg.schedule, jobs=self, state_path=root / "schedule.json", clock=self.clock
        )
        self.training_notes: list[dict] = []

    # -- scheduler job callables ---------------------------------------

    def decide(self, day: int, daypart: int):
        for user in self.engine.users():
            decision = self.engine.decide(user, day, daypart)
            self.online.observe_decision(decision)

    def train(self, day: int):
        try:
            self.engine.train_all(as_of_day=day)
            self.training_notes.append({"day": day, "report": self.engine.last_training_report})
        except ContractViolation as exc:
            # nothing to train yet (no users or no decisions) is a no-op night
            self.training_notes.append({"day": day, "skipped": str(exc)})
        for user in self.engine.users():
            for dp in range(3):
                self.online.observe_reward(user, day, dp, self.builder.compute_reward(user, day, dp))

    def cluster(self, day: int):
        self.engine.run_clustering_once()

    def tick(self, now: str | None = None) -> list[str]:
        return self.scheduler.tick(now)

    # -- API operations ------------------------------------------------

    def register_user(self, user_id: str) -> dict:
        try:
            created = self.engine.register_user(user_id)
        except ValueError as exc:
            raise ApiError("VALIDATION", str(exc)) from exc
        return {"user_id": user_id, "created": created}

    def _require_user(self, user_id: str):
        try:
            self.engine.require_user(user_id)
        except (UnknownUserError, TypeError):
            raise ApiError("UNKNOWN_USER", f"user {user_id!r} is not registered", 404) from None

    def post_rating(self, user_id: str, value, ts: str | None = None) -> dict:
        self._require_user(user_id)
        if isinstance(value, bool) or not isinstance(value, int) or not RATING_MIN <= value <= RATING_MAX:
            raise ApiError(
                "OUT_OF_RANGE", f"rating must be an integer in {RATING_MIN}..{RATING_MAX}"
            )
        e = Event(user_id=user_id, ts=ts or self.clock.now(), kind=KIND_RATING, value=value)
        return self.events.ingest(e)

    def post_message_read(self, user_id: str, message_id: str, ts: str | None = None) -> dict:
        self._require_user(user_id)
        if not message_id or not isinstance(message_id, str):
            raise ApiError("VALIDATION", "message_id must be a nonempty string")
        if not self.events.was_sent(user_id, message_id):
            raise ApiError(
                "UNKNOWN_MESSAGE", f"message {message_id!r} was never sent to {user_id}", 404
            )
        e = Event(user_id=user_id, ts=ts or self.clock.now(), kind=KIND_READ, value=message_id)
        return self.events.ingest(e)

    def inbox(self, user_id: str) -> list[dict]:
        self._require_user(user_id)
        reads = [e for e in self.events.for_user(user_id) if e.kind == KIND_READ]
        out = []
        for d in self.engine.decisions.for_user(user_id):
            if d.message is None:
                continue
            read = any(r.value == d.message.message_id and r.ts >= d.ts for r in reads)
            out.append(
                {
                    "day": d.day,
                    "daypart": d.daypart,
                    "ts": d.ts,
                    "message_id": d.message.message_id,
                    "category": d.message.category,
                    "text": d.message.text,
                    "read": read,
                }
            )
        return out

    def decisions_for(self, user_id: str) -> list[dict]:
        self._require_user(user_id)
        return [d.to_dict() for d in self.engine.decisions.for_user(user_id)]

    def elapsed_days(self) -> int:
        return max(0, day_index(self.cfg.start_date, self.clock.now())) + 1

    def health(self) -> dict:
        now = self.clock.now()
        tod = now[11:]
        daypart = max(0, sum(1 for t in self.cfg.schedule.decision_times if t <= tod) - 1)
        return {
            "status": "ok",
            "now": now,
            "day": max(0, day_index(self.cfg.start_date, now)),
            "daypart": daypart,
            "users": len(self.engine.users()),
        }

    def metrics(self, n_days: int | None = None) -> dict:
        n = n_days if n_days is not None else self.elapsed_days()
        return compute_metrics(
            self.builder,
            self.events,
            self.engine.decisions.all(),
            self.engine.users(),
            n,
            cluster_model=self.engine.cluster_model,
            inactive_after_day=self.engine.exploration_days,
        )

    def train_now(self, as_of_day: int | None = None) -> dict:
        day = as_of_day if as_of_day is not None else day_index(self.cfg.start_date, self.clock.now())
        try:
            published = self.engine.train_all(as_of_day=max(0, day))
        except ContractViolation as exc:
            raise ApiError("NO_DATA", str(exc), 409) from exc
        return {
            "policies": {k: p.version for k, p in published.items()},
            "report": self.engine.last_training_report,
        }

    def cluster_now(self, force: bool = False) -> dict:
        try:
            model = self.engine.run_clustering_once(force=force)
        except ContractViolation as exc:
            raise ApiError("NO_DATA", str(exc), 409) from exc
        return {"k": model.k, "assignment": dict(sorted(model.assignment.items()))}

    def close(self):
        self.events.close()
        self.engine.decisions.close()
