"""Decision engine: the personalization loop.

Serves per-daypart decisions (random during the exploration week, epsilon-
greedy afterwards), resolves concrete messages through the catalog, records
every decision in an append-only log, and retrains policies from the
accumulated experiences. Three personalization modes share the machinery:
pooled trains one policy for everyone, grouped trains one per trace cluster,
separate trains one per user with enough data.

All randomness is derived from (seed, purpose, coordinates), never from a
stateful stream, so a restarted process reproduces the exact decisions a
continuous one would have made.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import Catalog, CatalogExhausted, MessageEntry, MoodConfig, mood_bucket, select_message
from .clustering import ClusterModel, TraceNormalization, assign_user, cluster_users
from .events import Event, EventLog, KIND_SENT
from .mdp import (
    ConfigurationError,
    ContractViolation,
    Dataset,
    N_ACTIONS,
    NO_MESSAGE,
    BinningScheme,
    StateVector,
)
from .rngutil import derive_seed, derived_rng
from .solver import Policy, SolverConfig, epsilon_greedy_pick, lspi, policy_from_dict, policy_to_dict, save_policy
from .states import StateBuilder
from .timebase import ts_at

log = logging.getLogger(__name__)

MODES = ("pooled", "grouped", "separate")
POOLED_KEY = "pooled"

_USER_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


class UnknownUserError(KeyError):
    pass


@dataclass(frozen=True)
class Decision:
    user_id: str
    day: int
    daypart: int
    ts: str
    state: StateVector
    action: int
    message: MessageEntry | None
    policy_version: int
    explored: bool
    degraded: bool = False  # catalog exhausted: action wanted a message, none left

    def __post_init__(self):
        if not 0 <= self.action < N_ACTIONS:
            raise ContractViolation(f"action {self.action} out of range")
        if self.degraded:
            if self.action == NO_MESSAGE or self.message is not None:
                raise ContractViolation("degraded decisions carry no message")
        elif (self.action == NO_MESSAGE) != (self.message is None):
            raise ContractViolation("action 0 iff no message")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "day": self.day,
            "daypart": self.daypart,
            "ts": self.ts,
            "action": self.action,
            "message": self.message.to_dict() if self.message else None,
            "policy_version": self.policy_version,
            "explored": self.explored,
            "degraded": self.degraded,
            "state": self.state.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Decision":
        m = d.get("message")
        return cls(
            user_id=d["user_id"],
            day=d["day"],
            daypart=d["daypart"],
            ts=d["ts"],
            state=StateVector.from_dict(d["state"]),
            action=d["action"],
            message=MessageEntry(m["id"], m["category"], m["bucket"], m["text"]) if m else None,
            policy_version=d["policy_version"],
            explored=d["explored"],
            degraded=d.get("degraded", False),
        )


class DecisionLog:
    """Append-only decision records, one JSON object per line, keyed by
    (user, day, daypart). Recording the same key again returns the stored
    decision untouched, which is what makes retried jobs safe."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._by_key: dict[tuple, Decision] = {}
        self._order: list[Decision] = []
        self._fh = None
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._admit(Decision.from_dict(json.loads(line)))
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")

    def _admit(self, d: Decision) -> bool:
        key = (d.user_id, d.day, d.daypart)
        if key in self._by_key:
            return False
        self._by_key[key] = d
        self._order.append(d)
        return True

    def record(self, d: Decision) -> tuple[Decision, bool]:
        with self._lock:
            existing = self._by_key.get((d.user_id, d.day, d.daypart))
            if existing is not None:
                return existing, False
            self._admit(d)
            if self._fh is not None:
                self._fh.write(json.dumps(d.to_dict(), sort_keys=True) + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            return d, True

    def get(self, user_id: str, day: int, daypart: int) -> Decision | None:
        with self._lock:
            return self._by_key.get((user_id, day, daypart))

    def all(self) -> list[Decision]:
        with self._lock:
            return list(self._order)

    def for_user(self, user_id: str) -> list[Decision]:
        with self._lock:
            return [d for d in self._order if d.user_id == user_id]

    def close(self):
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


def _write_json_atomic(path: Path, payload: dict):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class PolicyStore:
    """Directory of immutable policy snapshots, one file per partition key."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, Policy] = {}
        for p in sorted(self.root.glob("policy-*.json")):
            key = p.stem[len("policy-") :]
            with open(p, encoding="utf-8") as fh:
                self._cache[key] = policy_from_dict(json.load(fh))

    def _path(self, key: str) -> Path:
        return self.root / f"policy-{key}.json"

    def get(self, key: str) -> Policy | None:
        return self._cache.get(key)

    def put(self, key: str, policy: Policy):
        save_policy(policy, self._path(key))
        self._cache[key] = policy

    def keys(self) -> list[str]:
        return sorted(self._cache)


class DecisionEngine:
    def __init__(
        self,
        events: EventLog,
        builder: StateBuilder,
        store_dir: str | os.PathLike,
        catalog: Catalog | None = None,
        seed: int = 0,
        mode: str = "pooled",
        k: int = 2,
        exploration_days: int = 7,
        exploration_actions: tuple[int, ...] = (0, 1, 2, 3),
        solver_cfg: SolverConfig | None = None,
        scheme: BinningScheme | None = None,
        mood_cfg: MoodConfig | None = None,
        trace_norm: TraceNormalization | None = None,
        min_separate_experiences: int = 9,
        warm_start: bool = True,
        adapter=None,
    ):
        if mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
        if exploration_days < 1:
            raise ConfigurationError("exploration_days must be >= 1")
        if not exploration_actions or any(not 0 <= a < N_ACTIONS for a in exploration_actions):
            raise ConfigurationError("exploration_actions must be a nonempty subset of 0..3")
        self.events = events
        self.builder = builder
        self.catalog = catalog or Catalog.default()
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.mode = mode
        self.k = k
        self.exploration_days = exploration_days
        self.exploration_actions = tuple(exploration_actions)
        self.solver_cfg = solver_cfg or SolverConfig()
        self.scheme = scheme or BinningScheme.default()
        self.mood_cfg = mood_cfg or MoodConfig()
        self.trace_norm = trace_norm or TraceNormalization()
        self.min_separate_experiences = min_separate_experiences
        self.warm_start = warm_start
        self.adapter = adapter
        self.decisions = DecisionLog(self.store_dir / "decisions.jsonl")
        self.policies = PolicyStore(self.store_dir)
        self._users_path = self.store_dir / "users.json"
        self._users: list[str] = []
        if self._users_path.exists():
            with open(self._users_path, encoding="utf-8") as fh:
                self._users = json.load(fh)["users"]
        self._clusters_path = self.store_dir / "clusters.json"
        self.cluster_model: ClusterModel | None = None
        if self._clusters_path.exists():
            with open(self._clusters_path, encoding="utf-8") as fh:
                self.cluster_model = ClusterModel.from_dict(json.load(fh))
        self._assign_cache: dict[str, int] = {}
        self.last_training_report: dict = {}

    # -- users ----------------------------------------------------------

    def register_user(self, user_id: str) -> bool:
        """Returns False when the user already exists."""
        if not _USER_ID_RE.match(user_id or ""):
            raise ValueError("user ids are 1-64 chars of [A-Za-z0-9_-]")
        if user_id in self._users:
            return False
        self._users.append(user_id)
        self._users.sort()
        _write_json_atomic(self._users_path, {"users": self._users})
        return True

    def users(self) -> list[str]:
        return list(self._users)

    def require_user(self, user_id: str):
        if user_id not in self._users:
            raise UnknownUserError(user_id)

    # -- decisions ------------------------------------------------------

    def sent_today(self, user_id: str, day: int) -> set[str]:
        start = ts_at(self.builder.start_date, day, "00:00:00")
        end = ts_at(self.builder.start_date, day + 1, "00:00:00")
        return {
            e.value
            for e in self.events.for_user(user_id, before=end)
            if e.kind == KIND_SENT and e.ts >= start
        }

    def _cluster_of(self, user_id: str) -> int | None:
        model = self.cluster_model
        if model is None:
            return None
        if user_id in model.assignment:
            return model.assignment[user_id]
        if user_id not in self._assign_cache:
            trace = self.builder.build_trace(user_id, 0, self.exploration_days - 1)
            self._assign_cache[user_id] = assign_user(trace, model)
            log.info("assigned late user %s to cluster %d", user_id, self._assign_cache[user_id])
        return self._assign_cache[user_id]

    def policy_key_for(self, user_id: str) -> str:
        if self.mode == "grouped":
            cluster = self._cluster_of(user_id)
            if cluster is not None:
                return f"cluster-{cluster}"
        elif self.mode == "separate":
            return f"user-{user_id}"
        return POOLED_KEY

    def _policy_for(self, user_id: str) -> Policy | None:
        key = self.policy_key_for(user_id)
        p = self.policies.get(key)
        if p is None and key != POOLED_KEY:
            p = self.policies.get(POOLED_KEY)
        return p

    def decide(self, user_id: str, day: int, daypart: int) -> Decision:
        """One decision per (user, day, daypart); retries return the logged
        record. Events and the decision itself are stamped with the scheduled
        decision time so a catch-up run replays bit-identically."""
        self.require_user(user_id)
        existing = self.decisions.get(user_id, day, daypart)
        if existing is not None:
            return existing
        state = self.builder.build_state(user_id, day, daypart)
        ts = self.builder.decision_ts(day, daypart)
        rng = derived_rng(self.seed, "decide", user_id, day, daypart)
        if day < self.exploration_days:
            action = self.exploration_actions[int(rng.integers(len(self.exploration_actions)))]
            explored, version = True, 0
        else:
            policy = self._policy_for(user_id)
            if policy is None:
                log.warning(
                    "no policy published for %s on day %d; falling back to random", user_id, day
                )
                action = int(rng.integers(N_ACTIONS))
                explored, version = True, 0
            else:
                action, explored = epsilon_greedy_pick(policy, state, rng)
                version = policy.version
        message, degraded = None, False
        if action != NO_MESSAGE:
            bucket = mood_bucket(
                state, self.builder.latest_rating_today(user_id, day, daypart), self.mood_cfg
            )
            try:
                message = select_message(
                    self.catalog, action, bucket, self.sent_today(user_id, day), rng
                )
            except CatalogExhausted:
                log.warning("catalog exhausted for %s day %d action %d", user_id, day, action)
                degraded = True
        decision = Decision(
            user_id=user_id,
            day=day,
            daypart=daypart,
            ts=ts,
            state=state,
            action=action,
            message=message,
            policy_version=version,
            explored=explored,
            degraded=degraded,
        )
        decision, fresh = self.decisions.record(decision)
        if fresh and decision.message is not None:
            self.events.ingest(
                Event(user_id=user_id, ts=ts, kind=KIND_SENT, value=decision.message.message_id)
            )
            if self.adapter is not None:
                self.adapter.post_message(user_id, decision.message, ts)
        return decision

    # -- training -------------------------------------------------------

    def _partitions(self, data: Dataset, mode: str) -> dict[str, Dataset]:
        parts = {POOLED_KEY: data}
        if mode == "grouped":
            if self.cluster_model is None:
                # before the clustering job has run, everyone trains pooled
                log.info("grouped mode without a cluster model yet; training pooled only")
                return parts
            grouped: dict[str, Dataset] = {
                f"cluster-{i}": Dataset() for i in range(self.cluster_model.k)
            }
            for e in data:
                cluster = self._cluster_of(e.user_id)
                grouped[f"cluster-{cluster}"].add(e)
            parts.update(grouped)
        elif mode == "separate":
            for user in data.users():
                part = data.subset([user])
                if len(part) >= self.min_separate_experiences:
                    parts[f"user-{user}"] = part
        return parts

    @staticmethod
    def _audit_disjoint(parts: dict[str, Dataset]) -> bool:
        seen: set[str] = set()
        for key, part in parts.items():
            if key == POOLED_KEY:
                continue
            users = set(part.users())
            if users & seen:
                return False
            seen |= users
        return True

    def train_all(self, as_of_day: int, mode: str | None = None) -> dict[str, Policy]:
        mode = mode or self.mode
        if mode not in MODES:
            raise ConfigurationError(f"unknown mode {mode!r}")
        data, quality = self.builder.assemble_experiences(self.decisions.all(), 0, as_of_day)
        if len(data) == 0:
            raise ContractViolation("no experiences to train on")
        parts = self._partitions(data, mode)
        if not self._audit_disjoint(parts):
            raise ContractViolation("partition audit failed: overlapping users across partitions")
        published: dict[str, Policy] = {}
        part_report: dict[str, dict] = {}
        for key in sorted(parts):
            part = parts[key]
            prev = self.policies.get(key)
            if len(part) == 0:
                part_report[key] = {"experiences": 0, "kept_previous": prev is not None}
                if prev is not None:
                    published[key] = prev
                continue
            policy = lspi(
                part,
                self.solver_cfg,
                self.scheme,
                init=prev.weights if (self.warm_start and prev is not None) else None,
                version=prev.version if prev is not None else 0,
                cluster_id=key,
                watermark={"as_of_day": as_of_day, "experiences": len(part)},
            )
            self.policies.put(key, policy)
            published[key] = policy
            part_report[key] = {
                "experiences": len(part),
                "version": policy.version,
                "converged": policy.converged,
                "iterations": policy.iterations,
            }
        self.last_training_report = {
            "as_of_day": as_of_day,
            "mode": mode,
            "data_quality": quality,
            "partitions": part_report,
        }
        return published

    # -- clustering -----------------------------------------------------

    def run_clustering_once(self, force: bool = False) -> ClusterModel:
        """Cluster week-one traces; later calls return the stored model."""
        if self.cluster_model is not None and not force:
            return self.cluster_model
        users = self.users()
        if self.k > len(users):
            raise ContractViolation(f"k={self.k} exceeds registered cohort size {len(users)}")
        traces = [self.builder.build_trace(u, 0, self.exploration_days - 1) for u in users]
        model = cluster_users(
            traces, self.k, seed=derive_seed(self.seed, "clustering"), norm=self.trace_norm
        )
        _write_json_atomic(self._clusters_path, model.to_dict())
        self.cluster_model = model
        self._assign_cache.clear()
        return model

    # -- snapshots ------------------------------------------------------

    def export_policy(self, key: str) -> dict:
        p = self.policies.get(key)
        if p is None:
            raise KeyError(f"no policy published under {key!r}")
        return policy_to_dict(p)

    def load_policy(self, snapshot: dict, key: str) -> Policy:
        p = policy_from_dict(snapshot)
        self.policies.put(key, p)
        return p
