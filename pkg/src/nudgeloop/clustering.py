"""User clustering on state-reward traces.

A user's trace is their per-day sequence of (state, reward) pairs, actions
excluded. Day sequences are compared with dynamic time warping over normalized
13-entry vectors (12 features + reward, each scaled to [0,1] by documented
ranges); users are compared by summing the per-day DTW costs over the common
day range; the cohort is partitioned with PAM-style k-medoids on the pairwise
distance matrix. DTW is not a metric, so only symmetry and nonnegativity are
asserted, never the triangle inequality.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .mdp import ContractViolation, FEATURE_NAMES, StateVector, Trace

TRACE_DIM = len(FEATURE_NAMES) + 1  # features plus reward


class EmptySequenceError(ValueError):
    """DTW is undefined for an empty sequence; callers substitute defaults."""


_DEFAULT_RANGES: dict[str, tuple[float, float]] = {
    "day_part": (0.0, 2.0),
    "number_rating": (0.0, 63.0),  # 3/day over a 21-day deployment
    "highest_rating": (0.0, 7.0),
    "lowest_rating": (0.0, 7.0),
    "median_rating": (0.0, 7.0),
    "sd_rating": (0.0, 3.0),
    "number_low_rating": (0.0, 10.0),
    "number_medium_rating": (0.0, 10.0),
    "number_high_rating": (0.0, 10.0),
    "number_message_received": (0.0, 3.0),
    "number_message_read": (0.0, 3.0),
    "read_all_message": (0.0, 1.0),
}


@dataclass(frozen=True)
class TraceNormalization:
    """Fixed per-feature ranges and reward cap.

    Ranges are configuration, not data-dependent quantiles, so distances stay
    stable across batches. Values outside a range clip to [0,1].
    """

    feature_ranges: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(_DEFAULT_RANGES)
    )
    reward_cap: float = 5.0

    def __post_init__(self):
        if set(self.feature_ranges) != set(FEATURE_NAMES):
            raise ContractViolation("normalization must cover exactly the 12 features")
        for name, (lo, hi) in self.feature_ranges.items():
            if not lo < hi:
                raise ContractViolation(f"{name}: range must satisfy lo < hi")
        if self.reward_cap <= 0:
            raise ContractViolation("reward_cap must be > 0")

    def element(self, state: StateVector, reward: float) -> np.ndarray:
        """Normalized 13-entry vector, every entry in [0,1]."""
        values = state.as_features()
        out = np.empty(TRACE_DIM)
        for i, name in enumerate(FEATURE_NAMES):
            lo, hi = self.feature_ranges[name]
            out[i] = (values[i] - lo) / (hi - lo)
        out[TRACE_DIM - 1] = reward / self.reward_cap
        return np.clip(out, 0.0, 1.0)

    def day_sequence(self, entries: list[tuple[StateVector, float]]) -> np.ndarray:
        return np.stack([self.element(s, r) for s, r in entries])

    def to_dict(self) -> dict:
        return {
            "feature_ranges": {k: list(v) for k, v in sorted(self.feature_ranges.items())},
            "reward_cap": self.reward_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TraceNormalization":
        return cls(
            feature_ranges={k: tuple(v) for k, v in d["feature_ranges"].items()},
            reward_cap=d["reward_cap"],
        )

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def dtw(a: np.ndarray, b: np.ndarray) -> float:
    """Minimal cumulative alignment cost; symmetric, zero on identical input.

    1-D input is a sequence of scalars, not a single vector.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptySequenceError("dtw requires nonempty sequences")
    return kernels.dtw_cost(a, b)


_ZERO_DAY = np.zeros((1, TRACE_DIM))


def user_distance(u1: Trace, u2: Trace, norm: TraceNormalization | None = None) -> float:
    """Sum of per-day DTW costs over the union of both users' day indices.

    A day present for only one user is compared against a single all-zero
    element: dropping such days would reward dormancy with spurious similarity.
    """
    if not u1.days or not u2.days:
        raise ContractViolation("user_distance requires at least one day per user")
    norm = norm or TraceNormalization()
    total = 0.0
    for day in sorted(set(u1.days) | set(u2.days)):
        seq1 = norm.day_sequence(u1.days[day]) if day in u1.days else _ZERO_DAY
        seq2 = norm.day_sequence(u2.days[day]) if day in u2.days else _ZERO_DAY
        total += dtw(seq1, seq2)
    return total


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ContractViolation("distance matrix must be square")
        if not np.allclose(v, v.T):
            raise ContractViolation("distance matrix must be symmetric")
        if np.any(np.diag(v) != 0):
            raise ContractViolation("distance matrix must have a zero diagonal")
        if np.any(v < 0):
            raise ContractViolation("distances must be nonnegative")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def distance_matrix(traces: list[Trace], norm: TraceNormalization | None = None) -> DistanceMatrix:
    """Pairwise user distances; each of the n(n-1)/2 pairs evaluated once."""
    if len(traces) < 2:
        raise ContractViolation("need at least 2 users")
    norm = norm or TraceNormalization()
    n = len(traces)
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = user_distance(traces[i], traces[j], norm)
            m[i, j] = m[j, i] = d
    return DistanceMatrix(m)


@dataclass
class KMedoidsResult:
    medoids: list[int]  # point indices, in cluster order
    assignment: np.ndarray  # point -> cluster index
    cost: float


def _assignment_cost(values: np.ndarray, medoids: list[int]) -> tuple[np.ndarray, float]:
    d = values[:, medoids]  # (n, k)
    assignment = np.argmin(d, axis=1)  # first-wins on ties
    cost = float(d[np.arange(values.shape[0]), assignment].sum())
    return assignment, cost


def k_medoids(m: DistanceMatrix, k: int, seed: int = 0) -> KMedoidsResult:
    """PAM: seeded greedy build, then best-improvement swaps to a local optimum.

    The seed fixes the candidate scan order, so results are deterministic per
    seed; total cost never increases across swap iterations.
    """
    n = m.n
    if not 1 <= k <= n:
        raise ContractViolation(f"k must be in 1..{n}, got {k}")
    values = m.values
    order = [int(x) for x in np.random.default_rng(seed).permutation(n)]

    # Greedy build: first the point minimizing its column sum, then whichever
    # candidate lowers the assignment cost the most.
    first = min(order, key=lambda c: (values[:, c].sum(), order.index(c)))
    medoids = [first]
    while len(medoids) < k:
        nearest = values[:, medoids].min(axis=1)
        best_c, best_gain = None, -np.inf
        for c in order:
            if c in medoids:
                continue
            gain = float(np.maximum(nearest - values[:, c], 0.0).sum())
            if gain > best_gain:
                best_c, best_gain = c, gain
        medoids.append(best_c)

    assignment, cost = _assignment_cost(values, medoids)
    improved = True
    while improved:
        improved = False
        best_swap, best_cost = None, cost
        for mi in range(k):
            for h in order:
                if h in medoids:
                    continue
                trial = medoids.copy()
                trial[mi] = h
                _, trial_cost = _assignment_cost(values, trial)
                if trial_cost < best_cost - 1e-12:
                    best_swap, best_cost = (mi, h), trial_cost
        if best_swap is not None:
            medoids[best_swap[0]] = best_swap[1]
            assignment, cost = _assignment_cost(values, medoids)
            improved = True
    return KMedoidsResult(medoids=medoids, assignment=assignment, cost=cost)


def silhouette(m: DistanceMatrix, assignment: np.ndarray) -> float:
    """Mean silhouette over points; diagnostic only, never drives k."""
    n = m.n
    labels = np.asarray(assignment)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        return 0.0
    scores = []
    for i in range(n):
        same = (labels == labels[i]) & (np.arange(n) != i)
        if not same.any():
            scores.append(0.0)
            continue
        a = m.values[i, same].mean()
        b = min(m.values[i, labels == c].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        scores.append(0.0 if denom == 0 else (b - a) / denom)
    return float(np.mean(scores))


@dataclass
class ClusterModel:
    """Frozen partition of the cohort with medoid traces kept for assignment."""

    k: int
    seed: int
    medoid_user_ids: list[str]
    assignment: dict[str, int]
    medoid_traces: list[Trace]
    norm: TraceNormalization
    silhouette_score: float = 0.0

    def __post_init__(self):
        if self.k != len(self.medoid_user_ids) or self.k != len(self.medoid_traces):
            raise ContractViolation("need exactly k medoids and medoid traces")
        for cluster, uid in enumerate(self.medoid_user_ids):
            if self.assignment.get(uid) != cluster:
                raise ContractViolation(f"medoid {uid} must belong to its own cluster")
        for uid, cluster in self.assignment.items():
            if not 0 <= cluster < self.k:
                raise ContractViolation(f"{uid}: cluster {cluster} out of range")

    @property
    def config_hash(self) -> str:
        return self.norm.config_hash()

    def to_dict(self) -> dict:
        return {
            "format": "nudgeloop-clusters",
            "format_version": 1,
            "k": self.k,
            "seed": self.seed,
            "medoid_user_ids": list(self.medoid_user_ids),
            "assignment": dict(sorted(self.assignment.items())),
            "config_hash": self.config_hash,
            "silhouette": self.silhouette_score,
            "normalization": self.norm.to_dict(),
            "medoid_traces": [_trace_to_dict(t) for t in self.medoid_traces],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        if d.get("format") != "nudgeloop-clusters":
            raise ValueError(f"not a cluster snapshot: format={d.get('format')!r}")
        norm = TraceNormalization.from_dict(d["normalization"])
        model = cls(
            k=d["k"],
            seed=d["seed"],
            medoid_user_ids=list(d["medoid_user_ids"]),
            assignment={u: int(c) for u, c in d["assignment"].items()},
            medoid_traces=[_trace_from_dict(t) for t in d["medoid_traces"]],
            norm=norm,
            silhouette_score=d.get("silhouette", 0.0),
        )
        if d.get("config_hash") != model.config_hash:
            raise ValueError("cluster snapshot normalization hash mismatch")
        return model


def _trace_to_dict(t: Trace) -> dict:
    return {
        "user_id": t.user_id,
        "days": {
            str(day): [{"state": s.to_dict(), "reward": r} for s, r in entries]
            for day, entries in sorted(t.days.items())
        },
    }


def _trace_from_dict(d: dict) -> Trace:
    return Trace(
        user_id=d["user_id"],
        days={
            int(day): [(StateVector.from_dict(e["state"]), e["reward"]) for e in entries]
            for day, entries in d["days"].items()
        },
    )


def cluster_users(
    traces: list[Trace], k: int, seed: int = 0, norm: TraceNormalization | None = None
) -> ClusterModel:
    """Cluster a cohort's traces; run once after the exploration phase."""
    norm = norm or TraceNormalization()
    if k > len(traces):
        raise ContractViolation(f"k={k} exceeds cohort size {len(traces)}")
    m = distance_matrix(traces, norm)
    result = k_medoids(m, k, seed)
    return ClusterModel(
        k=k,
        seed=seed,
        medoid_user_ids=[traces[i].user_id for i in result.medoids],
        assignment={t.user_id: int(c) for t, c in zip(traces, result.assignment)},
        medoid_traces=[traces[i] for i in result.medoids],
        norm=norm,
        silhouette_score=silhouette(m, result.assignment),
    )


def assign_user(t: Trace, model: ClusterModel) -> int:
    """Nearest medoid by user distance; first (lowest cluster id) wins ties."""
    if model.k < 1:
        raise ContractViolation("cluster model is empty")
    best, best_d = 0, np.inf
    for cluster, medoid in enumerate(model.medoid_traces):
        d = user_distance(t, medoid, model.norm)
        if d < best_d:
            best, best_d = cluster, d
    return best
