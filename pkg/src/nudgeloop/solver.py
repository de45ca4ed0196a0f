"""Batch policy learning: LSTDQ solve, the LSPI loop, and action selection.

LSTDQ builds the linear system A w = b with
A = sum phi(s,a) (phi(s,a) - gamma phi(s', pi(s')))^T and b = sum phi(s,a) r
over all experiences, where pi is the target policy's greedy rule, then solves
the ridge-stabilized system. LSPI iterates LSTDQ against the previous iterate's
greedy policy until the weight change falls below ``stop_epsilon`` in max norm
or ``max_iterations`` is hit.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .mdp import (
    ACTIONS,
    BASIS_DIM,
    BLOCK_SIZE,
    N_ACTIONS,
    BinningScheme,
    ContractViolation,
    Dataset,
    StateVector,
    basis,
)

FIRST_WINS = "first_wins"


class SolverFailure(RuntimeError):
    """The linear system could not be solved; carries condition diagnostics."""

    def __init__(self, message: str, condition: float = float("inf"), residual: float = float("nan")):
        super().__init__(f"{message} (condition={condition:.3e}, residual={residual:.3e})")
        self.condition = condition
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 0.95
    epsilon: float = 0.1
    max_iterations: int = 25
    stop_epsilon: float = 1e-5
    # The one-hot basis leaves A singular whenever a (feature-bin, action)
    # cell is unobserved; a small diagonal ridge keeps the solve stable.
    ridge: float = 1e-6
    tie_break: str = FIRST_WINS

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ContractViolation("gamma must be in [0, 1)")
        if not 0 <= self.epsilon <= 1:
            raise ContractViolation("epsilon must be in [0, 1]")
        if self.max_iterations < 1:
            raise ContractViolation("max_iterations must be >= 1")
        if self.stop_epsilon <= 0:
            raise ContractViolation("stop_epsilon must be > 0")
        if self.ridge < 0:
            raise ContractViolation("ridge must be >= 0")
        if self.tie_break != FIRST_WINS:
            raise ContractViolation(f"unknown tie_break rule: {self.tie_break}")

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "max_iterations": self.max_iterations,
            "stop_epsilon": self.stop_epsilon,
            "ridge": self.ridge,
            "tie_break": self.tie_break,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(**d)


@dataclass(frozen=True)
class Policy:
    """Immutable snapshot of learned weights plus everything needed to act."""

    weights: np.ndarray
    config: SolverConfig
    scheme: BinningScheme
    version: int = 0
    cluster_id: str | None = None
    converged: bool = True
    iterations: int = 0
    watermark: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (BASIS_DIM,):
            raise ContractViolation(
                f"weights must have length {BASIS_DIM}, got shape {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            raise ContractViolation("weights must be finite")
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    @classmethod
    def zero(cls, config: SolverConfig, scheme: BinningScheme, **kw) -> "Policy":
        return cls(weights=np.zeros(BASIS_DIM), config=config, scheme=scheme, **kw)


def q_value(weights: np.ndarray, s: StateVector, a: int, scheme: BinningScheme) -> float:
    """Inner product of the weights with basis(s, a)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (BASIS_DIM,):
        raise ContractViolation(f"weights must have length {BASIS_DIM}")
    return float(w @ basis(s, a, scheme))


def _q_values(weights: np.ndarray, s: StateVector, scheme: BinningScheme) -> np.ndarray:
    pattern = np.asarray(scheme.pattern(s), dtype=np.int64)
    offsets = np.arange(N_ACTIONS, dtype=np.int64) * BLOCK_SIZE
    return weights[pattern[None, :] + offsets[:, None]].sum(axis=1)


def greedy_action(p: Policy, s: StateVector) -> int:
    """Argmax over the four actions; first (lowest id) wins on exact ties."""
    q = _q_values(p.weights, s, p.scheme)
    best = 0
    for a in ACTIONS[1:]:
        if q[a] > q[best]:
            best = a
    return best


def epsilon_greedy_pick(
    p: Policy, s: StateVector, rng: np.random.Generator
) -> tuple[int, bool]:
    """With probability epsilon pick uniformly among all four actions.

    Exploration is uniform over the full action set, so the observed
    non-greedy rate is epsilon * 3/4. Returns (action, was_random_draw).
    """
    if rng.random() < p.config.epsilon:
        return int(rng.integers(0, N_ACTIONS)), True
    return greedy_action(p, s), False


def epsilon_greedy(p: Policy, s: StateVector, rng: np.random.Generator) -> int:
    return epsilon_greedy_pick(p, s, rng)[0]


@dataclass
class _Encoded:
    patterns: np.ndarray  # (N, 12) block-relative slot ids
    actions: np.ndarray  # (N,)
    next_patterns: np.ndarray  # (N, 12)
    rewards: np.ndarray  # (N,)


def _encode(data: Dataset, scheme: BinningScheme) -> _Encoded:
    n = len(data)
    patterns = np.empty((n, len(scheme.cuts) + len(scheme.categorical)), dtype=np.int64)
    next_patterns = np.empty_like(patterns)
    actions = np.empty(n, dtype=np.int64)
    rewards = np.empty(n)
    for i, e in enumerate(data):
        patterns[i] = scheme.pattern(e.s)
        next_patterns[i] = scheme.pattern(e.s_prime)
        actions[i] = e.a
        rewards[i] = e.r
    return _Encoded(patterns, actions, next_patterns, rewards)


def _greedy_next_actions(weights: np.ndarray, next_patterns: np.ndarray) -> np.ndarray:
    offsets = np.arange(N_ACTIONS, dtype=np.int64) * BLOCK_SIZE
    idx = next_patterns[:, None, :] + offsets[None, :, None]  # (N, 4, 12)
    q = weights[idx].sum(axis=2)
    return np.argmax(q, axis=1)  # first occurrence wins ties


def _solve(A: np.ndarray, b: np.ndarray, ridge: float) -> np.ndarray:
    m = A + ridge * np.eye(A.shape[0])
    w, _, _, sv = np.linalg.lstsq(m, b, rcond=None)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    residual = float(np.linalg.norm(m @ w - b))
    scale = max(1.0, float(np.linalg.norm(b)))
    if not np.all(np.isfinite(w)) or residual > 1e-8 * scale:
        raise SolverFailure(
            "linear system is singular or inconsistent even with ridge",
            condition=condition,
            residual=residual,
        )
    return w


def _lstdq_encoded(enc: _Encoded, target_weights: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    next_actions = _greedy_next_actions(target_weights, enc.next_patterns)
    A, b = kernels.lstdq_accumulate(
        enc.patterns,
        enc.actions,
        enc.next_patterns,
        next_actions,
        enc.rewards,
        cfg.gamma,
        BASIS_DIM,
        BLOCK_SIZE,
    )
    return _solve(A, b, cfg.ridge)


def lstdq(data: Dataset, target_policy: Policy, cfg: SolverConfig | None = None) -> np.ndarray:
    """One policy-evaluation solve against the target policy's greedy rule."""
    if len(data) == 0:
        raise ContractViolation("lstdq requires a nonempty dataset")
    cfg = cfg or target_policy.config
    enc = _encode(data, target_policy.scheme)
    return _lstdq_encoded(enc, target_policy.weights, cfg)


def lspi(
    data: Dataset,
    cfg: SolverConfig,
    scheme: BinningScheme,
    init: np.ndarray | None = None,
    version: int = 0,
    cluster_id: str | None = None,
    watermark: dict | None = None,
) -> Policy:
    """Iterate LSTDQ to a fixed point; returns the next policy version.

    Weights start from ``init`` (all zeros when omitted, which makes cold-start
    greedy behaviour deterministic: every tie resolves to action 0).
    """
    if len(data) == 0:
        raise ContractViolation("lspi requires a nonempty dataset")
    enc = _encode(data, scheme)
    w = np.zeros(BASIS_DIM) if init is None else np.asarray(init, dtype=np.float64).copy()
    if w.shape != (BASIS_DIM,):
        raise ContractViolation(f"init weights must have length {BASIS_DIM}")
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        w_next = _lstdq_encoded(enc, w, cfg)
        delta = float(np.max(np.abs(w_next - w)))
        w = w_next
        if delta < cfg.stop_epsilon:
            converged = True
            break
    return Policy(
        weights=w,
        config=cfg,
        scheme=scheme,
        version=version + 1,
        cluster_id=cluster_id,
        converged=converged,
        iterations=iterations,
        watermark=watermark or {},
    )


# Policy snapshot files: plain JSON carrying version, solver config, bin
# scheme, cluster id, convergence flag and the training-data watermark.

SNAPSHOT_FORMAT = "nudgeloop-policy"
SNAPSHOT_FORMAT_VERSION = 1


class SnapshotError(ValueError):
    """A policy snapshot failed validation and was refused."""


def policy_to_dict(p: Policy) -> dict:
    return {
        "format": SNAPSHOT_FORMAT,
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "version": p.version,
        "cluster_id": p.cluster_id,
        "converged": p.converged,
        "iterations": p.iterations,
        "config": p.config.to_dict(),
        "scheme": p.scheme.to_dict(),
        "watermark": p.watermark,
        "weights": [float(x) for x in p.weights],
    }


def policy_from_dict(d: dict) -> Policy:
    if d.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"not a policy snapshot: format={d.get('format')!r}")
    if d.get("format_version") != SNAPSHOT_FORMAT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {d.get('format_version')!r}")
    weights = d.get("weights")
    if not isinstance(weights, list) or len(weights) != BASIS_DIM:
        raise SnapshotError(
            f"weight vector must have length {BASIS_DIM}, "
            f"got {len(weights) if isinstance(weights, list) else type(weights).__name__}"
        )
    if not all(isinstance(x, (int, float)) and math.isfinite(x) for x in weights):
        raise SnapshotError("weights must be finite numbers")
    try:
        return Policy(
            weights=np.asarray(weights, dtype=np.float64),
            config=SolverConfig.from_dict(d["config"]),
            scheme=BinningScheme.from_dict(d["scheme"]),
            version=int(d["version"]),
            cluster_id=d.get("cluster_id"),
            converged=bool(d["converged"]),
            iterations=int(d.get("iterations", 0)),
            watermark=dict(d.get("watermark", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed policy snapshot: {exc}") from exc


def save_policy(p: Policy, path: str) -> None:
    """Atomic write: readers see the old snapshot or the new one, never a mix."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(policy_to_dict(p), fh)
    os.replace(tmp, path)


def load_policy(path: str) -> Policy:
    with open(path, encoding="utf-8") as fh:
        return policy_from_dict(json.load(fh))


def next_version(p: Policy) -> Policy:
    return replace(p, version=p.version + 1)
