"""Shared helpers: state construction, finite-MDP oracles, alignment oracle.

The solver tests need finite MDPs whose states map to linearly independent
bin patterns; on such instances the one-hot basis can represent any Q table,
so LSTDQ must reproduce tabular policy evaluation exactly. States are drawn
as real (validated) StateVectors and kept only while they increase the rank
of the pattern matrix.
"""

from __future__ import annotations

import numpy as np
import pytest

from nudgeloop.mdp import (
    ACTIONS,
    BINS_PER_FEATURE,
    BLOCK_SIZE,
    DAY_PARTS,
    N_ACTIONS,
    BinningScheme,
    Dataset,
    Experience,
    StateVector,
    Trace,
)


def state_from_ratings(
    day_part: int,
    ratings: list[int] | tuple[int, ...] = (),
    received: int = 0,
    read: int = 0,
    cumulative: int | None = None,
) -> StateVector:
    """Build a valid StateVector from today's rating multiset and message counts."""
    ratings = list(ratings)
    if cumulative is None:
        cumulative = len(ratings)
    if ratings:
        highest = max(ratings)
        lowest = min(ratings)
        median = float(np.median(ratings))
        sd = float(np.std(ratings))
    else:
        highest = lowest = 0
        median = sd = 0.0
    return StateVector(
        day_part=day_part,
        number_rating=cumulative,
        highest_rating=highest,
        lowest_rating=lowest,
        median_rating=median,
        sd_rating=sd,
        number_low_rating=sum(1 for r in ratings if r <= 2),
        number_medium_rating=sum(1 for r in ratings if 3 <= r <= 5),
        number_high_rating=sum(1 for r in ratings if r >= 6),
        number_message_received=received,
        number_message_read=read,
        read_all_message=int(received > 0 and read == received),
    )


def behavior_trace(user_id: str, active: bool, rng, days: int = 7) -> Trace:
    """Synthetic week-one trace: responders rate and read, dormants do nothing."""
    t = Trace(user_id=user_id)
    for day in range(days):
        for dp in range(3):
            if active:
                n = int(rng.integers(1, 4))
                ratings = [int(rng.integers(4, 8)) for _ in range(n)]
                s = state_from_ratings(dp, ratings, received=2, read=2,
                                       cumulative=n + day * 3)
                reward = 0.5 * 1.0 + 0.5 * n
            else:
                s = state_from_ratings(dp)
                reward = 0.0
            t.append(day, s, reward)
    return t


def random_state(rng: np.random.Generator, day_part: int | None = None) -> StateVector:
    """A random valid state; ratings drawn as a multiset so statistics cohere."""
    dp = int(rng.integers(0, 3)) if day_part is None else day_part
    n_ratings = int(rng.integers(0, 6))
    ratings = [int(rng.integers(1, 8)) for _ in range(n_ratings)]
    received = int(rng.integers(0, 4))
    read = int(rng.integers(0, received + 1)) if received else 0
    cumulative = n_ratings + int(rng.integers(0, 5))
    return state_from_ratings(dp, ratings, received=received, read=read, cumulative=cumulative)


def _pattern_row(s: StateVector, scheme: BinningScheme) -> np.ndarray:
    row = np.zeros(BLOCK_SIZE)
    row[list(scheme.pattern(s))] = 1.0
    return row


def independent_states(
    n: int, scheme: BinningScheme, rng: np.random.Generator
) -> list[StateVector]:
    """n states cycling dayparts 0,1,2 whose bin patterns are linearly independent.

    Daypart cycling keeps Experience's s -> s' chaining constraint satisfiable
    for arbitrary transition structures over these states.
    """
    states: list[StateVector] = []
    rows: list[np.ndarray] = []
    seen = set()
    attempts = 0
    while len(states) < n:
        attempts += 1
        if attempts > 20000:
            raise RuntimeError("could not reach the requested pattern rank")
        s = random_state(rng, day_part=len(states) % len(DAY_PARTS))
        pat = scheme.pattern(s)
        if pat in seen:
            continue
        candidate = rows + [_pattern_row(s, scheme)]
        if np.linalg.matrix_rank(np.vstack(candidate)) == len(candidate):
            states.append(s)
            rows.append(candidate[-1])
            seen.add(pat)
    return states


class FiniteMDP:
    """Deterministic finite MDP over independent-pattern states.

    Transitions respect the daypart cycle: from a state with daypart d every
    action leads to some state with daypart (d + 1) mod 3.
    """

    def __init__(self, n_states: int, scheme: BinningScheme, rng: np.random.Generator,
                 reward_scale: float = 1.0):
        assert n_states >= 3, "need one state per daypart"
        self.scheme = scheme
        self.states = independent_states(n_states, scheme, rng)
        self.n = n_states
        by_part = {d: [i for i, s in enumerate(self.states) if s.day_part == d]
                   for d in DAY_PARTS}
        self.next_state = np.empty((self.n, N_ACTIONS), dtype=np.int64)
        self.reward = np.empty((self.n, N_ACTIONS))
        for i, s in enumerate(self.states):
            succ = by_part[(s.day_part + 1) % len(DAY_PARTS)]
            for a in ACTIONS:
                self.next_state[i, a] = succ[rng.integers(0, len(succ))]
                self.reward[i, a] = reward_scale * float(rng.uniform(0.0, 2.0))

    def dataset(self, repeats: int = 1) -> Dataset:
        """One experience per (state, action), optionally replicated."""
        data = Dataset()
        for _ in range(repeats):
            for i, s in enumerate(self.states):
                for a in ACTIONS:
                    j = int(self.next_state[i, a])
                    data.add(Experience(
                        user_id="mdp",
                        s=s,
                        a=a,
                        r=float(self.reward[i, a]),
                        s_prime=self.states[j],
                        day_index=0,
                        day_part=s.day_part,
                    ))
        return data

    def q_policy(self, policy: np.ndarray, gamma: float) -> np.ndarray:
        """Exact tabular Q of the fixed policy (linear solve over (s,a) pairs)."""
        size = self.n * N_ACTIONS
        A = np.eye(size)
        b = np.empty(size)
        for i in range(self.n):
            for a in ACTIONS:
                row = i * N_ACTIONS + a
                j = int(self.next_state[i, a])
                A[row, j * N_ACTIONS + int(policy[j])] -= gamma
                b[row] = self.reward[i, a]
        return np.linalg.solve(A, b).reshape(self.n, N_ACTIONS)

    def policy_iteration(self, gamma: float) -> tuple[np.ndarray, np.ndarray]:
        """Exhaustive policy iteration; returns (optimal policy, its Q table)."""
        policy = np.zeros(self.n, dtype=np.int64)
        for _ in range(200):
            q = self.q_policy(policy, gamma)
            improved = np.argmax(q, axis=1)  # first wins on ties
            if np.array_equal(improved, policy):
                return policy, q
            policy = improved
        raise RuntimeError("policy iteration did not stabilize")

    def min_q_gap(self, gamma: float) -> float:
        """Smallest best-vs-second-best gap under the optimal policy's Q."""
        _, q = self.policy_iteration(gamma)
        ordered = np.sort(q, axis=1)
        return float(np.min(ordered[:, -1] - ordered[:, -2]))


def make_mdp(n_states: int, scheme: BinningScheme, seed: int,
             gamma: float = 0.95, min_gap: float = 1e-4) -> FiniteMDP:
    """A FiniteMDP whose optimal actions are unambiguous (no near-ties)."""
    for offset in range(50):
        mdp = FiniteMDP(n_states, scheme, np.random.default_rng(seed + 1000 * offset))
        if mdp.min_q_gap(gamma) > min_gap:
            return mdp
    raise RuntimeError("no well-separated MDP instance found")


def brute_force_alignment_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum alignment cost by explicit path enumeration (lengths <= 5).

    Independent of the DP recurrence on purpose: walks every monotone path
    from (0,0) to (n-1,m-1) with steps right/down/diagonal and sums local
    Euclidean distances along it.
    """
    n, m = len(a), len(b)

    def local(i: int, j: int) -> float:
        return float(np.linalg.norm(np.asarray(a[i], dtype=float) - np.asarray(b[j], dtype=float)))

    best = [np.inf]

    def walk(i: int, j: int, cost: float) -> None:
        cost += local(i, j)
        if cost >= best[0]:
            return
        if i == n - 1 and j == m - 1:
            best[0] = cost
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, cost)
        if i + 1 < n:
            walk(i + 1, j, cost)
        if j + 1 < m:
            walk(i, j + 1, cost)

    walk(0, 0, 0.0)
    return best[0]


def rand_index(labels_a, labels_b) -> float:
    """Fraction of pairs on which two partitions agree."""
    n = len(labels_a)
    assert n == len(labels_b) and n >= 2
    agree = 0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs += 1
            same_a = labels_a[i] == labels_a[j]
            same_b = labels_b[i] == labels_b[j]
            if same_a == same_b:
                agree += 1
    return agree / pairs


@pytest.fixture
def scheme() -> BinningScheme:
    return BinningScheme.default()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
