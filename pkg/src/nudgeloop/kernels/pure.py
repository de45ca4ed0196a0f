"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or when
``NUDGELOOP_PURE_KERNELS=1`` forces the fallback. Semantics are identical to
``_core``; the benchmark in benchmarks/bench_kernels.py compares the two.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def dtw_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Minimal cumulative alignment cost between two sequences of vectors.

    Classic dynamic program over the |a| x |b| grid with Euclidean local
    distance and steps (i-1,j), (i,j-1), (i-1,j-1).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise ValueError("dtw_cost requires nonempty sequences")
    # local[i, j] = ||a_i - b_j||
    local = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    prev = np.full(m + 1, np.inf)
    prev[0] = 0.0
    cur = np.empty(m + 1)
    for i in range(1, n + 1):
        cur[0] = np.inf
        for j in range(1, m + 1):
            cur[j] = local[i - 1, j - 1] + min(prev[j], cur[j - 1], prev[j - 1])
        prev, cur = cur, prev
    return float(prev[m])


def lstdq_accumulate(
    patterns: np.ndarray,
    actions: np.ndarray,
    next_patterns: np.ndarray,
    next_actions: np.ndarray,
    rewards: np.ndarray,
    gamma: float,
    dim: int,
    block_size: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate A = sum phi (phi - gamma phi')^T and b = sum phi r.

    ``patterns`` holds each state's 12 block-relative slot ids; the action
    shifts them into the right block. Vectorized with np.add.at over the
    (active row, active column) pairs of every experience.
    """
    patterns = np.asarray(patterns, dtype=np.int64)
    next_patterns = np.asarray(next_patterns, dtype=np.int64)
    actions = np.asarray(actions, dtype=np.int64)
    next_actions = np.asarray(next_actions, dtype=np.int64)
    rewards = np.asarray(rewards, dtype=np.float64)

    idx = actions[:, None] * block_size + patterns  # (N, F)
    idx_next = next_actions[:, None] * block_size + next_patterns

    n, f = idx.shape
    A = np.zeros((dim, dim))
    b = np.zeros(dim)

    rows = np.repeat(idx, f, axis=1).ravel()  # (N*F*F,)
    cols_self = np.tile(idx, (1, f)).ravel()
    cols_next = np.tile(idx_next, (1, f)).ravel()
    np.add.at(A, (rows, cols_self), 1.0)
    np.add.at(A, (rows, cols_next), -gamma)
    np.add.at(b, idx.ravel(), np.repeat(rewards, f))
    return A, b
