"""Timing comparison between the compiled kernels and the numpy fallback.

Run from an installed checkout:

    python3 benchmarks/bench_kernels.py [--repeats N]

Each case is checked for agreement between backends before timing, then the
best wall time out of N runs is reported for both.
"""

import argparse
import time

import numpy as np

from nudgeloop.kernels import pure
from nudgeloop.mdp import BLOCK_SIZE, N_ACTIONS, N_FEATURES

try:
    from nudgeloop.kernels import _core
except ImportError:
    _core = None


def make_traces(rng, length, dim=13):
    a = rng.uniform(0.0, 8.0, size=(length, dim))
    b = rng.uniform(0.0, 8.0, size=(length, dim))
    return a, b


def make_batch(rng, n):
    def pats(count):
        bins = rng.integers(0, 4, size=(count, N_FEATURES))
        return 4 * np.arange(N_FEATURES) + bins

    return dict(
        patterns=pats(n),
        actions=rng.integers(0, N_ACTIONS, size=n),
        next_patterns=pats(n),
        next_actions=rng.integers(0, N_ACTIONS, size=n),
        rewards=rng.uniform(0.0, 4.0, size=n),
        gamma=0.95,
        dim=N_ACTIONS * BLOCK_SIZE,
        block_size=BLOCK_SIZE,
    )


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(repeats):
    rng = np.random.default_rng(1)
    rows = []

    for length in (21, 90, 365):
        a, b = make_traces(rng, length)
        want = pure.dtw_cost(a, b)
        assert abs(_core.dtw_cost(a, b) - want) < 1e-9 * max(1.0, want)
        rows.append(
            (
                f"dtw_cost  T={length}",
                best_of(lambda: pure.dtw_cost(a, b), repeats),
                best_of(lambda: _core.dtw_cost(a, b), repeats),
            )
        )

    for n in (1_000, 10_000, 50_000):
        kw = make_batch(rng, n)
        a_pure, b_pure = pure.lstdq_accumulate(**kw)
        a_core, b_core = _core.lstdq_accumulate(**kw)
        assert np.allclose(a_pure, a_core) and np.allclose(b_pure, b_core)
        rows.append(
            (
                f"lstdq_accumulate  N={n}",
                best_of(lambda: pure.lstdq_accumulate(**kw), repeats),
                best_of(lambda: _core.lstdq_accumulate(**kw), repeats),
            )
        )

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'pure':>10}  {'compiled':>10}  speedup")
    for name, t_pure, t_core in rows:
        print(
            f"{name:<{width}}  {t_pure * 1e3:>8.2f}ms  {t_core * 1e3:>8.2f}ms  "
            f"{t_pure / t_core:>6.1f}x"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled kernels not built; nothing to compare against")
    run(args.repeats)


if __name__ == "__main__":
    main()
