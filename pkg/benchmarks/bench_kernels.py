"""Compare the compiled search/Kendall kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py --rows 1000000 --classes 5 --repeat 3

Both paths run in one process: the loop versions are compiled when numba is
available, the vectorised versions are always plain numpy. Results are
checked for bit equality before timing is reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pandora import _accel, _kernels


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=1_000_000, help="searches per call (one cost draw each)")
    parser.add_argument("--classes", type=int, default=5)
    parser.add_argument("--models", type=int, default=200, help="ranking length for the Kendall kernel")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    p = rng.dirichlet(np.ones(args.classes), size=1)
    y = np.zeros(1, dtype=np.int64)
    c = rng.random((args.rows, args.classes))
    x = rng.random(args.models)
    z = rng.random(args.models)

    if _accel.USE_NUMBA:
        t0 = time.perf_counter()
        _kernels._search_costs_loop(p, y, c[:2])
        _kernels._kendall_counts_loop(x[:3], z[:3])
        print(f"numba compile/load: {time.perf_counter() - t0:.2f}s")
    else:
        print("numba disabled (PANDORA_DISABLE_NUMBA set or numba missing): loop timings are interpreted Python")

    rows = []
    t_loop, (tot_loop, _) = _best_of(lambda: _kernels._search_costs_loop(p, y, c), args.repeat)
    t_vec, (tot_vec, _) = _best_of(lambda: _kernels._search_costs_vectorized(p, y, c), args.repeat)
    assert np.array_equal(tot_loop, tot_vec), "search kernels disagree"
    rows.append((f"search_costs  rows={args.rows} K={args.classes}", t_loop, t_vec))

    t_loop, k_loop = _best_of(lambda: _kernels._kendall_counts_loop(x, z), args.repeat)
    t_vec, k_vec = _best_of(lambda: _kernels._kendall_counts_vectorized(x, z), args.repeat)
    assert tuple(k_loop) == tuple(k_vec), "Kendall kernels disagree"
    rows.append((f"kendall_counts n={args.models}", t_loop, t_vec))

    print(f"{'kernel':<40} {'numba':>10} {'numpy':>10} {'speed-up':>9}")
    for name, a, b in rows:
        print(f"{name:<40} {a:>9.4f}s {b:>9.4f}s {b / a:>8.1f}x")


if __name__ == "__main__":
    main()
