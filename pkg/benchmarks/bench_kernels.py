"""Timing comparison of the jitted kernels against the pure-Python/numpy
fallback path.

Run:  python3 benchmarks/bench_kernels.py [--sizes 100 400 800]
"""

import argparse
import time

import numpy as np

from m1lab import kernels
from m1lab._accel import HAS_NUMBA
from m1lab.paths import CadlagPath, completed_graph, uniform_distance


def random_step_path(rng, n_jumps):
    times = np.sort(rng.random(n_jumps))
    times = np.concatenate([[0.0], np.unique(times)])
    vals = np.cumsum(rng.standard_normal(times.size))
    return CadlagPath(times, vals, "step")


def timed(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_frechet(rng, n_jumps):
    x = random_step_path(rng, n_jumps)
    y = random_step_path(rng, n_jumps)
    pt, pv = completed_graph(x)
    qt, qv = completed_graph(y)
    # radius at which the full sweep runs (corner checks pass, answer is True)
    d = uniform_distance(x, y)
    rows = []
    if HAS_NUMBA:
        jitted = kernels.frechet_feasible
        if jitted is kernels.frechet_feasible_py:
            from m1lab._accel import jit_always

            jitted = jit_always(kernels.frechet_feasible_py)
        jitted(pt, pv, qt, qv, d)  # compile outside the timing
        _, t_jit = timed(jitted, pt, pv, qt, qv, d)
        rows.append(("frechet_feasible", n_jumps, "numba", t_jit))
    _, t_py = timed(kernels.frechet_feasible_py, pt, pv, qt, qv, d)
    rows.append(("frechet_feasible", n_jumps, "python", t_py))
    return rows


def bench_j1(rng, n_jumps):
    x = random_step_path(rng, n_jumps)
    y = random_step_path(rng, n_jumps)
    tx = x.times[1:]
    sy = y.times[1:]
    levx = x.values[:, 0]
    levy_ = y.values[:, 0]
    d = uniform_distance(x, y)
    rows = []
    if HAS_NUMBA:
        jitted = kernels.j1_feasible
        if jitted is kernels.j1_feasible_py:
            from m1lab._accel import jit_always

            jitted = jit_always(kernels.j1_feasible_py)
        jitted(tx, sy, levx, levy_, d)
        _, t_jit = timed(jitted, tx, sy, levx, levy_, d)
        rows.append(("j1_feasible", n_jumps, "numba", t_jit))
    _, t_py = timed(kernels.j1_feasible_py, tx, sy, levx, levy_, d)
    rows.append(("j1_feasible", n_jumps, "python", t_py))
    return rows


def bench_garch(rng, n):
    z = rng.standard_normal(n + 1000)
    args = (z, 1.0, 0.5, 0.3, 5.0, 1000)
    rows = []
    if HAS_NUMBA:
        jitted = kernels.garch_recursion
        if jitted is kernels.garch_recursion_py:
            from m1lab._accel import jit_always

            jitted = jit_always(kernels.garch_recursion_py)
        jitted(*args)
        _, t_jit = timed(jitted, *args)
        rows.append(("garch_recursion", n, "numba", t_jit))
    _, t_py = timed(kernels.garch_recursion_py, *args)
    rows.append(("garch_recursion", n, "python", t_py))
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 800])
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    rows = []
    for n in args.sizes:
        rows += bench_frechet(rng, n)
        rows += bench_j1(rng, n)
    rows += bench_garch(rng, 200_000)
    print(f"{'kernel':<20} {'size':>8} {'path':>8} {'seconds':>12} {'speedup':>9}")
    by_key = {}
    for name, size, path, sec in rows:
        by_key.setdefault((name, size), {})[path] = sec
    for name, size, path, sec in rows:
        speed = ""
        pair = by_key[(name, size)]
        if path == "numba" and "python" in pair:
            speed = f"{pair['python'] / sec:8.1f}x"
        print(f"{name:<20} {size:>8} {path:>8} {sec:>12.6f} {speed:>9}")


if __name__ == "__main__":
    main()
