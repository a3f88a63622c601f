#!/usr/bin/env python3
"""Benchmark the jit kernels against their numpy/python fallbacks.

Run:  python bench/bench_kernels.py [--repeat N]

The jit path is the one the library uses by default; exporting
MMDIST_NO_NUMBA=1 switches the whole package to the fallbacks measured here.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mmdist import _kernels
from mmdist.generate import random_measure, random_space


def timeit(fn, *args, repeat: int) -> float:
    fn(*args)  # warm (JIT compile / cache load)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_flow(rng, repeat):
    n = m = 24
    mu, nu = random_measure(n, rng), random_measure(m, rng)
    allowed = rng.random((n, m)) < 0.4
    jit = timeit(_kernels.ek_max_flow, mu, nu, allowed, repeat=repeat)
    py = timeit(_kernels.ek_max_flow_py, mu, nu, allowed, repeat=repeat)
    return "max-flow 24x24", jit, py


def bench_prohorov(rng, repeat):
    n = 12
    x = random_space(n, rng)
    levels = np.unique(np.concatenate(([0.0], x.dist.ravel())))
    mu, nu = random_measure(n, rng), random_measure(n, rng)
    jit = timeit(_kernels.prohorov_scan, levels, np.asarray(x.dist), mu, nu, repeat=repeat)
    py = timeit(_kernels.prohorov_scan_py, levels, np.asarray(x.dist), mu, nu, repeat=repeat)
    return f"prohorov subset scan 2^{n}", jit, py


def bench_box(rng, repeat):
    n, m = 3, 3
    x, y = random_space(n, rng), random_space(m, rng)
    from mmdist.core import pairwise_distortion_matrix
    q = pairwise_distortion_matrix(x, y)
    mu, nu = np.asarray(x.mass), np.asarray(y.mass)
    jit = timeit(_kernels.box_subset_scan, q, mu, nu, n, m, repeat=repeat)
    py = timeit(_kernels.box_subset_scan_py, q, mu, nu, n, m, repeat=repeat)
    return "box subset scan 2^9 (flows inside)", jit, py


def bench_violator(rng, repeat):
    k = 13
    pair_eps = rng.uniform(-0.5, 1.0, (k, k))
    pair_eps = (pair_eps + pair_eps.T) / 2
    np.fill_diagonal(pair_eps, 0.0)
    w = random_measure(k, rng)
    jit = timeit(_kernels.violator_scan, pair_eps, w, repeat=repeat)
    py = timeit(_kernels.violator_scan_py, pair_eps, w, repeat=repeat)
    return f"violator subset scan 2^{k}", jit, py


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _kernels.NUMBA_ENABLED:
        print("numba is disabled (MMDIST_NO_NUMBA or missing install);")
        print("both columns below would measure the same fallback. Aborting.")
        return
    rng = np.random.default_rng(0)
    rows = [bench(rng, args.repeat) for bench in
            (bench_flow, bench_prohorov, bench_box, bench_violator)]
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel'.ljust(width)}  {'jit':>12}  {'fallback':>12}  {'speedup':>8}")
    for name, jit, py in rows:
        print(f"{name.ljust(width)}  {jit * 1e3:10.3f}ms  {py * 1e3:10.3f}ms  "
              f"{py / jit:7.1f}x")


if __name__ == "__main__":
    main()
