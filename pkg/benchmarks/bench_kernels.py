"""Benchmark the numba kernels against the pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--families 2000] [--rows 1500]

The same workloads run through both backends; the table reports wall time
and speedup.  Running with TRADECAUSE_NO_NUMBA=1 only exercises the numpy
path (there is nothing to compare against).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tradecause import _kernels


def _bge_workload(m: int, families: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m * 40, m))
    xs = (x - x.mean(0)) / x.std(0)
    r = 0.5 * np.eye(m) + xs.T @ xs
    jobs = []
    for _ in range(families):
        node = int(rng.integers(m))
        others = [i for i in range(m) if i != node]
        k = int(rng.integers(0, 5))
        parents = np.sort(rng.choice(others, size=k, replace=False)).astype(np.int64)
        jobs.append((node, parents))
    return r, jobs


def bench_bge(families: int) -> dict[str, float]:
    m = 12
    r, jobs = _bge_workload(m, families)
    n = m * 40

    def run(fn):
        acc = 0.0
        for node, parents in jobs:
            acc += fn(r, node, parents, n, m, 1.0, m + 2.0, np.log(0.5))
        return acc

    timings = {}
    if _kernels.USING_NUMBA:
        run_nb = lambda: run(_kernels.bge_local_score_nb)
        run_nb()  # compile
        t0 = time.perf_counter()
        run_nb()
        timings["numba"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    run(_kernels.bge_local_score_np)
    timings["numpy"] = time.perf_counter() - t0
    return timings


def bench_knn(rows: int) -> dict[str, float]:
    rng = np.random.default_rng(1)
    feats = np.ascontiguousarray(rng.normal(size=(rows, 4)))
    vals = np.ascontiguousarray(rng.integers(0, 2, rows).astype(np.float64))
    timings = {}
    if _kernels.USING_NUMBA:
        _kernels.knn_mean_neighbor_values_nb(feats[:20], vals[:20], 5)  # compile
        t0 = time.perf_counter()
        _kernels.knn_mean_neighbor_values_nb(feats, vals, 5)
        timings["numba"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    _kernels.knn_mean_neighbor_values_np(feats, vals, 5)
    timings["numpy"] = time.perf_counter() - t0
    return timings


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--families", type=int, default=2000,
                        help="BGe local scores per backend")
    parser.add_argument("--rows", type=int, default=1500,
                        help="rows for the k-NN workload")
    args = parser.parse_args()

    print(f"active backend: {'numba' if _kernels.USING_NUMBA else 'numpy'}")
    results = {
        f"bge local scores x{args.families}": bench_bge(args.families),
        f"knn neighbor means n={args.rows}": bench_knn(args.rows),
    }
    for name, timings in results.items():
        line = f"{name:33s}"
        for backend in ("numba", "numpy"):
            if backend in timings:
                line += f"  {backend} {timings[backend] * 1e3:9.2f} ms"
        if "numba" in timings:
            line += f"  speedup {timings['numpy'] / timings['numba']:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
