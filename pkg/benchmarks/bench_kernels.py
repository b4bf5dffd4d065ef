#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-numpy fallback.

Runs each hot kernel on both backends (when both import), then times the
covariance build across dataset sizes to show its linear scaling. Invoke as

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from ballpca._kernels import available_backends, backend
from ballpca.basis import build_basis, build_grid
from ballpca.invariant_pca import accumulate_covariance
from ballpca.transform import CoefficientVector, expand_function


def best_of(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(quick):
    impls = available_backends()
    rng = np.random.default_rng(0)
    L = 24
    n_pts = 20_000 if quick else 200_000
    x = rng.uniform(-1.0, 1.0, n_pts)
    N = 96
    vol = rng.standard_normal((N, N, N))
    pts = rng.uniform(-1.0, 1.0, size=(n_pts, 3))

    cases = [
        (f"legendre_table L={L}, {n_pts} pts", lambda impl: impl.legendre_table(L, x)),
        (f"trilinear N={N}, {n_pts} pts", lambda impl: impl.trilinear_interpolate(vol, pts)),
    ]
    print(f"active backend: {backend()}")
    print(f"available: {sorted(impls)}")
    print()
    print(f"{'kernel':<40} " + " ".join(f"{name:>12}" for name in sorted(impls)) + "  speedup")
    for label, call in cases:
        times = {name: best_of(lambda impl=impls[name]: call(impl)) for name in sorted(impls)}
        cols = " ".join(f"{times[name] * 1e3:>10.2f}ms" for name in sorted(times))
        if "compiled" in times and "numpy" in times:
            ratio = times["numpy"] / times["compiled"]
            print(f"{label:<40} {cols}  {ratio:>6.2f}x")
        else:
            print(f"{label:<40} {cols}")


def bench_expand(quick):
    spec = build_basis(8, 8 * np.pi)
    grid = build_grid(spec)
    rng = np.random.default_rng(1)
    samples = rng.standard_normal(grid.n_nodes)
    t = best_of(lambda: expand_function(spec, grid, samples), repeats=3 if quick else 5)
    print()
    print(f"expand_function L=8 ({grid.n_nodes} nodes, D={spec.D}): {t * 1e3:.2f} ms")


def bench_covariance_scaling(quick):
    spec = build_basis(16, 16 * np.pi)
    rng = np.random.default_rng(2)
    sizes = (50, 100, 200) if quick else (50, 100, 200, 400)
    pool = {
        n: [
            CoefficientVector(
                spec, rng.standard_normal(spec.D) + 1j * rng.standard_normal(spec.D)
            )
            for _ in range(n)
        ]
        for n in sizes
    }
    for _ in range(3):
        accumulate_covariance(pool[sizes[-1]])
    print()
    print(f"covariance build, L=16 (D={spec.D}, D'={spec.D_prime}):")
    times = {}
    for n in sizes:
        times[n] = best_of(lambda vecs=pool[n]: accumulate_covariance(vecs))
        print(f"  n={n:<4} {times[n] * 1e3:8.2f} ms")
    ns = np.array(sizes, dtype=float)
    ts = np.array([times[n] for n in sizes])
    slope = np.polyfit(np.log(ns), np.log(ts), 1)[0]
    print(f"  fitted scaling exponent: {slope:.3f} (linear = 1.0)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()
    bench_kernels(args.quick)
    bench_expand(args.quick)
    bench_covariance_scaling(args.quick)


if __name__ == "__main__":
    main()
