"""Compare the compiled kernels with the numpy fallback.

Runs the two hot paths (basis-pursuit LP solves and Jacobi eigen/SVD sweeps)
through the public API once per backend, by swapping the functions that
``gausspoly._kernels`` exposes.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--n 40]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gausspoly import _fallback, _kernels
from gausspoly.ensemble import EnsembleConfig, sample_ensemble
from gausspoly.l1norm import minkowski_norm
from gausspoly.numerics import eigh, singular_values

KERNELS = ("jacobi_eigh", "jacobi_svd_rows", "simplex_l1")


def use(module) -> None:
    for name in KERNELS:
        setattr(_kernels, name, getattr(module, name))


def workloads(n: int):
    E = sample_ensemble(EnsembleConfig(n, 2 * n, 0))
    rng = np.random.default_rng(0)
    Y = rng.standard_normal((50, n))
    S = rng.standard_normal((n, n))
    S = S + S.T
    M = rng.standard_normal((n, 2 * n))
    return {
        "lp solves (50 norms)": lambda: [minkowski_norm(E, y) for y in Y],
        "jacobi eigh (10 runs)": lambda: [eigh(S) for _ in range(10)],
        "jacobi svd (10 runs)": lambda: [singular_values(M) for _ in range(10)],
    }


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--n", type=int, default=40)
    args = p.parse_args(argv)
    try:
        from gausspoly import _core
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    jobs = workloads(args.n)
    print(f"{'workload':<24}{'cython (s)':>12}{'python (s)':>12}{'speedup':>10}")
    for name, fn in jobs.items():
        use(_core)
        fast = best_of(fn, args.repeat)
        use(_fallback)
        slow = best_of(fn, args.repeat)
        print(f"{name:<24}{fast:>12.4f}{slow:>12.4f}{slow / fast:>9.1f}x")
    use(_core if _kernels.BACKEND == "cython" else _fallback)


if __name__ == "__main__":
    main()
