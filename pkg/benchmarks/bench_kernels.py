"""Time the compiled limiter kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 100,1000,10000] [--repeat 20]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from cutdg import _kernels_py

try:
    from cutdg import _kernels
except ImportError:
    _kernels = None


def make_inputs(n: int, rng: np.random.Generator) -> dict:
    k = 5
    mono = rng.normal(size=(n, 4))
    lo = np.zeros(n)
    hi = rng.uniform(0.2, 1.0, n)
    mean = rng.uniform(-0.5, 0.5, n)
    vmin = mean - rng.uniform(0.0, 1.0, n)
    vmax = mean + rng.uniform(0.0, 1.0, n)
    rbar = rng.uniform(0.5, 1.5, n)
    mbar = rng.normal(0.0, 0.3, n)
    ebar = rng.uniform(2.0, 3.0, n)
    rho = rbar[:, None] + rng.normal(0.0, 0.6, (n, k))
    mom = mbar[:, None] + rng.normal(0.0, 0.6, (n, k))
    ener = ebar[:, None] + rng.normal(0.0, 1.5, (n, k))
    eps = np.full(n, 1e-13)
    a = rng.normal(size=(n, 3))
    b = rng.normal(size=(n, 3))
    c = rng.normal(size=(n, 3))
    return {
        "poly_extrema": (mono, lo, hi),
        "scalar_theta": (mean, vmin, vmax, -1.0, 1.0),
        "positivity_thetas": (rho, mom, ener, rbar, mbar, ebar, eps, eps, 1.4),
        "minmod3": (a, b, c, 0.0),
    }


def bench(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="100,1000,10000")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    if _kernels is None:
        print("compiled extension not built; only the numpy fallback is timed")
    print(f"{'kernel':<18}{'n':>8}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        inputs = make_inputs(n, rng)
        for name, call_args in inputs.items():
            t_py = bench(getattr(_kernels_py, name), call_args, args.repeat)
            if _kernels is None:
                print(f"{name:<18}{n:>8}{t_py * 1e6:>14.1f}{'-':>14}{'-':>10}")
                continue
            t_cy = bench(getattr(_kernels, name), call_args, args.repeat)
            print(f"{name:<18}{n:>8}{t_py * 1e6:>14.1f}{t_cy * 1e6:>14.1f}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
