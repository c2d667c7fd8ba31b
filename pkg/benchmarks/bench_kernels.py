"""Compare the compiled and numpy backends on the two hot loops.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
Prints best-of-repeat wall times and the largest disagreement between the
two backends.
"""

import argparse
import timeit

import numpy as np

from besovlab import _purepy, kernels
from besovlab.pick import binomial_kernel

try:
    from besovlab import _kernels
except ImportError:  # extension not built
    _kernels = None


def _cases():
    rng = np.random.default_rng(0)
    logvals = rng.normal(size=(64, 256, 20))
    weights = rng.uniform(size=20)
    shift = logvals.max(axis=(1, 2))
    F = binomial_kernel(0.5, 4096).F
    return {
        "panel_sums 64x256x20": lambda mod: mod.panel_sums(logvals, weights, shift),
        "kaluza N=4096": lambda mod: mod.kaluza_recursion(F, False),
        "kaluza N=4096 compensated": lambda mod: mod.kaluza_recursion(F, True),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    if _kernels is None:
        print("compiled extension unavailable; timing the numpy backend only")
    print(f"{'case':<28} {'numpy s':>10} {'compiled s':>11} {'speedup':>8} {'max diff':>10}")
    for name, fn in _cases().items():
        t_py = min(timeit.repeat(lambda: fn(_purepy), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:<28} {t_py:10.4f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        a, b = fn(_purepy), fn(_kernels)
        a = a[0] if isinstance(a, tuple) else a
        b = b[0] if isinstance(b, tuple) else b
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:<28} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
