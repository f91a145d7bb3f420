"""Compiled vs numpy kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported side by side, so no environment switch is needed.
"""
import argparse
import timeit

import numpy as np

from macrotypes import _pykernels

try:
    from macrotypes import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    N = 4000
    x = np.arange(N + 1) / N
    w = rng.random(N + 1)
    yield "quadform_gauss_1d N=4000", "quadform_gauss_1d", (w, x, 2 / (8 * 0.01**2))
    L = rng.dirichlet(np.ones(3), 1500)
    yield "quadform_gauss 1500x3", "quadform_gauss", (rng.random(1500), L, 1 / (8 * 0.05**2))
    yield "poisson_binomial N=2000", "poisson_binomial", (rng.random(2000),)
    a = np.array([[0.6, 0.8j], [0.8j, 0.6]])
    yield "sym_power_2 N=300", "sym_power_2", (a, 300)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, name, a in cases(rng):
        tp = min(timeit.repeat(lambda: getattr(_pykernels, name)(*a), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{label:28s} {tp * 1e3:10.2f} {'n/a':>10s}")
            continue
        tc = min(timeit.repeat(lambda: getattr(_ckernels, name)(*a), number=1, repeat=args.repeat))
        ref, got = getattr(_pykernels, name)(*a), getattr(_ckernels, name)(*a)
        assert np.allclose(ref, got, rtol=1e-10, atol=1e-12), label
        print(f"{label:28s} {tp * 1e3:10.2f} {tc * 1e3:10.2f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
