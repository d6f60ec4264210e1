"""Benchmark the compiled energy kernels against the pure-numpy fallback.

Times the fused energy/gradient evaluation (the hot inner loop of the
Nehari descent) on log grids of increasing size for both available
backends and prints a table with the speedup.  Covers the integer
exponent cases used in production (p = 2 and p = 3, where the compiled
path uses repeated squaring) and one fractional p that falls back to
libm pow on every element.

Usage: python benchmarks/bench_kernels.py [--sizes 256,1024,4096,16384]
                                          [--repeats 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from plaplab import kernels
from plaplab.radial_core import AnnulusSpec, make_grid


def _bench(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(sizes, repeats: int) -> None:
    backends = kernels.available_backends()  # "python" first, then "compiled"
    print(f"available backends: {', '.join(backends)}")
    rng = np.random.default_rng(7)
    for N, p in ((4, 2.0), (4, 3.0), (4, 2.7)):
        print(f"\nN={N}, p={p}")
        print(f"{'M':>8} " + " ".join(f"{name + ' (us)':>16}" for name in backends)
              + ("  speedup" if len(backends) > 1 else ""))
        for M in sizes:
            grid = make_grid(AnnulusSpec(0.1, 1.0, N, p), M)
            vals = rng.standard_normal(M + 1)
            vals[0] = vals[-1] = 0.0
            g = np.empty(M + 1)
            kappa = np.empty(M)
            times = []
            for mod in backends.values():

                def step(mod=mod):
                    mod.energy_gradient(vals, grid.h, grid.cell_weights,
                                        grid.node_weights, p, grid.pstar, g)
                    mod.cell_kappa(vals, grid.h, grid.cell_weights, p, 1e-24, kappa)

                times.append(_bench(step, repeats))
            row = f"{M:>8} " + " ".join(f"{t * 1e6:>16.2f}" for t in times)
            if len(times) > 1:
                row += f"  {times[0] / times[-1]:>7.2f}x"
            print(row)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="256,1024,4096,16384",
                        help="comma-separated grid sizes")
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    run(sizes, args.repeats)


if __name__ == "__main__":
    main()
