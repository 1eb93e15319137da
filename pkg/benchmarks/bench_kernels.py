"""Compiled vs numpy alias-sum kernels.

Times ``lattice_power_sum`` (the hot loop behind every periodized spectrum)
on both backends and checks that they agree.

    python benchmarks/bench_kernels.py [--grid 128] [--repeat 3]
"""

import argparse
import time

import numpy as np

from opwave import _kernels
from opwave.lattice import frequency_grid, parse_dilation
from opwave.periodization import lattice_power_sum
from opwave.symbols import parse_operator

CASES = [
    ("matern:nu=1", "2", 1),
    ("laplacian", "2I", 2),
    ("matern:nu=1.5", "quincunx", 2),
    ("helmholtz", "2I", 2),
]


def run_case(op, D, N, repeat):
    grid = frequency_grid(D, 0, N)
    basis = D.dual_basis(0)
    out, times = {}, {}
    for backend in ("numba", "numpy"):
        if backend == "numba" and not _kernels.HAVE_NUMBA:
            continue
        _kernels.set_backend(backend)
        lattice_power_sum(op, basis, grid.points[:8])  # warm-up / compile
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            res = lattice_power_sum(op, basis, grid.points)
            best = min(best, time.perf_counter() - t0)
        out[backend], times[backend] = res.value, best
    return out, times


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    prev = _kernels.BACKEND
    print(f"{'operator':<16}{'dilation':<10}{'points':>8}{'numba s':>10}{'numpy s':>10}"
          f"{'speedup':>9}{'max rel diff':>14}")
    try:
        for text, dil, d in CASES:
            D = parse_dilation(dil, d)
            op = parse_operator(text, d)
            N = args.grid * 8 if d == 1 else args.grid
            vals, t = run_case(op, D, N, args.repeat)
            if "numba" in vals:
                a, b = vals["numba"], vals["numpy"]
                fin = np.isfinite(a) & np.isfinite(b)
                diff = np.max(np.abs(a[fin] - b[fin]) / np.abs(b[fin]))
                print(f"{text:<16}{dil:<10}{N ** d:>8}{t['numba']:>10.3f}{t['numpy']:>10.3f}"
                      f"{t['numpy'] / t['numba']:>9.1f}{diff:>14.2e}")
            else:
                print(f"{text:<16}{dil:<10}{N ** d:>8}{'-':>10}{t['numpy']:>10.3f}")
    finally:
        _kernels.set_backend(prev)


if __name__ == "__main__":
    main()
