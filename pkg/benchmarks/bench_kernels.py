"""Compare the numba and numpy flavours of the hot loops.

    python benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per kernel and flavour, and the largest
disagreement between the two outputs.  Set SHAPEVAR_THREADS to cap the
numba thread pool.
"""
import argparse
import time

import numpy as np

from shapevar import kernels
from shapevar._accel import HAVE_NUMBA
from shapevar.harmonics import make_quadrature
from shapevar.regimes import open_grid
from shapevar.variations import mode_sign_coefficients


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def legendre_case(repeat):
    quad = make_quadrature(130)
    theta = np.ascontiguousarray(quad.theta)
    lmax = 40
    kernels._legendre_tables_numba(lmax, theta[:4])  # compile outside the timing
    t_nb, (P_nb, dP_nb) = best_of(lambda: kernels._legendre_tables_numba(lmax, theta), repeat)
    t_np, (P_np, dP_np) = best_of(lambda: kernels._legendre_tables_numpy(lmax, theta), repeat)
    diff = max(np.max(np.abs(P_nb - P_np)), np.max(np.abs(dP_nb - dP_np)))
    return f"legendre_tables lmax={lmax} n={theta.size}", t_nb, t_np, diff


def classify_case(repeat):
    d = 7
    P, Q = np.meshgrid(open_grid(1.001, d - 1e-3, 1e-2), open_grid(1.001, 10.0, 1e-2), indexing="ij")
    c2, c3 = mode_sign_coefficients(d, P, Q, "paper")
    c2 = np.ascontiguousarray(c2.ravel())
    c3 = np.ascontiguousarray(c3.ravel())
    kernels._classify_cells_numba(c2[:4], c3[:4], 64, 1e-13)
    t_nb, a = best_of(lambda: kernels._classify_cells_numba(c2, c3, 64, 1e-13), repeat)
    t_np, b = best_of(lambda: kernels._classify_cells_numpy(c2, c3, 64, 1e-13), repeat)
    return f"classify_cells cells={c2.size} k_max=64", t_nb, t_np, int(np.count_nonzero(a != b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not importable; both columns time the same Python code")
    print(f"{'case':<44} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}  mismatch")
    for case in (legendre_case, classify_case):
        name, t_nb, t_np, diff = case(args.repeat)
        print(f"{name:<44} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f}  {diff}")


if __name__ == "__main__":
    main()
