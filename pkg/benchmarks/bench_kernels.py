"""Benchmark the compiled double-double kernels against the pure gmpy2 path.

Times the two hot operations (complex matrix multiply and the Hermitian
Jacobi eigensolver) at 106-bit precision on random Hermitian matrices, and
reports the cross-backend agreement so the speedup is known to be honest.

Run:  python3 benchmarks/bench_kernels.py [--dims 16,32,64] [--repeat 3]
"""
from __future__ import annotations

import argparse
import os
import time

import numpy as np

from meanforce.xlinalg import DenseOperator, hermitian_eigen, workprec
from meanforce.xlinalg import backend

PRECISION = 106


def random_hermitian(n: int, seed: int) -> DenseOperator:
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    raw = raw + raw.conj().T
    return DenseOperator.from_entries(raw, PRECISION)


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(dims, repeat: int) -> None:
    if not backend.kernel_available():
        print("compiled kernel not available; nothing to compare")
        return
    print(f"{'dim':>5} {'op':>8} {'dd [s]':>10} {'pure [s]':>10} {'speedup':>8} {'agree':>10}")
    for n in dims:
        M = random_hermitian(n, seed=n)
        A = random_hermitian(n, seed=n + 1)
        results = {}
        for mode in ("dd", "pure"):
            os.environ["MEANFORCE_BACKEND"] = mode
            t_mm = timed(lambda: M @ A, repeat)
            t_eig = timed(lambda: hermitian_eigen(M), repeat)
            results[mode] = (t_mm, t_eig, M @ A, hermitian_eigen(M))
        os.environ.pop("MEANFORCE_BACKEND", None)
        with workprec(PRECISION):
            mm_diff = (results["dd"][2] - results["pure"][2]).frobenius()
            denom = results["pure"][2].frobenius()
            mm_agree = float(mm_diff / denom) if denom > 0 else 0.0
            eig_agree = max(
                float(abs(a - b))
                for a, b in zip(
                    results["dd"][3].eigenvalues, results["pure"][3].eigenvalues
                )
            )
        for op, idx, agree in (("matmul", 0, mm_agree), ("eigen", 1, eig_agree)):
            dd_t, pure_t = results["dd"][idx], results["pure"][idx]
            print(
                f"{n:>5} {op:>8} {dd_t:>10.4f} {pure_t:>10.4f} "
                f"{pure_t / dd_t:>7.1f}x {agree:>10.2e}"
            )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dims", default="16,32,64", help="comma-separated sizes")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    dims = [int(d) for d in args.dims.split(",")]
    run(dims, args.repeat)


if __name__ == "__main__":
    main()
