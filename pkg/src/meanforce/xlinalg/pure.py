"""Pure-Python (gmpy2) kernels: any precision, no compiled extension needed."""
from __future__ import annotations

import gmpy2
import numpy as np

from ..errors import NumericalError
from ._precision import workprec

MAX_SWEEPS = 60


def matmul(a: np.ndarray, b: np.ndarray, precision: int) -> np.ndarray:
    with workprec(precision):
        return np.dot(a, b)


def jacobi_eigen(data: np.ndarray, precision: int):
    """Cyclic Jacobi on a Hermitian object-array matrix; returns (evals, V).

    Same sweep order and rotation convention as the compiled kernel, so both
    paths converge identically up to their respective roundoff.
    """
    n = data.shape[0]
    with workprec(precision):
        a = data.copy()
        v = np.full((n, n), gmpy2.mpc(0), dtype=object)
        one = gmpy2.mpfr(1)
        for i in range(n):
            v[i, i] = gmpy2.mpc(1)
        fnorm = gmpy2.mpfr(0)
        for row in a:
            for z in row:
                fnorm += z.real * z.real + z.imag * z.imag
        fnorm = gmpy2.sqrt(fnorm)
        if fnorm == 0:
            return [gmpy2.mpfr(0)] * n, v
        stop_tol = fnorm * gmpy2.mpfr(2) ** (-(precision - 6))
        skip_tol = stop_tol / (4 * n)
        converged = False
        for _sweep in range(MAX_SWEEPS):
            maxoff = gmpy2.mpfr(0)
            for p in range(n - 1):
                for q in range(p + 1, n):
                    m = abs(a[p, q])
                    if m > maxoff:
                        maxoff = m
            if maxoff <= stop_tol:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    m = abs(apq)
                    if m <= skip_tol:
                        continue
                    e = apq / m
                    app = a[p, p].real
                    aqq = a[q, q].real
                    tau = (aqq - app) / (2 * m)
                    root = gmpy2.sqrt(tau * tau + one)
                    # roots of t^2 - 2 tau t - 1: pick the small-|t| one
                    t = -one / (tau + root) if tau >= 0 else one / (root - tau)
                    c = one / gmpy2.sqrt(t * t + one)
                    s = t * c
                    se = s * e
                    cse = se.conjugate()
                    colp, colq = a[:, p].copy(), a[:, q].copy()
                    a[:, p] = colp * c + colq * cse
                    a[:, q] = colq * c - colp * se
                    rowp, rowq = a[p, :].copy(), a[q, :].copy()
                    a[p, :] = rowp * c + rowq * se
                    a[q, :] = rowq * c - rowp * cse
                    vp, vq = v[:, p].copy(), v[:, q].copy()
                    v[:, p] = vp * c + vq * cse
                    v[:, q] = vq * c - vp * se
                    zero = gmpy2.mpc(0)
                    a[p, q] = zero
                    a[q, p] = zero
                    a[p, p] = gmpy2.mpc(a[p, p].real)
                    a[q, q] = gmpy2.mpc(a[q, q].real)
        if not converged:
            raise NumericalError(
                f"Jacobi did not converge in {MAX_SWEEPS} sweeps (off={maxoff})"
            )
        w = [a[i, i].real for i in range(n)]
        return w, v
