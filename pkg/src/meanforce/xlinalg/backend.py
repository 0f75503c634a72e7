"""Kernel dispatch: compiled double-double core vs. pure gmpy2 fallback.

The compiled extension covers exactly the 106-bit (double-double) precision
that all production runs use.  Any other precision, a missing build, or
``MEANFORCE_BACKEND=pure`` routes to :mod:`meanforce.xlinalg.pure`.
"""
from __future__ import annotations

import math
import os

import gmpy2
import numpy as np

from ..errors import NumericalError, UsageError
from ._precision import workprec
from . import pure

try:
    from . import _ddkernel
except ImportError:  # extension not built; pure path only
    _ddkernel = None

DD_PRECISION = 106
# beyond this magnitude the double-double format would overflow
_DD_LIMIT = 1e290


def kernel_available() -> bool:
    return _ddkernel is not None


def _mode() -> str:
    mode = os.environ.get("MEANFORCE_BACKEND", "auto")
    if mode not in ("auto", "dd", "pure"):
        raise UsageError(f"MEANFORCE_BACKEND must be auto|dd|pure, got {mode!r}")
    return mode


def active_backend(precision: int) -> str:
    mode = _mode()
    if mode == "pure":
        return "pure"
    if _ddkernel is not None and precision == DD_PRECISION:
        return "dd"
    if mode == "dd":
        raise UsageError(
            "dd backend requested but unavailable "
            f"(extension built: {_ddkernel is not None}, precision: {precision})"
        )
    return "pure"


def _to_dd(data: np.ndarray, precision: int) -> np.ndarray:
    n, m = data.shape
    out = np.zeros((n, m, 4), dtype=np.float64)
    with workprec(precision):
        for i in range(n):
            for j in range(m):
                z = data[i, j]
                rh = float(z.real)
                ih = float(z.imag)
                out[i, j, 0] = rh
                out[i, j, 1] = float(z.real - rh) if math.isfinite(rh) else 0.0
                out[i, j, 2] = ih
                out[i, j, 3] = float(z.imag - ih) if math.isfinite(ih) else 0.0
    return out


def _fits_dd(data: np.ndarray) -> bool:
    for row in data:
        for z in row:
            if abs(z.real) > _DD_LIMIT or abs(z.imag) > _DD_LIMIT:
                return False
    return True


def _from_dd(arr: np.ndarray) -> np.ndarray:
    n, m = arr.shape[:2]
    out = np.empty((n, m), dtype=object)
    with workprec(DD_PRECISION):
        for i in range(n):
            for j in range(m):
                re = gmpy2.mpfr(arr[i, j, 0]) + gmpy2.mpfr(arr[i, j, 1])
                im = gmpy2.mpfr(arr[i, j, 2]) + gmpy2.mpfr(arr[i, j, 3])
                out[i, j] = gmpy2.mpc(re, im)
    return out


def matmul(a: np.ndarray, b: np.ndarray, precision: int) -> np.ndarray:
    if active_backend(precision) == "dd" and _fits_dd(a) and _fits_dd(b):
        return _from_dd(_ddkernel.matmul(_to_dd(a, precision), _to_dd(b, precision)))
    return pure.matmul(a, b, precision)


def jacobi_eigen(data: np.ndarray, precision: int):
    """Returns (eigenvalues as mpfr list, eigenvector object array)."""
    if active_backend(precision) == "dd" and _fits_dd(data):
        w, v, _sweeps, converged = _ddkernel.jacobi_eigen(_to_dd(data, precision))
        if not converged:
            raise NumericalError("Jacobi did not converge (dd kernel)")
        with workprec(DD_PRECISION):
            evals = [gmpy2.mpfr(hi) + gmpy2.mpfr(lo) for hi, lo in w]
        return evals, _from_dd(v)
    return pure.jacobi_eigen(data, precision)
