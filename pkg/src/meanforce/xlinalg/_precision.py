"""Precision scoping helpers around gmpy2 thread-local contexts."""
from __future__ import annotations

import contextlib

import gmpy2

DEFAULT_PRECISION = 106


@contextlib.contextmanager
def workprec(precision: int):
    """Run the enclosed block with gmpy2 precision set to ``precision`` bits."""
    old = gmpy2.get_context()
    gmpy2.set_context(gmpy2.context(precision=precision))
    try:
        yield
    finally:
        gmpy2.set_context(old)


def eps(precision: int) -> "gmpy2.mpfr":
    """Relative resolution 2^-precision as an mpfr."""
    with workprec(precision):
        return gmpy2.mpfr(2) ** (-precision)


def tol(precision: int, slack_bits: int) -> "gmpy2.mpfr":
    """2^(-precision + slack_bits), the tolerance pattern used by contracts."""
    with workprec(precision):
        return gmpy2.mpfr(2) ** (-precision + slack_bits)
