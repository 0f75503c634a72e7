"""Extended-precision dense Hermitian linear algebra.

Matrices are ``DenseOperator`` values: numpy object arrays of ``gmpy2.mpc``
entries at a fixed mantissa precision.  The heavy kernels (matrix multiply
and the cyclic Jacobi eigensolver) dispatch to a compiled double-double
extension when the working precision is 106 bits, and to a pure gmpy2 path
otherwise; see :mod:`meanforce.xlinalg.backend`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, TextIO

import gmpy2
import numpy as np

from ..errors import DomainError, NumericalError, UsageError
from ._precision import DEFAULT_PRECISION, tol, workprec


class DenseOperator:
    """A dim x dim complex matrix at ``precision`` mantissa bits."""

    __slots__ = ("data", "precision")

    def __init__(self, data: np.ndarray, precision: int):
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise UsageError("DenseOperator requires a square matrix")
        self.data = data
        self.precision = precision

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, dim: int, precision: int = DEFAULT_PRECISION) -> "DenseOperator":
        with workprec(precision):
            z = gmpy2.mpc(0)
            data = np.full((dim, dim), z, dtype=object)
        return cls(data, precision)

    @classmethod
    def identity(cls, dim: int, precision: int = DEFAULT_PRECISION) -> "DenseOperator":
        op = cls.zeros(dim, precision)
        with workprec(precision):
            one = gmpy2.mpc(1)
            for i in range(dim):
                op.data[i, i] = one
        return op

    @classmethod
    def from_entries(cls, entries, precision: int = DEFAULT_PRECISION) -> "DenseOperator":
        arr = np.asarray(entries)
        dim = arr.shape[0]
        op = cls.zeros(dim, precision)
        with workprec(precision):
            for i in range(dim):
                for j in range(dim):
                    op.data[i, j] = gmpy2.mpc(arr[i, j])
        return op

    # -- basic algebra -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def copy(self) -> "DenseOperator":
        return DenseOperator(self.data.copy(), self.precision)

    def _like(self, data: np.ndarray) -> "DenseOperator":
        return DenseOperator(data, self.precision)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        self._check_compatible(other)
        with workprec(self.precision):
            return self._like(self.data + other.data)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        self._check_compatible(other)
        with workprec(self.precision):
            return self._like(self.data - other.data)

    def __neg__(self) -> "DenseOperator":
        with workprec(self.precision):
            return self._like(-self.data)

    def scale(self, factor) -> "DenseOperator":
        with workprec(self.precision):
            f = gmpy2.mpc(factor)
            return self._like(self.data * f)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        from . import backend

        self._check_compatible(other)
        return self._like(backend.matmul(self.data, other.data, self.precision))

    def dagger(self) -> "DenseOperator":
        with workprec(self.precision):
            out = np.empty_like(self.data)
            d = self.data
            for i in range(self.dim):
                for j in range(self.dim):
                    out[i, j] = d[j, i].conjugate()
        return self._like(out)

    def add_scaled_identity(self, factor) -> "DenseOperator":
        out = self.copy()
        with workprec(self.precision):
            f = gmpy2.mpc(factor)
            for i in range(self.dim):
                out.data[i, i] = out.data[i, i] + f
        return out

    # -- scalar reductions -------------------------------------------------

    def trace(self):
        with workprec(self.precision):
            acc = gmpy2.mpc(0)
            for i in range(self.dim):
                acc += self.data[i, i]
        return acc

    def frobenius(self):
        with workprec(self.precision):
            acc = gmpy2.mpfr(0)
            for row in self.data:
                for z in row:
                    acc += z.real * z.real + z.imag * z.imag
            return gmpy2.sqrt(acc)

    def max_abs(self):
        with workprec(self.precision):
            best = gmpy2.mpfr(0)
            for row in self.data:
                for z in row:
                    a = abs(z)
                    if a > best:
                        best = a
            return best

    def hermiticity_defect(self):
        """Frobenius norm of (M - M^dagger)/2."""
        with workprec(self.precision):
            acc = gmpy2.mpfr(0)
            d = self.data
            for i in range(self.dim):
                for j in range(i, self.dim):
                    z = (d[i, j] - d[j, i].conjugate()) / 2
                    w = z.real * z.real + z.imag * z.imag
                    acc += w if i == j else 2 * w
            return gmpy2.sqrt(acc)

    def hermitize(self) -> "DenseOperator":
        with workprec(self.precision):
            out = np.empty_like(self.data)
            d = self.data
            for i in range(self.dim):
                for j in range(self.dim):
                    out[i, j] = (d[i, j] + d[j, i].conjugate()) / 2
        return self._like(out)

    def _check_compatible(self, other: "DenseOperator"):
        if self.dim != other.dim:
            raise UsageError("dimension mismatch")
        if self.precision != other.precision:
            raise UsageError("precision mismatch")


@dataclass
class SpectralDecomposition:
    """Eigenvalues (ascending mpfr list) and unitary eigenvector matrix."""

    eigenvalues: list
    eigenvectors: DenseOperator

    @property
    def precision(self) -> int:
        return self.eigenvectors.precision


def hermitian_eigen(M: DenseOperator) -> SpectralDecomposition:
    """Deterministic cyclic-Jacobi eigendecomposition of a Hermitian matrix."""
    from . import backend

    P = M.precision
    fnorm = M.frobenius()
    if fnorm > 0 and M.hermiticity_defect() > tol(P, 8) * fnorm:
        raise UsageError("matrix is not Hermitian within tolerance")
    H = M.hermitize()
    w, V = backend.jacobi_eigen(H.data, P)
    # deterministic ascending order; ties broken by original position
    order = sorted(range(len(w)), key=lambda i: (w[i], i))
    w_sorted = [w[i] for i in order]
    V_sorted = V[:, order]
    return SpectralDecomposition(w_sorted, DenseOperator(V_sorted, P))


def reconstruct(decomp: SpectralDecomposition, values) -> DenseOperator:
    """V diag(values) V^dagger at the decomposition's precision."""
    from . import backend

    V = decomp.eigenvectors
    P = V.precision
    with workprec(P):
        vals = [gmpy2.mpc(v) for v in values]
        scaled = np.empty_like(V.data)
        for j, fv in enumerate(vals):
            scaled[:, j] = V.data[:, j] * fv
    out = backend.matmul(scaled, V.dagger().data, P)
    return DenseOperator(out, P).hermitize()


def func_hermitian(M: DenseOperator, f: str, beta=None) -> DenseOperator:
    """Apply exp_scaled(beta) (i.e. e^{-beta M}) or log to a Hermitian matrix."""
    P = M.precision
    decomp = hermitian_eigen(M)
    with workprec(P):
        if f == "exp_scaled":
            if beta is None:
                raise UsageError("exp_scaled requires beta")
            b = gmpy2.mpfr(beta)
            values = [gmpy2.exp(-b * w) for w in decomp.eigenvalues]
        elif f == "log":
            scale = max(abs(w) for w in decomp.eigenvalues)
            floor = M.dim * tol(P, 16) * scale
            wmin = min(decomp.eigenvalues)
            if wmin <= floor:
                raise DomainError(
                    f"matrix log needs positive definiteness; smallest eigenvalue {wmin}"
                )
            values = [gmpy2.log(w) for w in decomp.eigenvalues]
        else:
            raise UsageError(f"unknown matrix function {f!r}")
    return reconstruct(decomp, values)


def partial_trace_B(M: DenseOperator, L: int, L_A: int) -> DenseOperator:
    """Trace out the last L - L_A sites (site 1 is the most significant qubit)."""
    if M.dim != 1 << L:
        raise UsageError(f"dim {M.dim} != 2^{L}")
    if not 1 <= L_A < L:
        raise UsageError(f"need 1 <= L_A < L, got L_A={L_A}, L={L}")
    dA = 1 << L_A
    dB = 1 << (L - L_A)
    out = DenseOperator.zeros(dA, M.precision)
    with workprec(M.precision):
        d = M.data
        for a in range(dA):
            for ap in range(dA):
                acc = gmpy2.mpc(0)
                for b in range(dB):
                    acc += d[a * dB + b, ap * dB + b]
                out.data[a, ap] = acc
    return out


# -- regression-golden dump format ----------------------------------------


def _mpfr_token(x) -> str:
    if x == 0:
        return "0@0"
    m, e = x.as_mantissa_exp()
    return f"{int(m):x}@{int(e)}" if int(m) >= 0 else f"-{-int(m):x}@{int(e)}"


def _parse_token(token: str, precision: int):
    mant_s, exp_s = token.split("@")
    m = int(mant_s, 16)
    e = int(exp_s)
    with workprec(precision):
        x = gmpy2.mpfr(m)
        if e >= 0:
            return gmpy2.mul_2exp(x, e)
        return gmpy2.div_2exp(x, -e)


def dump_matrix(M: DenseOperator, fh: TextIO):
    """Plain-text exact dump: header plus hex mantissa@exponent pairs."""
    fh.write("meanforce-matrix 1\n")
    fh.write(f"dim {M.dim} precision {M.precision}\n")
    for i in range(M.dim):
        for j in range(M.dim):
            z = M.data[i, j]
            fh.write(f"{i} {j} {_mpfr_token(z.real)} {_mpfr_token(z.imag)}\n")


def load_matrix(fh: TextIO) -> DenseOperator:
    magic = fh.readline().split()
    if magic[:1] != ["meanforce-matrix"]:
        raise UsageError("not a meanforce matrix dump")
    hdr = fh.readline().split()
    dim, precision = int(hdr[1]), int(hdr[3])
    op = DenseOperator.zeros(dim, precision)
    with workprec(precision):
        for line in fh:
            if not line.strip():
                continue
            i_s, j_s, re_t, im_t = line.split()
            op.data[int(i_s), int(j_s)] = gmpy2.mpc(
                _parse_token(re_t, precision), _parse_token(im_t, precision)
            )
    return op
