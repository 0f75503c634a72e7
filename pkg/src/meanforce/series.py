"""Small-beta expansion of the mean-force Hamiltonian.

The order-k coefficient is the composition sum

    H*_{A,k} = (-1)^k sum_{m=1}^{k+1} (-1)^{m+1} / (m D_B^m)
               sum_{n_1+...+n_m = k+1}
               [ prod_i tr_B(H^{n_i})/n_i!  -  prod_i tr(H_B^{n_i})/n_i! ],

with the matrix product taken in composition order and D_B = 2^{L - L_A}.
Closed forms for k <= 2 (independent oracles, derived by expanding
ln tr_B e^{-beta H} directly and verified against the exact H* numerically):

    H*_{A,0} = H_A
    H*_{A,1} = -[ tr_B(H_AB^2) + tr_B({H_B, H_AB}) ] / (2 D_B)
    H*_{A,2} = [ tr_B(H_AB H_A H_AB) - tr_B(H_AB^2) H_A ] / (6 D_B) + const*1
               (field-free chain; fixed only up to an identity shift)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import gmpy2

from .errors import UsageError
from .hmf import CoefficientTable, HmfCalculator, default_floor
from .model import Bipartition, ModelSpec, dense_restricted_A, to_dense
from .pauli import PauliString, distance, pauli_coefficient
from .xlinalg import (
    DenseOperator,
    hermitian_eigen,
    partial_trace_B,
    workprec,
)


@dataclass
class SeriesCoefficient:
    order: int
    matrix: DenseOperator  # Hermitian, dim 2^{L_A}
    hermiticity_defect: object  # mpfr, pre-symmetrization residual


@dataclass
class OrderReport:
    operator: PauliString
    k0_numeric: Optional[int]
    k0_bound: int
    k0_conjecture: Optional[int]


class SeriesCalculator:
    """Evaluates composition sums with cached traced powers of H."""

    def __init__(self, bip: Bipartition, precision: int = 106, k_guard: int = 12):
        self.bip = bip
        self.precision = precision
        self.k_guard = k_guard
        self._traced_powers: dict[int, DenseOperator] = {}
        self._bath_traces: dict[int, object] = {}
        self._h_dense: Optional[DenseOperator] = None
        self._h_power: Optional[DenseOperator] = None  # highest power so far
        self._h_power_n = 0
        self._bath_eigs = None

    @property
    def d_bath(self) -> int:
        return 1 << (self.bip.L - self.bip.L_A)

    def _traced_power(self, n: int) -> DenseOperator:
        """tr_B(H^n) / n! on the A space."""
        if n not in self._traced_powers:
            if self._h_dense is None:
                self._h_dense = to_dense(self.bip.scaled_spec(), self.precision)
                self._h_power = self._h_dense.copy()
                self._h_power_n = 1
            while self._h_power_n < n:
                self._h_power = self._h_power @ self._h_dense
                self._h_power_n += 1
                self._cache_power(self._h_power_n, self._h_power)
            if n == 1:
                self._cache_power(1, self._h_dense)
        return self._traced_powers[n]

    def _cache_power(self, n: int, h_pow: DenseOperator):
        if n in self._traced_powers:
            return
        traced = partial_trace_B(h_pow, self.bip.L, self.bip.L_A)
        with workprec(self.precision):
            inv_fact = gmpy2.mpfr(1) / gmpy2.fac(n)
        self._traced_powers[n] = traced.scale(inv_fact)

    def _bath_trace(self, n: int):
        """tr(H_B^n) / n! as a scalar."""
        if n not in self._bath_traces:
            if self._bath_eigs is None:
                bath = self.bip.h_b_on_bath()
                if bath.terms:
                    self._bath_eigs = hermitian_eigen(
                        to_dense(bath, self.precision)
                    ).eigenvalues
                else:
                    with workprec(self.precision):
                        self._bath_eigs = [gmpy2.mpfr(0)] * self.d_bath
            with workprec(self.precision):
                acc = gmpy2.mpfr(0)
                for w in self._bath_eigs:
                    acc += w**n
                self._bath_traces[n] = acc / gmpy2.fac(n)
        return self._bath_traces[n]

    def series_coefficient(self, k: int) -> SeriesCoefficient:
        if k < 0:
            raise UsageError("series order must be >= 0")
        if k > self.k_guard:
            raise UsageError(
                f"order {k} exceeds the cost guard k_guard={self.k_guard}"
            )
        P = self.precision
        dA = 1 << self.bip.L_A
        kk = k + 1
        for n in range(1, kk + 1):  # warm the caches up front
            self._traced_power(n)
            self._bath_trace(n)
        acc = DenseOperator.zeros(dA, P)
        with workprec(P):
            acc_scalar = gmpy2.mpfr(0)
            db = gmpy2.mpfr(self.d_bath)
            prefactors = {}
            for m in range(1, kk + 1):
                prefactors[m] = gmpy2.mpfr((-1) ** (m + 1)) / (m * db**m)

        def descend(remaining: int, length: int, prod_mat, prod_scalar):
            nonlocal acc, acc_scalar
            if remaining == 0:
                with workprec(P):
                    pref = prefactors[length]
                    acc_scalar += pref * prod_scalar
                acc = acc + prod_mat.scale(pref)
                return
            for n1 in range(1, remaining + 1):
                nxt_mat = (
                    self._traced_powers[n1]
                    if prod_mat is None
                    else prod_mat @ self._traced_powers[n1]
                )
                with workprec(P):
                    nxt_scalar = prod_scalar * self._bath_traces[n1]
                descend(remaining - n1, length + 1, nxt_mat, nxt_scalar)

        with workprec(P):
            one = gmpy2.mpfr(1)
        for n1 in range(1, kk + 1):
            descend(kk - n1, 1, self._traced_powers[n1], self._bath_traces[n1])
        with workprec(P):
            sign = gmpy2.mpfr((-1) ** (kk - 1))
            neg_scalar = -acc_scalar
        result = (acc.add_scaled_identity(neg_scalar)).scale(sign)
        defect = result.hermiticity_defect()
        return SeriesCoefficient(k, result.hermitize(), defect)


def closed_form_coefficient(
    bip: Bipartition, k: int, precision: int = 106
) -> DenseOperator:
    """Independent low-order oracle (k <= 2), built from dense products only.

    The k=2 form assumes a field-free chain and is fixed only up to an
    identity shift; compare traceless parts.
    """
    P = precision
    L, L_A = bip.L, bip.L_A
    dB = 1 << (L - L_A)
    if k == 0:
        return dense_restricted_A(bip.h_a, L_A, P)
    hab = to_dense(bip.h_ab, P)
    if k == 1:
        hb = to_dense(bip.h_b, P)
        hab_sq = partial_trace_B(hab @ hab, L, L_A)
        cross = partial_trace_B(hb @ hab + hab @ hb, L, L_A)
        with workprec(P):
            factor = gmpy2.mpfr(-1) / (2 * dB)
        return (hab_sq + cross).scale(factor)
    if k == 2:
        ha_full = to_dense(bip.h_a, P)
        term1 = partial_trace_B(hab @ ha_full @ hab, L, L_A)
        term2 = partial_trace_B(hab @ hab, L, L_A) @ dense_restricted_A(
            bip.h_a, L_A, P
        )
        with workprec(P):
            factor = gmpy2.mpfr(1) / (6 * dB)
        return (term1 - term2).scale(factor)
    raise UsageError("closed forms exist only for k <= 2")


def traceless_part(op: DenseOperator) -> DenseOperator:
    with workprec(op.precision):
        shift = -op.trace().real / op.dim
    return op.add_scaled_identity(shift)


def series_deviation_table(
    coeff: SeriesCoefficient,
    h_a: ModelSpec,
    ops: Sequence[PauliString],
    floor=None,
) -> CoefficientTable:
    """c_k(O) table; at k=0 the deviation is taken against H_A (all zeros)."""
    P = coeff.matrix.precision
    dA = coeff.matrix.dim
    L_A = dA.bit_length() - 1
    mat = coeff.matrix
    if coeff.order == 0:
        mat = mat - dense_restricted_A(h_a, L_A, P)
    entries = {}
    for O in ops:
        key = PauliString(O.factors, L_A)
        entries[key] = pauli_coefficient(mat, key)
    if floor is None:
        floor = default_floor(coeff.matrix.frobenius(), P)
    return CoefficientTable(coeff.order, entries, floor)


def default_k0_tol(coefficients: Sequence[SeriesCoefficient]):
    """2^{-P+30} * max_k ||H*_{A,k}||_F, tying detection to precision."""
    P = coefficients[0].matrix.precision
    with workprec(P):
        peak = max(c.matrix.frobenius() for c in coefficients)
        return default_floor(peak, P)


def k0_numeric(
    tables: dict[int, CoefficientTable], O: PauliString, tol
) -> Optional[int]:
    """Smallest k >= 1 with |c_k(O)| > tol among the provided orders."""
    key_len = None
    for k in sorted(tables):
        if k < 1:
            continue
        table = tables[k]
        if key_len is None:
            key_len = next(iter(table.entries)).chain_length
        key = PauliString(O.factors, key_len)
        if abs(table.entries[key]) > tol:
            return k
    return None


def k0_lower_bound(O: PauliString, L_A: int) -> int:
    """2(d + 1) - n for an n-body operator at distance d."""
    if O.is_identity:
        raise UsageError("bound undefined for the identity")
    return 2 * (distance(O, L_A) + 1) - O.n_body


def truncation_error(
    hmf_calc: HmfCalculator,
    series_calc: SeriesCalculator,
    beta,
    K: int,
):
    """||H*(beta) - sum_{k<=K} beta^k H*_k||_F / 2^{L_A/2}."""
    P = hmf_calc.precision
    res = hmf_calc.hmf(beta)
    partial = None
    with workprec(P):
        b = gmpy2.mpfr(beta)
    for k in range(K + 1):
        coeff = series_calc.series_coefficient(k)
        with workprec(P):
            term = coeff.matrix.scale(b**k)
        partial = term if partial is None else partial + term
    with workprec(P):
        diff = res.hmf - partial
        return diff.frobenius() / gmpy2.sqrt(gmpy2.mpfr(res.hmf.dim))
