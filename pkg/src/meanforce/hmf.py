"""Exact mean-force Hamiltonian, coefficient tables, entanglement comparison.

The mean-force Hamiltonian of subsystem A at inverse temperature beta is

    H*_A(beta) = -(1/beta) ln[ tr_B e^{-beta H} / Z_B ],

with Z_B the bath partition function.  Everything is evaluated through one
cached spectral decomposition of H per bipartition, so beta scans cost two
dense multiplies plus one small eigensolve per point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import gmpy2
import numpy as np

from .errors import DomainError, UsageError
from .model import Bipartition, ModelSpec, dense_restricted_A, to_dense
from .pauli import PauliString, pauli_coefficient
from .xlinalg import (
    DenseOperator,
    func_hermitian,
    hermitian_eigen,
    partial_trace_B,
    reconstruct,
    tol,
    workprec,
)
from .xlinalg import backend as _backend


def _logsumexp_neg(beta, eigenvalues, precision: int):
    """ln sum_i e^{-beta w_i} without overflow."""
    with workprec(precision):
        b = gmpy2.mpfr(beta)
        wmin = min(eigenvalues)
        acc = gmpy2.mpfr(0)
        for w in eigenvalues:
            acc += gmpy2.exp(-b * (w - wmin))
        return -b * wmin + gmpy2.log(acc)


@dataclass
class HmfResult:
    beta: object  # mpfr
    hmf: DenseOperator
    log_Zstar: object  # mpfr
    bipartition: Bipartition
    h_norm: object  # mpfr, Frobenius norm of the full H

    @property
    def L_A(self) -> int:
        return self.bipartition.L_A


@dataclass
class CoefficientTable:
    """Deviation coefficients c(O) of H* - H_A in the Pauli basis."""

    beta: object
    entries: dict  # PauliString -> mpfr
    floor: object  # mpfr numerical floor

    def below_floor(self, O: PauliString) -> bool:
        return abs(self.entries[O]) < self.floor

    def sorted_items(self):
        return sorted(self.entries.items(), key=lambda kv: kv[0].to_text())


@dataclass
class EntanglementResult:
    ent_ham: DenseOperator
    gs_degeneracy: int
    reduced_rank: int
    regularization_eps: object
    gap_tol: float
    L_A: int


class HmfCalculator:
    """Caches the spectral data of one bipartition across beta values."""

    def __init__(self, bip: Bipartition, precision: int = 106):
        self.bip = bip
        self.precision = precision
        self._decomp = None
        self._bath_eigenvalues = None
        self._h_norm = None
        self._h_a_dense = None

    @property
    def coupling_free(self) -> bool:
        return all(c == 0 for c, _s in self.bip.h_ab.terms)

    def h_a_dense(self) -> DenseOperator:
        if self._h_a_dense is None:
            self._h_a_dense = dense_restricted_A(
                self.bip.h_a, self.bip.L_A, self.precision
            )
        return self._h_a_dense

    def full_decomposition(self):
        if self._decomp is None:
            H = to_dense(self.bip.scaled_spec(), self.precision)
            self._h_norm = H.frobenius()
            self._decomp = hermitian_eigen(H)
        return self._decomp

    def h_norm(self):
        self.full_decomposition()
        return self._h_norm

    def bath_eigenvalues(self):
        if self._bath_eigenvalues is None:
            bath = self.bip.h_b_on_bath()
            if bath.terms:
                Hb = to_dense(bath, self.precision)
                self._bath_eigenvalues = hermitian_eigen(Hb).eigenvalues
            else:
                dB = 1 << (self.bip.L - self.bip.L_A)
                with workprec(self.precision):
                    self._bath_eigenvalues = [gmpy2.mpfr(0)] * dB
        return self._bath_eigenvalues

    def hmf(self, beta) -> HmfResult:
        P = self.precision
        with workprec(P):
            b = gmpy2.mpfr(beta)
        if not b > 0:
            raise UsageError(
                "beta must be > 0 (the beta=0 value is a limit; use the series at order 0)"
            )
        bip = self.bip
        if self.coupling_free:
            # H_AB = 0: the mean-force Hamiltonian is H_A itself.
            ha = self.h_a_dense()
            lnZA = _logsumexp_neg(b, hermitian_eigen(ha).eigenvalues, P)
            return HmfResult(b, ha.copy(), lnZA, bip, self.h_norm())
        decomp = self.full_decomposition()
        with workprec(P):
            E0 = min(decomp.eigenvalues)
            boltzmann = [gmpy2.exp(-b * (w - E0)) for w in decomp.eigenvalues]
        shifted_rho = reconstruct(decomp, boltzmann)  # e^{-b (H - E0)}
        reduced = partial_trace_B(shifted_rho, bip.L, bip.L_A).hermitize()
        try:
            log_reduced = func_hermitian(reduced, "log")
        except DomainError as exc:
            raise DomainError(f"at beta={b}: {exc}") from exc
        lnZB = _logsumexp_neg(b, self.bath_eigenvalues(), P)
        lnZ = _logsumexp_neg(b, decomp.eigenvalues, P)
        with workprec(P):
            hmf_op = log_reduced.scale(-1 / b).add_scaled_identity(E0 + lnZB / b)
            log_Zstar = lnZ - lnZB
        return HmfResult(b, hmf_op.hermitize(), log_Zstar, bip, self.h_norm())


def compute_hmf(bip: Bipartition, beta, precision: int = 106) -> HmfResult:
    return HmfCalculator(bip, precision).hmf(beta)


def default_floor(h_norm, precision: int):
    """Coefficients below 2^{-P+30} * max(1, ||H||) are unresolvable."""
    with workprec(precision):
        return tol(precision, 30) * max(gmpy2.mpfr(1), gmpy2.mpfr(h_norm))


def deviation_table(
    res: HmfResult,
    h_a: ModelSpec,
    ops: Sequence[PauliString],
    floor=None,
) -> CoefficientTable:
    """c(O) = Pauli coefficient of O in H* - H_A, with a numerical floor."""
    P = res.hmf.precision
    L_A = res.L_A
    diff = res.hmf - dense_restricted_A(h_a, L_A, P)
    entries = {}
    for O in ops:
        if O.factors and O.support[-1] > L_A:
            raise UsageError(f"operator {O} not supported in A")
        key = PauliString(O.factors, L_A)
        entries[key] = pauli_coefficient(diff, key)
    if floor is None:
        floor = default_floor(res.h_norm, P)
    return CoefficientTable(res.beta, entries, floor)


def entanglement_hamiltonian(
    spec: ModelSpec,
    L_A: int,
    gap_tol: float = 1e-10,
    eps=None,
    precision: int = 106,
) -> EntanglementResult:
    """-log of the reduced ground-state projector (the beta -> infinity limit).

    ``gap_tol`` is relative to the spectral range; eigenstates within
    gap_tol * range of the minimum count as the ground-state subspace.
    ``eps`` regularizes a rank-deficient reduced projector; ``None`` picks 0
    for full rank and 2^{-P/2} otherwise, eps=0 on a rank-deficient input is
    an error.
    """
    P = precision
    L = spec.n_sites
    if not 1 <= L_A < L:
        raise UsageError(f"need 1 <= L_A < L")
    decomp = hermitian_eigen(to_dense(spec, P))
    with workprec(P):
        w = decomp.eigenvalues
        spread = w[-1] - w[0]
        cut = w[0] + gmpy2.mpfr(gap_tol) * max(spread, gmpy2.mpfr(1))
        gs_idx = [i for i, x in enumerate(w) if x <= cut]
        g = len(gs_idx)
        V = decomp.eigenvectors.data
        Vg = V[:, gs_idx]
        Vg_dag = np.empty((g, V.shape[0]), dtype=object)
        for i in range(V.shape[0]):
            for j in range(g):
                Vg_dag[j, i] = Vg[i, j].conjugate()
    proj = DenseOperator(_backend.matmul(Vg, Vg_dag, P), P)
    with workprec(P):
        inv_g = gmpy2.mpfr(1) / g
    rho = partial_trace_B(proj, L, L_A).scale(inv_g).hermitize()
    rho_eig = hermitian_eigen(rho).eigenvalues
    with workprec(P):
        lam_max = max(rho_eig)
        rank_floor = rho.dim * tol(P, 16) * lam_max
        rank = sum(1 for x in rho_eig if x > rank_floor)
        deficient = rank < rho.dim
        if eps is None:
            eps_val = gmpy2.mpfr(2) ** (-P // 2) if deficient else gmpy2.mpfr(0)
        else:
            eps_val = gmpy2.mpfr(eps)
        if eps_val == 0 and deficient:
            raise DomainError(
                f"reduced ground-state projector has rank {rank} < {rho.dim}; "
                "pass eps > 0 to regularize the log"
            )
        if eps_val > 0:
            rho = rho.add_scaled_identity(eps_val)
    ent = func_hermitian(rho, "log").scale(-1)
    return EntanglementResult(
        ent_ham=ent.hermitize(),
        gs_degeneracy=g,
        reduced_rank=rank,
        regularization_eps=eps_val,
        gap_tol=gap_tol,
        L_A=L_A,
    )


def rescaled_distance(res: HmfResult, ent: EntanglementResult):
    """Normalized Frobenius distance of beta H* + ln Z* from the
    entanglement Hamiltonian."""
    if res.L_A != ent.L_A:
        raise UsageError("bipartition mismatch")
    P = res.hmf.precision
    with workprec(P):
        shifted = res.hmf.scale(res.beta).add_scaled_identity(res.log_Zstar)
        diff = shifted - ent.ent_ham
        return diff.frobenius() / gmpy2.sqrt(gmpy2.mpfr(res.hmf.dim))
