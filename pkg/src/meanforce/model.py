"""XXZ-chain construction and system/bath bipartition."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import gmpy2
import numpy as np

from .errors import UsageError
from .pauli import PauliString, apply_to_basis
from .xlinalg import DenseOperator, workprec

Term = tuple[float, PauliString]


@dataclass(frozen=True)
class ModelSpec:
    """A Hamiltonian as a list of (coefficient, PauliString) terms."""

    n_sites: int
    terms: tuple[Term, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def strings(self) -> list[PauliString]:
        return [s for _, s in self.terms]

    def restricted_to_range(self, lo: int, hi: int, offset: int = 0) -> "ModelSpec":
        """Terms supported inside [lo, hi], re-indexed by -offset onto a
        chain of length hi - lo + 1 (used to realize H_B on the bath space)."""
        length = hi - lo + 1
        out = []
        for c, s in self.terms:
            if s.support and lo <= s.support[0] and s.support[-1] <= hi:
                shifted = PauliString(
                    tuple((site - offset, a) for site, a in s.factors), length
                )
                out.append((c, shifted))
        return ModelSpec(length, tuple(out), dict(self.metadata))


@dataclass(frozen=True)
class Bipartition:
    """H = H_A + H_B + H_AB with the boundary bond (L_A, L_A + 1)."""

    L_A: int
    h_a: ModelSpec
    h_b: ModelSpec
    h_ab: ModelSpec  # already multiplied by j_ab_scale
    j_ab_scale: float
    full: ModelSpec

    @property
    def L(self) -> int:
        return self.full.n_sites

    def scaled_spec(self) -> ModelSpec:
        """The Hamiltonian actually diagonalized: H_A + H_B + scale * H_AB."""
        return ModelSpec(
            self.full.n_sites,
            self.h_a.terms + self.h_b.terms + self.h_ab.terms,
            dict(self.full.metadata, L_A=self.L_A, j_ab_scale=self.j_ab_scale),
        )

    def h_b_on_bath(self) -> ModelSpec:
        """H_B re-indexed to live on a chain of length L - L_A."""
        return self.full.restricted_to_range(self.L_A + 1, self.L, offset=self.L_A)


def build_xxz(
    L: int,
    J: float,
    delta: float,
    hx: float = 0.0,
    hz: float = 0.0,
    disorder_seed: Optional[int] = None,
) -> ModelSpec:
    """Open XXZ chain with uniform or disordered on-site fields.

    With ``disorder_seed`` set, per-site fields are drawn i.i.d. uniform from
    [-hz, hz] and [-hx, hx] (all z draws first, then all x draws) using
    numpy's PCG64 stream, recorded in the metadata for reproducibility.
    """
    if L < 2:
        raise UsageError(f"need L >= 2, got {L}")
    terms: list[Term] = []
    for j in range(1, L):
        terms.append((J, PauliString(((j, "x"), (j + 1, "x")), L)))
        terms.append((J, PauliString(((j, "y"), (j + 1, "y")), L)))
        terms.append((delta, PauliString(((j, "z"), (j + 1, "z")), L)))
    meta = {
        "model": "xxz_open_chain",
        "L": L,
        "J": J,
        "delta": delta,
        "hx": hx,
        "hz": hz,
    }
    if disorder_seed is None:
        hz_j = [hz] * L
        hx_j = [hx] * L
        meta["field_mode"] = "uniform"
    else:
        rng = np.random.Generator(np.random.PCG64(disorder_seed))
        hz_j = [float(rng.uniform(-hz, hz)) for _ in range(L)]
        hx_j = [float(rng.uniform(-hx, hx)) for _ in range(L)]
        meta.update(
            field_mode="disordered",
            seed=disorder_seed,
            rng="numpy.random.PCG64",
            rng_version=np.__version__,
            hz_per_site=hz_j,
            hx_per_site=hx_j,
        )
    for j in range(1, L + 1):
        if hz_j[j - 1] != 0.0:
            terms.append((hz_j[j - 1], PauliString.single(j, "z", L)))
        if hx_j[j - 1] != 0.0:
            terms.append((hx_j[j - 1], PauliString.single(j, "x", L)))
    return ModelSpec(L, tuple(terms), meta)


def bipartition(spec: ModelSpec, L_A: int, j_ab_scale: float = 1.0) -> Bipartition:
    """Split terms into H_A, H_B and the scaled crossing part H_AB."""
    L = spec.n_sites
    if not 1 <= L_A < L:
        raise UsageError(f"need 1 <= L_A < L, got L_A={L_A}, L={L}")
    a_terms, b_terms, ab_terms = [], [], []
    for c, s in spec.terms:
        if s.support[-1] <= L_A:
            a_terms.append((c, s))
        elif s.support[0] > L_A:
            b_terms.append((c, s))
        else:
            ab_terms.append((c * j_ab_scale, s))
    return Bipartition(
        L_A=L_A,
        h_a=ModelSpec(L, tuple(a_terms), dict(spec.metadata)),
        h_b=ModelSpec(L, tuple(b_terms), dict(spec.metadata)),
        h_ab=ModelSpec(L, tuple(ab_terms), dict(spec.metadata)),
        j_ab_scale=j_ab_scale,
        full=spec,
    )


def to_dense(
    spec: ModelSpec, precision: int = 106, n_sites: Optional[int] = None
) -> DenseOperator:
    """Dense matrix of a term list (sparse accumulation, one pass per term)."""
    n = n_sites if n_sites is not None else spec.n_sites
    dim = 1 << n
    op = DenseOperator.zeros(dim, precision)
    with workprec(precision):
        for c, s in spec.terms:
            if s.support and s.support[-1] > n:
                raise UsageError(f"term {s} exceeds n_sites={n}")
            cc = gmpy2.mpfr(c)
            for col in range(dim):
                row, amp = apply_to_basis(s, col, n)
                op.data[row, col] = op.data[row, col] + cc * gmpy2.mpc(amp)
    return op


def dense_restricted_A(
    spec: ModelSpec, L_A: int, precision: int = 106
) -> DenseOperator:
    """Dense matrix of an A-supported term list on the 2^{L_A} space."""
    for _, s in spec.terms:
        if s.support and s.support[-1] > L_A:
            raise UsageError(f"term {s} not supported in A (L_A={L_A})")
    restricted = ModelSpec(
        L_A,
        tuple(
            (c, PauliString(s.factors, L_A)) for c, s in spec.terms
        ),
        dict(spec.metadata),
    )
    return to_dense(restricted, precision)
