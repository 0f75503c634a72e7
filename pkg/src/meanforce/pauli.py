"""Exact symbolic algebra of Pauli strings.

A Pauli string is an ordered product of single-site Pauli operators on a
spin-1/2 chain.  Everything here is exact integer/symbol manipulation; dense
matrix realizations live in :mod:`meanforce.xlinalg` and are produced by
:func:`to_matrix`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import gmpy2

from .errors import NumericalError, UsageError

AXES = ("x", "y", "z")

# sigma^a sigma^b = phase * sigma^c for a != b, cyclic in (x, y, z)
_AXIS_PRODUCT = {
    ("x", "y"): ("z", 1j),
    ("y", "z"): ("x", 1j),
    ("z", "x"): ("y", 1j),
    ("y", "x"): ("z", -1j),
    ("z", "y"): ("x", -1j),
    ("x", "z"): ("y", -1j),
}

_PHASES = (1, -1, 1j, -1j)


@dataclass(frozen=True)
class PauliString:
    """A product of single-site Pauli operators, phase-free.

    ``factors`` is a tuple of ``(site, axis)`` pairs with strictly increasing
    1-based sites.  The empty tuple is the identity.
    """

    factors: tuple[tuple[int, str], ...]
    chain_length: int

    def __post_init__(self):
        prev = 0
        for site, axis in self.factors:
            if axis not in AXES:
                raise UsageError(f"unknown axis {axis!r}")
            if site <= prev:
                raise UsageError("sites must be strictly increasing")
            if not 1 <= site <= self.chain_length:
                raise UsageError(
                    f"site {site} outside chain of length {self.chain_length}"
                )
            prev = site

    @classmethod
    def from_factors(cls, factors: Iterable[tuple[int, str]], chain_length: int) -> "PauliString":
        return cls(tuple(sorted(factors)), chain_length)

    @classmethod
    def identity(cls, chain_length: int) -> "PauliString":
        return cls((), chain_length)

    @classmethod
    def single(cls, site: int, axis: str, chain_length: int) -> "PauliString":
        return cls(((site, axis),), chain_length)

    @property
    def is_identity(self) -> bool:
        return not self.factors

    @property
    def n_body(self) -> int:
        return len(self.factors)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(site for site, _ in self.factors)

    def axis_at(self, site: int) -> Optional[str]:
        for s, a in self.factors:
            if s == site:
                return a
        return None

    def to_text(self) -> str:
        if self.is_identity:
            return "I"
        return " ".join(f"{a.upper()}{s}" for s, a in self.factors)

    @classmethod
    def from_text(cls, text: str, chain_length: int) -> "PauliString":
        text = text.strip()
        if text in ("I", "", "1"):
            return cls.identity(chain_length)
        factors = []
        for tok in text.split():
            axis = tok[0].lower()
            if axis not in AXES:
                raise UsageError(f"bad Pauli token {tok!r}")
            try:
                site = int(tok[1:])
            except ValueError as exc:
                raise UsageError(f"bad Pauli token {tok!r}") from exc
            factors.append((site, axis))
        return cls.from_factors(factors, chain_length)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class PhasedPauli:
    """A Pauli string together with a fourth-root-of-unity phase."""

    phase: complex
    string: PauliString

    def __post_init__(self):
        if self.phase not in _PHASES:
            raise UsageError(f"phase must be a fourth root of unity, got {self.phase}")


@dataclass(frozen=True)
class SignAssignment:
    """Axis signs: ``plus_axis`` gets +1, the other two axes -1, identity +1."""

    plus_axis: str

    def sign_of_axis(self, axis: str) -> int:
        return 1 if axis == self.plus_axis else -1

    def sign_of(self, string: PauliString) -> int:
        s = 1
        for _, axis in string.factors:
            s *= self.sign_of_axis(axis)
        return s


def multiply(a: PhasedPauli, b: PhasedPauli) -> PhasedPauli:
    """Group product of two phased Pauli strings."""
    if a.string.chain_length != b.string.chain_length:
        raise UsageError("chain_length mismatch")
    phase = a.phase * b.phase
    fa = dict(a.string.factors)
    fb = dict(b.string.factors)
    out = []
    for site in sorted(set(fa) | set(fb)):
        if site in fa and site in fb:
            if fa[site] == fb[site]:
                continue  # squares to identity
            axis, ph = _AXIS_PRODUCT[(fa[site], fb[site])]
            phase *= ph
            out.append((site, axis))
        else:
            out.append((site, fa.get(site) or fb[site]))
    # phases stay in {1,-1,i,-i}; normalize the float artifacts of complex mul
    phase = complex(round(phase.real), round(phase.imag))
    return PhasedPauli(phase, PauliString(tuple(out), a.string.chain_length))


def compose(a: PauliString, b: PauliString) -> PauliString:
    """Product modulo phase (the Klein-group quotient used in searches)."""
    return multiply(PhasedPauli(1, a), PhasedPauli(1, b)).string


def commutes(a: PauliString, b: PauliString) -> bool:
    """Pauli strings commute iff they disagree on an even number of shared sites."""
    fa = dict(a.factors)
    clashes = sum(
        1 for site, axis in b.factors if site in fa and fa[site] != axis
    )
    return clashes % 2 == 0


def distance(O: PauliString, L_A: int) -> int:
    """Distance of the farthest support site from the A/B boundary: L_A - i_1."""
    if O.is_identity:
        raise UsageError("distance undefined for the identity")
    sites = O.support
    if sites[-1] > L_A:
        raise UsageError(f"support reaches site {sites[-1]} > L_A={L_A}")
    return L_A - sites[0]


def enumerate_pauli(L_A: int, n: int) -> list[PauliString]:
    """All n-body strings on sites 1..L_A, lexicographic in (sites, axes)."""
    if not 1 <= n <= L_A:
        raise UsageError(f"need 1 <= n <= L_A, got n={n}, L_A={L_A}")
    out = []
    for sites in itertools.combinations(range(1, L_A + 1), n):
        for axes in itertools.product(AXES, repeat=n):
            out.append(PauliString(tuple(zip(sites, axes)), L_A))
    return out


def sign_excludes(terms: Sequence[PauliString], O: PauliString) -> bool:
    """True iff a sign assignment gives every Hamiltonian term +1 but O -1.

    Such an assignment forces the coefficient of O in the mean-force
    Hamiltonian to vanish identically at every temperature.
    """
    for plus_axis in AXES:
        sa = SignAssignment(plus_axis)
        if all(sa.sign_of(t) == 1 for t in terms) and sa.sign_of(O) == -1:
            return True
    return False


def witnessing_assignment(
    terms: Sequence[PauliString], O: PauliString
) -> Optional[SignAssignment]:
    """The sign assignment proving exclusion, if one exists."""
    for plus_axis in AXES:
        sa = SignAssignment(plus_axis)
        if all(sa.sign_of(t) == 1 for t in terms) and sa.sign_of(O) == -1:
            return sa
    return None


def minimal_product_length(
    terms: Sequence[PauliString], O: PauliString, k_max: int
) -> Optional[int]:
    """Smallest t <= k_max with some product of t terms proportional to O.

    Breadth-first search over the phase-quotiented Pauli group; ``None``
    when no product of length <= k_max reaches O.
    """
    if k_max < 1:
        raise UsageError("k_max must be >= 1")
    gens = list(dict.fromkeys(terms))
    target = O.factors
    frontier = {PauliString.identity(O.chain_length).factors}
    seen = set(frontier)
    for t in range(1, k_max + 1):
        nxt = set()
        for f in frontier:
            base = PauliString(f, O.chain_length)
            for g in gens:
                prod = compose(base, g).factors
                if prod == target:
                    return t
                if prod not in seen:
                    seen.add(prod)
                    nxt.add(prod)
        frontier = nxt
        if not frontier:
            break
    return None


def tuple_splits(tup: Sequence[PauliString], L_A: int) -> bool:
    """True iff the tuple splits into H1 != {} (A-supported) commuting with H2.

    Exhaustive over the 2^len subset choices; elements are treated
    positionally, so repeated strings count separately.
    """
    if not tup:
        raise UsageError("tuple must be non-empty")
    n = len(tup)
    in_A = [not t.support or t.support[-1] <= L_A for t in tup]
    comm = [[commutes(tup[i], tup[j]) for j in range(n)] for i in range(n)]
    for mask in range(1, 1 << n):
        h1 = [i for i in range(n) if mask >> i & 1]
        if not all(in_A[i] for i in h1):
            continue
        h2 = [i for i in range(n) if not mask >> i & 1]
        if all(comm[i][j] for i in h1 for j in h2):
            return True
    return False


_CONJECTURE_CACHE: dict = {}


def conjecture_table(
    terms: Sequence[PauliString], k_max: int, L_A: int
) -> dict[tuple, int]:
    """factors -> smallest k <= k_max with a non-splitting (k+1)-tuple of
    terms whose product is proportional to that Pauli string.

    Tuples are enumerated as multisets once (the product modulo phase and
    the split predicate are both order-free), with prefix products shared
    across the lexicographic recursion, so the whole table costs one sweep.
    """
    if k_max < 1:
        raise UsageError("k_max must be >= 1")
    gens = list(dict.fromkeys(terms))
    key = (tuple(gens), k_max, L_A)
    cached = _CONJECTURE_CACHE.get(key)
    if cached is not None:
        return cached
    n_gens = len(gens)
    in_A = [not g.support or g.support[-1] <= L_A for g in gens]
    comm = [[commutes(gens[i], gens[j]) for j in range(n_gens)] for i in range(n_gens)]
    chain_length = gens[0].chain_length if gens else 0
    table: dict[tuple, int] = {}

    def splits(idx: tuple[int, ...]) -> bool:
        m = len(idx)
        for mask in range(1, 1 << m):
            h1 = [i for i in range(m) if mask >> i & 1]
            if not all(in_A[idx[i]] for i in h1):
                continue
            h2 = [i for i in range(m) if not mask >> i & 1]
            if all(comm[idx[i]][idx[j]] for i in h1 for j in h2):
                return True
        return False

    def grow(start: int, size_left: int, prod: PauliString, idx: tuple[int, ...], k: int):
        if size_left == 0:
            f = prod.factors
            if f in table and table[f] <= k:
                return
            if not splits(idx):
                table[f] = k
            return
        for g in range(start, n_gens):
            grow(g, size_left - 1, compose(prod, gens[g]), idx + (g,), k)

    ident = PauliString.identity(chain_length)
    for k in range(1, k_max + 1):
        grow(0, k + 1, ident, (), k)
    _CONJECTURE_CACHE[key] = table
    return table


def conjecture_k0(
    terms: Sequence[PauliString], O: PauliString, k_max: int, L_A: int
) -> Optional[int]:
    """Smallest k <= k_max with a non-splitting (k+1)-tuple of terms whose
    product is proportional to O; ``None`` if every such tuple splits."""
    return conjecture_table(terms, k_max, L_A).get(O.factors)


def to_matrix(O: PauliString, n_sites: int, precision: int = 106):
    """Dense matrix of O on ``n_sites`` spins (site 1 = most significant qubit)."""
    from .xlinalg import DenseOperator, workprec

    if O.factors and O.support[-1] > n_sites:
        raise UsageError(f"support exceeds n_sites={n_sites}")
    dim = 1 << n_sites
    op = DenseOperator.zeros(dim, precision)
    with workprec(precision):
        for col in range(dim):
            row, amp = apply_to_basis(O, col, n_sites)
            op.data[row, col] = gmpy2.mpc(amp)
    return op


def apply_to_basis(O: PauliString, col: int, n_sites: int) -> tuple[int, complex]:
    """O|col> = amp |row> in the computational basis (|0> = spin up)."""
    row = col
    amp = 1 + 0j
    for site, axis in O.factors:
        bitpos = n_sites - site
        b = col >> bitpos & 1
        if axis == "x":
            row ^= 1 << bitpos
        elif axis == "y":
            row ^= 1 << bitpos
            amp *= 1j * (-1) ** b
        else:  # z
            amp *= (-1) ** b
    return row, amp


def pauli_coefficient(X, O: PauliString):
    """Hilbert-Schmidt coefficient tr(O X) / 2^{L_A} of O in X (an mpfr).

    X must be Hermitian on the 2^{L_A} space O lives in; a residual
    imaginary part beyond the precision floor raises
    :class:`~meanforce.errors.NumericalError`.
    """
    from .xlinalg import workprec

    dim = X.dim
    n_sites = dim.bit_length() - 1
    if 1 << n_sites != dim:
        raise UsageError("operator dimension must be a power of 2")
    if O.factors and O.support[-1] > n_sites:
        raise UsageError("O not supported on X's space")
    P = X.precision
    with workprec(P):
        acc = gmpy2.mpc(0)
        for col in range(dim):
            row, amp = apply_to_basis(O, col, n_sites)
            # tr(O X) = sum_j <j| O X |j> = sum_col amp(col) X[col_target...]
            acc += gmpy2.mpc(amp) * X.data[col, row]
        acc = acc / dim
        scale = max(abs(acc), X.max_abs(), gmpy2.mpfr(1))
        if abs(acc.imag) > scale * gmpy2.mpfr(2) ** (-P + 16):
            raise NumericalError(
                f"tr(O X)/2^L has imaginary part {acc.imag} (X not Hermitian?)"
            )
        return acc.real
