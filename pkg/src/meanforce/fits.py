"""Least-squares fits of the structural laws: exponential decay in distance,
the skin-depth law 1/d_c = a - 2 ln(beta), and small-beta power laws."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InsufficientDataError, UsageError
from .hmf import CoefficientTable
from .pauli import PauliString, distance


@dataclass
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points_used: int
    excluded_below_floor: int

    @property
    def d_c(self) -> float:
        """Skin depth -1/slope (meaningful for ln|c| vs d fits)."""
        return -1.0 / self.slope


@dataclass(frozen=True)
class OperatorFamily:
    """Operators sharing an axis pattern at fixed offsets from an anchor site.

    ``pattern`` is a tuple of (offset, axis); the member at distance d has
    its anchor at site L_A - d.  Text form: "X0 X1 Z2" (axis + offset).
    """

    pattern: tuple[tuple[int, str], ...]

    @classmethod
    def from_text(cls, text: str) -> "OperatorFamily":
        pattern = []
        for tok in text.split():
            axis = tok[0].lower()
            if axis not in ("x", "y", "z"):
                raise UsageError(f"bad family token {tok!r}")
            pattern.append((int(tok[1:]), axis))
        return cls(tuple(sorted(pattern)))

    def to_text(self) -> str:
        return " ".join(f"{a.upper()}{off}" for off, a in self.pattern)

    @property
    def n_body(self) -> int:
        return len(self.pattern)

    def member(self, d: int, L_A: int, chain_length: int) -> Optional[PauliString]:
        anchor = L_A - d
        factors = tuple((anchor + off, a) for off, a in self.pattern)
        if factors[0][0] < 1 or factors[-1][0] > L_A:
            return None
        return PauliString(factors, chain_length)

    def members(self, L_A: int, chain_length: int) -> list[tuple[int, PauliString]]:
        out = []
        for d in range(L_A):
            m = self.member(d, L_A, chain_length)
            if m is not None:
                out.append((d, m))
        return out


def least_squares(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Ordinary least squares y = slope*x + intercept; returns r^2 too."""
    n = len(xs)
    if n < 2:
        raise InsufficientDataError(f"need >= 2 points, got {n}")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0:
        raise InsufficientDataError("all x values coincide")
    slope = sxy / sxx
    intercept = my - slope * mx
    r2 = 1.0 if syy == 0 else (sxy * sxy) / (sxx * syy)
    return slope, intercept, r2


def fit_skin_depth(table: CoefficientTable, family: OperatorFamily) -> FitResult:
    """ln|c| vs distance over the family's above-floor members."""
    L_A = next(iter(table.entries)).chain_length
    xs, ys = [], []
    excluded = 0
    for d, op in family.members(L_A, L_A):
        c = table.entries.get(op)
        if c is None:
            continue
        if abs(c) < table.floor:
            excluded += 1
            continue
        xs.append(float(d))
        ys.append(math.log(abs(float(c))))
    if len(xs) < 2:
        raise InsufficientDataError(
            f"family {family.to_text()}: {len(xs)} usable points"
        )
    slope, intercept, r2 = least_squares(xs, ys)
    return FitResult(slope, intercept, r2, len(xs), excluded)


def fit_skin_law(dc_samples: Sequence[tuple[float, float]]) -> FitResult:
    """Fit 1/d_c against -2 ln(beta); slope ~ 1, intercept = a."""
    if len(dc_samples) < 3:
        raise InsufficientDataError("need >= 3 (beta, d_c) samples")
    xs = [-2.0 * math.log(float(b)) for b, _ in dc_samples]
    ys = [1.0 / float(dc) for _, dc in dc_samples]
    slope, intercept, r2 = least_squares(xs, ys)
    return FitResult(slope, intercept, r2, len(xs), 0)


def fit_beta_exponent(samples: Sequence[tuple[float, float]], floor=None) -> FitResult:
    """Slope of ln|c| vs ln(beta) over above-floor samples."""
    xs, ys = [], []
    excluded = 0
    for beta, c in samples:
        mag = abs(float(c))
        if floor is not None and mag < float(floor):
            excluded += 1
            continue
        if mag == 0.0:
            excluded += 1
            continue
        xs.append(math.log(float(beta)))
        ys.append(math.log(mag))
    if len(xs) < 3:
        raise InsufficientDataError(f"{len(xs)} usable small-beta samples")
    slope, intercept, r2 = least_squares(xs, ys)
    return FitResult(slope, intercept, r2, len(xs), excluded)
