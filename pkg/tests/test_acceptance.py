"""Acceptance gate: ten end-to-end checks of the package's central claims,
each printing one [PASS]/[FAIL] line.

Shared notation: H* is the mean-force Hamiltonian of the subsystem A
(the first L_A sites of an open chain of L sites), c(O) the coefficient of
the Pauli string O in H* - H_A, d the distance of O from the A|B boundary,
and k0 the first expansion order at which c(O) becomes nonzero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np
import pytest

from meanforce.fits import (
    OperatorFamily,
    fit_beta_exponent,
    fit_skin_depth,
    fit_skin_law,
    least_squares,
)
from meanforce.hmf import (
    HmfCalculator,
    default_floor,
    deviation_table,
    entanglement_hamiltonian,
    rescaled_distance,
)
from meanforce.model import bipartition, build_xxz
from meanforce.pauli import (
    PauliString,
    conjecture_k0,
    distance,
    enumerate_pauli,
    sign_excludes,
)
from meanforce.series import (
    SeriesCalculator,
    closed_form_coefficient,
    default_k0_tol,
    k0_lower_bound,
    k0_numeric,
    series_deviation_table,
    traceless_part,
    truncation_error,
)
from meanforce.xlinalg import tol, workprec

P = 106

# the reference chain used by the decay/exponent scans
FIG_COUPLINGS = dict(J=1.0, delta=0.95, hx=0.2, hz=0.2)

# small-beta window for exponent fits and the log-spaced decay grid
WINDOW_BETAS = tuple(float(b) for b in np.geomspace(1e-3, 1e-2, 6))
SKIN_BETAS = tuple(float(b) for b in np.geomspace(1e-2, 1.0, 13))

# Families that realize the minimal detection order 2(d+1)-n of their class,
# as (pattern, expected exponent as a function of d).  The 3-body pattern
# needs the odd axis on the deepest site, and its bound is realized only by
# members whose support stays strictly inside A: the member touching site
# L_A starts one order later (the same boundary exception the mixed 2-body
# pairs show), so it is excluded from the equality checks below.
EXPONENT_FAMILIES = (
    ("X0", lambda d: 2 * d + 1),
    ("Z0", lambda d: 2 * d + 1),
    ("X0 X1", lambda d: 2 * d),
    ("Z0 Z1", lambda d: 2 * d),
    ("X0 Z1 Z2", lambda d: 2 * d - 1),
    ("X0 Z1 X2 Z3", lambda d: 2 * d - 2),
)

# Families with a d-independent exponent offset (uniform beta power 2d+const
# across members), used for the skin-depth law; the 1-/2-/3-body set of the
# decay figures.
SKIN_FAMILIES = ("X0", "X0 X1", "X0 X1 Z2")


def _equality_member(fam: OperatorFamily, op: PauliString, L_A: int) -> bool:
    """Members participating in the exponent/detection-order equality."""
    if fam.n_body == 3 and op.support[-1] == L_A:
        return False  # boundary exception, see EXPONENT_FAMILIES comment
    return True


def _report(num: int, description: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    line = f"[{tag}] criterion {num}: {description}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


@dataclass
class Scan:
    spec: object
    bip: object
    calc: HmfCalculator
    tables: dict  # beta -> CoefficientTable
    ops: list


def _scan(spec, L_A, betas, ops):
    bip = bipartition(spec, L_A)
    calc = HmfCalculator(bip, precision=P)
    tables = {b: deviation_table(calc.hmf(b), bip.h_a, ops) for b in betas}
    return Scan(spec, bip, calc, tables, ops)


@pytest.fixture(scope="session")
def fig_scan():
    """L=7, L_A=6 reference chain scanned over both beta grids, restricted
    to the decay-family members."""
    spec = build_xxz(7, **FIG_COUPLINGS)
    ops: dict[PauliString, None] = {}
    for text, _exp in EXPONENT_FAMILIES:
        for _d, op in OperatorFamily.from_text(text).members(6, 6):
            ops[op] = None
    for text in SKIN_FAMILIES:
        for _d, op in OperatorFamily.from_text(text).members(6, 6):
            ops[op] = None
    betas = sorted(set(WINDOW_BETAS) | set(SKIN_BETAS))
    return _scan(spec, 6, betas, list(ops))


@pytest.fixture(scope="session")
def mixed_scan():
    """Isotropic chain with strong disordered mixed fields (L=7, L_A=6),
    scanned over the exponent window for the mixed two-body checks.

    The fields must break the axis-exchange symmetry of the isotropic
    uniform-field point: with uniform h^x = h^z = 1 the off-boundary mixed
    pairs pick up an extra cancellation and start one order later (2d+2);
    generic or disordered fields of the same strength show the generic
    2d+1 / 2d+2 pattern (see the decisions ledger)."""
    spec = build_xxz(7, J=1.0, delta=1.0, hx=1.0, hz=1.0, disorder_seed=3)
    ops: dict[PauliString, None] = {}
    for d in range(1, 6):
        ops[PauliString(((6 - d, "x"), (6 - d + 1, "z")), 6)] = None
        ops[PauliString(((6 - d, "x"), (6, "z")), 6)] = None
    return _scan(spec, 6, WINDOW_BETAS, list(ops))


@pytest.fixture(scope="session")
def fig_series():
    """Order-by-order expansion on the reference chain up to k=10, with
    detection tables for every operator up to 4-body."""
    spec = build_xxz(7, **FIG_COUPLINGS)
    bip = bipartition(spec, 6)
    sc = SeriesCalculator(bip, precision=P, k_guard=12)
    ops = []
    for n in range(1, 5):
        ops.extend(enumerate_pauli(6, n))
    coeffs = [sc.series_coefficient(k) for k in range(11)]
    tables = {c.order: series_deviation_table(c, bip.h_a, ops) for c in coeffs}
    cut = default_k0_tol(coeffs)
    return spec, bip, tables, cut, ops


def _exponent_fits(scan: Scan, members, expected_of_d):
    """Fit ln|c| vs ln(beta) over the window for each member whose window
    samples all clear the floor; returns [(d, expected, fitted)]."""
    out = []
    for d, op in members:
        key = PauliString(op.factors, 6)
        samples = []
        ok = True
        for b in WINDOW_BETAS:
            table = scan.tables[b]
            c = table.entries[key]
            if abs(c) < table.floor:
                ok = False
                break
            samples.append((b, float(c)))
        if not ok:
            continue
        fit = fit_beta_exponent(samples)
        out.append((d, expected_of_d(d), fit.slope))
    return out


def test_criterion_01_high_temperature_limit():
    spec = build_xxz(6, **FIG_COUPLINGS)
    bip = bipartition(spec, 4)
    calc = HmfCalculator(bip, precision=P)
    ratios = {}
    with workprec(P):
        ha = calc.h_a_dense()
        ha_norm = ha.frobenius()
        for b in (1e-3, 1e-4):
            res = calc.hmf(b)
            ratios[b] = float((res.hmf - ha).frobenius() / ha_norm)
    ratio = ratios[1e-4] / ratios[1e-3]
    _report(
        1,
        "relative deviation from H_A shrinks first-order in beta",
        ratio <= 0.11,
        f"ratio {ratio:.4f}",
    )


def test_criterion_02_first_order_value():
    """First expansion order for a field-free boundary bond is
    -(2 J^2 + delta^2)/2 times the identity: -1.45125 I at J=1, delta=0.95.

    The coefficient carries a minus sign; this was cross-checked against two
    independent routes (dense closed form and extrapolation of the exact
    H* at small beta), see the decisions ledger.
    """
    ok = True
    worst = 0.0
    for L, L_A in ((2, 1), (5, 3)):
        spec = build_xxz(L, J=1.0, delta=0.95)
        bip = bipartition(spec, L_A)
        c1 = SeriesCalculator(bip, precision=P).series_coefficient(1).matrix
        with workprec(P):
            expect = -(2 * gmpy2.mpfr(1.0) ** 2 + gmpy2.mpfr(0.95) ** 2) / 2
            dev = float(c1.add_scaled_identity(-expect).frobenius())
        worst = max(worst, dev)
        ok = ok and dev <= float(tol(P, 30))
    _report(
        2,
        "first-order coefficient equals -(2J^2+delta^2)/2 * I = -1.45125 I",
        ok,
        f"worst defect {worst:.3e}",
    )


def test_criterion_03_oracle_equivalence():
    ok = True
    worst = 0.0
    for L, L_A in ((4, 2), (5, 3), (6, 4)):
        spec = build_xxz(L, J=1.0, delta=0.95)
        bip = bipartition(spec, L_A)
        calc = SeriesCalculator(bip, precision=P)
        with workprec(P):
            for k in (0, 1, 2):
                got = calc.series_coefficient(k).matrix
                want = closed_form_coefficient(bip, k, P)
                if k == 2:  # closed form fixed up to an identity shift
                    got, want = traceless_part(got), traceless_part(want)
                scale = max(float(want.frobenius()), 1.0)
                dev = float((got - want).frobenius()) / scale
                worst = max(worst, dev)
                ok = ok and dev <= float(tol(P, 30))
    _report(
        3,
        "composition sum matches closed forms for k=0,1,2 on 3 bipartitions",
        ok,
        f"worst relative defect {worst:.3e}",
    )


def test_criterion_04_power_law_exponents(fig_scan, mixed_scan):
    results = []
    for text, expected in EXPONENT_FAMILIES:
        fam = OperatorFamily.from_text(text)
        members = [
            (d, op)
            for d, op in fam.members(6, 6)
            if _equality_member(fam, op, 6)
        ]
        results += _exponent_fits(fig_scan, members, expected)
    # mixed two-body pairs on the isotropic strong-field chain
    adjacent = [
        (d, PauliString(((6 - d, "x"), (6 - d + 1, "z")), 6)) for d in range(2, 6)
    ]
    boundary = [
        (d, PauliString(((6 - d, "x"), (6, "z")), 6)) for d in range(1, 6)
    ]
    results += _exponent_fits(mixed_scan, adjacent, lambda d: 2 * d + 1)
    results += _exponent_fits(mixed_scan, boundary, lambda d: 2 * d + 2)
    ok = bool(results)
    worst = 0.0
    for _d, expected, slope in results:
        worst = max(worst, abs(slope - expected))
        ok = ok and abs(slope - expected) <= 0.1
    _report(
        4,
        "small-beta exponents equal 2d+(2-n), and 2d+1 / 2d+2 for mixed pairs",
        ok,
        f"{len(results)} members, worst |slope-expected| {worst:.3f}",
    )


def test_criterion_05_skin_law(fig_scan):
    """Decay fits use members at d >= 1: the d=0 member sits on the
    boundary and is prefactor-dominated, while the skin law describes the
    decay into the subsystem."""
    ok = True
    worst_r2 = 1.0
    law_detail = []
    for text in SKIN_FAMILIES:
        fam = OperatorFamily.from_text(text)
        members = [(d, op) for d, op in fam.members(6, 6) if d >= 1]
        dc_samples = []
        for b in SKIN_BETAS:
            table = fig_scan.tables[b]
            pts = [
                (d, math.log(abs(float(table.entries[op]))))
                for d, op in members
                if abs(table.entries[op]) >= table.floor
            ]
            if len(pts) < 2:
                continue
            slope, _ic, r2 = least_squares(
                [p[0] for p in pts], [p[1] for p in pts]
            )
            if b <= 0.2:
                worst_r2 = min(worst_r2, r2)
                ok = ok and r2 >= 0.99
            if slope < 0:
                dc_samples.append((b, -1.0 / slope))
        law = fit_skin_law(dc_samples)
        law_detail.append(f"{text}: slope {law.slope:.3f} a {law.intercept:.2f}")
        ok = ok and abs(law.slope - 1.0) <= 0.05
        ok = ok and law.r_squared >= 0.99
        ok = ok and law.intercept > 1.0
    _report(
        5,
        "exponential decay in d (r^2>=0.99) and 1/d_c = a - 2 ln beta",
        ok,
        f"min decay r^2 {worst_r2:.4f}; " + "; ".join(law_detail),
    )


def test_criterion_06_selection_rules():
    """Field-free chain, beta in {0.1, 0.5, 1, 2}.

    Sign-homomorphism zeros: every 1-body and mixed 2-body coefficient is a
    structural zero.  Positive control: every same-axis 2-body coefficient
    (adjacent and non-adjacent) is above floor for beta >= 0.5.

    The original target asked for xyz-type 3-body coefficients above floor
    here.  That is unattainable: the field-free Hamiltonian is real
    symmetric, so H* is real, and any Pauli string with an odd number of
    sigma^y factors is purely imaginary and has coefficient exactly zero.
    Every other 3-body string is already sign-excluded, so all 3-body
    coefficients vanish without fields (see the decisions ledger).  The
    check below asserts exactly that: xyz strings are sign-allowed yet
    numerically zero, while an even-Y 3-body string does appear once
    fields are on.
    """
    spec = build_xxz(6, J=1.0, delta=0.95)  # no fields
    bip = bipartition(spec, 4)
    calc = HmfCalculator(bip, precision=P)
    terms = [s for _c, s in spec.terms]
    ops = enumerate_pauli(4, 1) + enumerate_pauli(4, 2) + enumerate_pauli(4, 3)
    betas = (0.1, 0.5, 1.0, 2.0)
    tables = {b: deviation_table(calc.hmf(b), bip.h_a, ops) for b in betas}
    with workprec(P):
        cut = float(default_floor(calc.h_norm(), P))
    ok = True
    for op in ops:
        key = PauliString(op.factors, 4)
        full = PauliString(op.factors, 6)
        axes = [a for _s, a in op.factors]
        structural = op.n_body == 1 or (op.n_body == 2 and axes[0] != axes[1])
        if structural:
            ok = ok and sign_excludes(terms, full)
            ok = ok and all(
                float(abs(tables[b].entries[key])) < cut for b in betas
            )
        elif op.n_body == 2:  # same-axis: the allowed class, must be seen
            ok = ok and not sign_excludes(terms, full)
            ok = ok and all(
                float(abs(tables[b].entries[key])) > cut for b in (0.5, 1.0, 2.0)
            )
        elif op.n_body == 3 and len(set(axes)) == 3:
            # sign-allowed but killed by the reality of H (odd sigma^y count)
            ok = ok and not sign_excludes(terms, full)
            ok = ok and all(
                float(abs(tables[b].entries[key])) < cut for b in betas
            )
    # with fields on, 3-body strings with an even number of sigma^y factors
    # do appear (the decay-family class used elsewhere in this suite)
    spec_f = build_xxz(6, **FIG_COUPLINGS)
    bip_f = bipartition(spec_f, 4)
    calc_f = HmfCalculator(bip_f, precision=P)
    probe = PauliString.from_text("X2 Y3 Y4", 4)
    table_f = deviation_table(calc_f.hmf(1.0), bip_f.h_a, [probe])
    with workprec(P):
        cut_f = float(default_floor(calc_f.h_norm(), P))
    ok = ok and float(abs(table_f.entries[probe])) > cut_f
    _report(
        6,
        "field-free chain: 1-body and mixed 2-body vanish structurally, "
        "same-axis 2-body survive; all 3-body vanish (real H), "
        "even-Y 3-body appear with fields",
        ok,
    )


def test_criterion_07_detection_order_bound(fig_series):
    spec, bip, tables, cut, ops = fig_series
    ok = True
    violations = 0
    k0_of = {}
    for op in ops:
        k0 = k0_numeric(tables, op, cut)
        k0_of[op] = k0
        if k0 is not None and k0 < k0_lower_bound(op, 6):
            violations += 1
            ok = False
    # equality for the bound-achieving families when the bound is reachable
    eq_checked = 0
    for text, expected in EXPONENT_FAMILIES:
        fam = OperatorFamily.from_text(text)
        for d, op in fam.members(6, 6):
            if not _equality_member(fam, op, 6):
                continue
            bound = expected(d)
            if 1 <= bound <= 10:
                eq_checked += 1
                ok = ok and k0_of[op] == bound
    # the split predicate agrees with every structural zero (exhaustive,
    # L=6 with fields, k <= 4)
    spec6 = build_xxz(6, **FIG_COUPLINGS)
    bip6 = bipartition(spec6, 4)
    sc6 = SeriesCalculator(bip6, precision=P)
    ops6 = []
    for n in range(1, 5):
        ops6.extend(enumerate_pauli(4, n))
    coeffs6 = [sc6.series_coefficient(k) for k in range(5)]
    tables6 = {c.order: series_deviation_table(c, bip6.h_a, ops6) for c in coeffs6}
    cut6 = default_k0_tol(coeffs6)
    terms6 = [s for _c, s in spec6.terms]
    for op in ops6:
        key = PauliString(op.factors, 4)
        ck0 = conjecture_k0(terms6, PauliString(op.factors, 6), 4, 4)
        for k in range(1, 5):
            if ck0 is None or k < ck0:
                # predicate says zero at this order; the numbers must agree
                ok = ok and abs(tables6[k].entries[key]) <= cut6
    _report(
        7,
        "k0 >= 2(d+1)-n for all <=4-body (k<=10), equality on the decay "
        "families, split predicate consistent with structural zeros",
        ok,
        f"{len(ops)} operators, {violations} bound violations, "
        f"{eq_checked} equality checks",
    )


def test_criterion_08_low_temperature_limit():
    spec = build_xxz(7, **FIG_COUPLINGS)
    bip = bipartition(spec, 3)
    calc = HmfCalculator(bip, precision=P)
    ent = entanglement_hamiltonian(spec, 3, precision=P)
    betas = (10, 20, 40, 70, 100)
    dist = [float(rescaled_distance(calc.hmf(b), ent)) for b in betas]
    monotone = all(a > b for a, b in zip(dist, dist[1:]))
    ok = monotone and dist[-1] < 1e-6
    _report(
        8,
        "beta H* + ln Z* approaches the entanglement Hamiltonian "
        "monotonically, below 1e-6 by beta=100",
        ok,
        f"final distance {dist[-1]:.3e}",
    )


def test_criterion_09_coupling_independence():
    spec = build_xxz(6, **FIG_COUPLINGS)
    fam = OperatorFamily.from_text("X0 X1")
    ops = [op for _d, op in fam.members(4, 4)]
    dcs = []
    for scale in (0.1, 0.25, 0.5, 0.75, 1.0):
        bip = bipartition(spec, 4, j_ab_scale=scale)
        calc = HmfCalculator(bip, precision=P)
        table = deviation_table(calc.hmf(0.1672), bip.h_a, ops)
        dcs.append(fit_skin_depth(table, fam).d_c)
    spread = (max(dcs) - min(dcs)) / (sum(dcs) / len(dcs))
    _report(
        9,
        "d_c varies < 5% across boundary-coupling scales 0.1..1",
        spread < 0.05,
        f"spread {100 * spread:.2f}%",
    )


def test_criterion_10_truncation_error_scaling():
    spec = build_xxz(6, **FIG_COUPLINGS)
    bip = bipartition(spec, 4)
    hmf_calc = HmfCalculator(bip, precision=P)
    s_calc = SeriesCalculator(bip, precision=P)
    betas = [float(b) for b in np.geomspace(1e-4, 1e-2, 5)]
    ok = True
    slopes = []
    for K in (0, 1, 2):
        errs = [float(truncation_error(hmf_calc, s_calc, b, K)) for b in betas]
        slope, _ic, _r2 = least_squares(
            [math.log(b) for b in betas], [math.log(e) for e in errs]
        )
        slopes.append(slope)
        ok = ok and abs(slope - (K + 1)) <= 0.1
    _report(
        10,
        "truncation error scales as beta^{K+1} for K=0,1,2",
        ok,
        "slopes " + ", ".join(f"{s:.3f}" for s in slopes),
    )
