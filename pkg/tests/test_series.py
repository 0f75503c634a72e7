"""Small-beta expansion: oracle agreement, detection orders, truncation."""
from __future__ import annotations

import gmpy2
import pytest

from meanforce.errors import UsageError
from meanforce.hmf import HmfCalculator
from meanforce.model import bipartition, build_xxz
from meanforce.pauli import PauliString, conjecture_k0, enumerate_pauli
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

BIPARTITIONS = [
    (4, 2, 0.0, 0.0),  # field-free, symmetric cut
    (5, 3, 0.0, 0.0),  # field-free, asymmetric cut
    (5, 3, 0.2, 0.2),  # both fields on
]


@pytest.mark.parametrize("L,L_A,hx,hz", BIPARTITIONS)
def test_composition_sum_matches_closed_forms(L, L_A, hx, hz):
    spec = build_xxz(L, J=1.0, delta=0.95, hx=hx, hz=hz)
    bip = bipartition(spec, L_A)
    calc = SeriesCalculator(bip, precision=P)
    with workprec(P):
        for k in (0, 1):
            got = calc.series_coefficient(k).matrix
            want = closed_form_coefficient(bip, k, P)
            scale = max(float(want.frobenius()), 1.0)
            assert float((got - want).frobenius()) <= float(tol(P, 30)) * scale
        if hx == 0 and hz == 0:
            # the k=2 closed form is field-free and fixed up to an identity
            got2 = traceless_part(calc.series_coefficient(2).matrix)
            want2 = traceless_part(closed_form_coefficient(bip, 2, P))
            scale = max(float(want2.frobenius()), 1.0)
            assert float((got2 - want2).frobenius()) <= float(tol(P, 30)) * scale


def test_field_free_first_order_is_identity_multiple():
    """Without fields the bath-boundary cross term vanishes, leaving
    -(2 J^2 + delta^2)/2 times the identity for a single crossing bond."""
    spec = build_xxz(4, J=1.0, delta=0.95)
    bip = bipartition(spec, 2)
    c1 = SeriesCalculator(bip, precision=P).series_coefficient(1).matrix
    with workprec(P):
        expect = -(2 * gmpy2.mpfr(1.0) ** 2 + gmpy2.mpfr(0.95) ** 2) / 2
        off_identity = c1.add_scaled_identity(-expect)
        assert float(off_identity.frobenius()) <= float(tol(P, 30))


def test_coefficients_hermitian_small_defect(small_chain):
    _spec, bip = small_chain
    calc = SeriesCalculator(bip, precision=P)
    for k in range(5):
        c = calc.series_coefficient(k)
        with workprec(P):
            assert float(c.matrix.hermiticity_defect()) == 0.0
            assert float(c.hermiticity_defect) <= float(
                tol(P, 24) * max(c.matrix.frobenius(), gmpy2.mpfr(1))
            )


def test_series_matches_exact_hmf(small_chain):
    """Partial sums converge to the exact H* as beta^{K+1}."""
    _spec, bip = small_chain
    hmf_calc = HmfCalculator(bip, precision=P)
    s_calc = SeriesCalculator(bip, precision=P)
    errs = {
        K: float(truncation_error(hmf_calc, s_calc, 1e-3, K)) for K in (0, 1, 2)
    }
    assert errs[1] < errs[0] * 1e-2
    assert errs[2] < errs[1] * 1e-2


def test_order_guard_and_negative_order(small_chain):
    _spec, bip = small_chain
    calc = SeriesCalculator(bip, precision=P, k_guard=3)
    with pytest.raises(UsageError):
        calc.series_coefficient(-1)
    with pytest.raises(UsageError):
        calc.series_coefficient(4)
    with pytest.raises(UsageError):
        closed_form_coefficient(bip, 3, P)


def test_k0_lower_bound_values():
    assert k0_lower_bound(PauliString.from_text("X4", 4), 4) == 1  # d=0, n=1
    assert k0_lower_bound(PauliString.from_text("X1", 4), 4) == 7  # d=3, n=1
    assert k0_lower_bound(PauliString.from_text("X3 X4", 4), 4) == 2  # d=1, n=2
    with pytest.raises(UsageError):
        k0_lower_bound(PauliString.identity(4), 4)


def test_k0_numeric_respects_bound_and_conjecture(small_chain):
    spec, bip = small_chain
    calc = SeriesCalculator(bip, precision=P)
    coeffs = [calc.series_coefficient(k) for k in range(7)]
    ops = enumerate_pauli(3, 1) + enumerate_pauli(3, 2)
    tables = {
        c.order: series_deviation_table(c, bip.h_a, ops) for c in coeffs
    }
    cut = default_k0_tol(coeffs)
    terms = [s for _c, s in spec.terms]
    for O in ops:
        k0 = k0_numeric(tables, O, cut)
        bound = k0_lower_bound(O, 3)
        if k0 is not None:
            assert k0 >= bound
            # a detected order implies the split predicate admits it
            assert conjecture_k0(terms, PauliString(O.factors, 5), 7, 3) <= k0
    # spot checks: boundary bond deviations start exactly at the bound
    assert k0_numeric(tables, PauliString.from_text("X2 X3", 3), cut) == 2
    assert k0_numeric(tables, PauliString.from_text("Z3", 3), cut) == 1


def test_truncation_error_shrinks_with_beta(small_chain):
    _spec, bip = small_chain
    hmf_calc = HmfCalculator(bip, precision=P)
    s_calc = SeriesCalculator(bip, precision=P)
    e_large = float(truncation_error(hmf_calc, s_calc, 1e-2, 1))
    e_small = float(truncation_error(hmf_calc, s_calc, 1e-3, 1))
    # order-1 truncation scales as beta^2
    ratio = e_large / e_small
    assert 50 < ratio < 200
