"""Shared fixtures; expensive spectral data is session-scoped."""
from __future__ import annotations

import pytest

from meanforce.hmf import HmfCalculator
from meanforce.model import bipartition, build_xxz

PRECISION = 106


@pytest.fixture(scope="session")
def small_chain():
    """L=5 XXZ with a z field, split at L_A=3; the unit-test workhorse."""
    spec = build_xxz(5, J=1.0, delta=0.95, hx=0.0, hz=0.2)
    return spec, bipartition(spec, 3)


@pytest.fixture(scope="session")
def small_calc(small_chain):
    _spec, bip = small_chain
    return HmfCalculator(bip, precision=PRECISION)
