"""meanforce: exact mean-force Hamiltonians of spin-1/2 chains.

Computes the effective Hamiltonian H*_A of a chain segment in a global
thermal state at extended precision, expands its deviation from the bare
H_A in the Pauli-string basis, and fits the resulting boundary-layer
structure (exponential decay with distance, skin-depth law, small-beta
power laws, selection rules, and the low-temperature entanglement-
Hamiltonian limit).
"""

__version__ = "0.1.0"

from .model import Bipartition, ModelSpec, bipartition, build_xxz, to_dense
from .pauli import PauliString, PhasedPauli, SignAssignment
from .hmf import (
    CoefficientTable,
    HmfCalculator,
    HmfResult,
    compute_hmf,
    deviation_table,
    entanglement_hamiltonian,
    rescaled_distance,
)
from .series import SeriesCalculator, k0_lower_bound, k0_numeric, truncation_error
from .fits import FitResult, OperatorFamily, fit_beta_exponent, fit_skin_depth, fit_skin_law
from .xlinalg import DenseOperator, kernel_available

__all__ = [
    "Bipartition",
    "CoefficientTable",
    "DenseOperator",
    "FitResult",
    "HmfCalculator",
    "HmfResult",
    "ModelSpec",
    "OperatorFamily",
    "PauliString",
    "PhasedPauli",
    "SeriesCalculator",
    "SignAssignment",
    "bipartition",
    "build_xxz",
    "compute_hmf",
    "deviation_table",
    "entanglement_hamiltonian",
    "fit_beta_exponent",
    "fit_skin_depth",
    "fit_skin_law",
    "k0_lower_bound",
    "k0_numeric",
    "kernel_available",
    "rescaled_distance",
    "to_dense",
    "truncation_error",
]
