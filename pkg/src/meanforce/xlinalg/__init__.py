from ._precision import DEFAULT_PRECISION, eps, tol, workprec
from .backend import active_backend, kernel_available
from .core import (
    DenseOperator,
    SpectralDecomposition,
    dump_matrix,
    func_hermitian,
    hermitian_eigen,
    load_matrix,
    partial_trace_B,
    reconstruct,
)

__all__ = [
    "DEFAULT_PRECISION",
    "DenseOperator",
    "SpectralDecomposition",
    "active_backend",
    "dump_matrix",
    "eps",
    "func_hermitian",
    "hermitian_eigen",
    "kernel_available",
    "load_matrix",
    "partial_trace_B",
    "reconstruct",
    "tol",
    "workprec",
]
