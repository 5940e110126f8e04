"""Homodyne tomography: simulate data, reconstruct density matrices and Wigner functions."""

from ._qht import (
    DensityMatrix,
    Dataset,
    DomainError,
    Error,
    NumericError,
    __version__,
    coherent,
    estimate_dm,
    estimate_wigner,
    fock,
    hermite_fn,
    kernel,
    laguerre,
    quadrature_density,
    read_dataset,
    read_state,
    sample,
    select_tuning,
    thermal,
    verify,
    wigner,
)

__all__ = [
    "DensityMatrix",
    "Dataset",
    "DomainError",
    "Error",
    "NumericError",
    "coherent",
    "estimate_dm",
    "estimate_wigner",
    "fock",
    "hermite_fn",
    "kernel",
    "laguerre",
    "quadrature_density",
    "read_dataset",
    "read_state",
    "sample",
    "select_tuning",
    "thermal",
    "verify",
    "wigner",
]
