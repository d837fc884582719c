"""Sparse superposition codes over AWGN with a VAMP decoder and the
matching asymptotic theory (state evolution, replica potential, thresholds)
for rotational-invariant coding ensembles."""

from ._backend import backend_name
from .spectra import (
    EnsembleKind,
    SpectralModel,
    custom_model,
    discrete_tri_model,
    gaussian_model,
    row_orthogonal_model,
)

__version__ = "0.1.0"

__all__ = [
    "EnsembleKind",
    "SpectralModel",
    "backend_name",
    "custom_model",
    "discrete_tri_model",
    "gaussian_model",
    "row_orthogonal_model",
    "__version__",
]
