"""State evolution for the VAMP decoder.

The matrix ensemble enters only through the effective-channel noise
Sigma(E)^2 = (B snr R(-snr E))^-1; the SE operator T(E) is the section MMSE
of a one-hot symbol through that scalar gaussian channel, estimated by
Monte Carlo with antithetic pairs and common random numbers (one frozen
noise batch per scan, so T is a deterministic smooth function of E within
a scan and threshold bisections see no MC jitter).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ._backend import kernels
from .spectra import (
    EnsembleKind,
    SpectralModel,
    discrete_tri_model,
    gaussian_model,
    r_transform,
    r_transform_at_zero,
    row_orthogonal_model,
)

__all__ = [
    "SeError",
    "SeParams",
    "SeTrajectory",
    "se_params",
    "sample_batch",
    "effective_sigma2",
    "se_operator_T",
    "se_operator_scan",
    "run_se",
    "asymptotic_ser",
]

_MODEL_BUILDERS = {
    EnsembleKind.GAUSSIAN: gaussian_model,
    EnsembleKind.ROW_ORTHOGONAL: row_orthogonal_model,
    EnsembleKind.DISCRETE_TRI: discrete_tri_model,
}


class SeError(ValueError):
    pass


@dataclass(frozen=True)
class SeParams:
    B: int
    snr: float
    R: float
    model: SpectralModel
    mc_samples: int = 100_000
    seed: int = 0
    max_iter: int = 200
    tol: float = 1e-10

    def __post_init__(self):
        if self.mc_samples < 1_000:
            raise SeError("mc_samples must be >= 1000")
        if not (0.0 < self.alpha <= 1.0):
            raise SeError(
                f"alpha = log2(B)/(R*B) = {self.alpha} outside (0, 1]; "
                f"R must be >= {math.log2(self.B) / self.B}"
            )

    @property
    def alpha(self) -> float:
        return math.log2(self.B) / (self.R * self.B)

    @property
    def e_max(self) -> float:
        return 1.0 - 1.0 / self.B


def se_params(kind: EnsembleKind | str, B: int, snr: float, R: float,
              mc_samples: int = 100_000, seed: int = 0,
              max_iter: int = 200, tol: float = 1e-10) -> SeParams:
    """Build SeParams with the spectral model of the requested ensemble at
    the aspect ratio implied by (B, R)."""
    kind = EnsembleKind(kind)
    alpha = math.log2(B) / (R * B)
    model = _MODEL_BUILDERS[kind](alpha)
    return SeParams(B=B, snr=snr, R=R, model=model,
                    mc_samples=mc_samples, seed=seed, max_iter=max_iter, tol=tol)


@dataclass
class SeTrajectory:
    es: List[float]
    converged: bool
    fixed_point: float
    stderr: float = 0.0


def sample_batch(params: SeParams, seed: Optional[int] = None) -> np.ndarray:
    """Frozen standard-normal batch of shape (mc_samples, B), antithetic
    pairs adjacent (row 2p+1 = -row 2p)."""
    rng = np.random.default_rng(params.seed if seed is None else seed)
    npairs = params.mc_samples // 2
    half = rng.standard_normal((npairs, params.B))
    z = np.empty((2 * npairs, params.B))
    z[0::2] = half
    z[1::2] = -half
    return z


def effective_sigma2(E: float, params: SeParams) -> float:
    """Sigma(E)^2 = (B snr R(-snr E))^-1; the E -> 0 limit uses R(0) = alpha."""
    if not 0.0 <= E <= 1.0:
        raise SeError(f"E must lie in [0, 1], got {E}")
    if E == 0.0:
        r = r_transform_at_zero(params.model)
    else:
        r = r_transform(params.model, -params.snr * E)
    return 1.0 / (params.B * params.snr * r)


def se_operator_T(E: float, params: SeParams,
                  batch: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """Monte Carlo estimate of T(E) with its standard error."""
    if E <= 0.0:
        return 0.0, 0.0  # noiseless-limit shortcut: g1 -> 1, no MC needed
    if batch is None:
        batch = sample_batch(params)
    sigma = math.sqrt(effective_sigma2(E, params))
    t, terr, *_ = kernels.channel_scan(batch, np.array([sigma]))
    return float(t[0]), float(terr[0])


def se_operator_scan(es: np.ndarray, params: SeParams,
                     batch: Optional[np.ndarray] = None):
    """T(E) over a grid with one shared batch; returns (values, stderrs)."""
    if batch is None:
        batch = sample_batch(params)
    es = np.asarray(es, dtype=np.float64)
    sigmas = np.array([math.sqrt(effective_sigma2(e, params)) if e > 0 else 0.0
                       for e in es])
    t, terr, *_ = kernels.channel_scan(batch, sigmas)
    return t, terr


def run_se(params: SeParams, batch: Optional[np.ndarray] = None,
           e0: Optional[float] = None) -> SeTrajectory:
    """Iterate E <- T(E) from e0 (default 1 - 1/B) until |change| < tol."""
    if batch is None:
        batch = sample_batch(params)
    e = params.e_max if e0 is None else float(e0)
    es = [e]
    err = 0.0
    converged = False
    for _ in range(params.max_iter):
        e_next, err = se_operator_T(e, params, batch)
        e_next = min(max(e_next, 0.0), params.e_max)
        es.append(e_next)
        if abs(e_next - e) < params.tol:
            converged = True
            e = e_next
            break
        e = e_next
    return SeTrajectory(es=es, converged=converged, fixed_point=e, stderr=err)


def asymptotic_ser(e_star: float, params: SeParams,
                   batch: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """Asymptotic section error rate at an SE fixed point: probability that
    the effective-channel posterior argmax misses the sent symbol."""
    if not 0.0 <= e_star <= params.e_max:
        raise SeError(f"E* must lie in [0, {params.e_max}], got {e_star}")
    if e_star <= 0.0:
        return 0.0, 0.0
    if batch is None:
        batch = sample_batch(params)
    sigma = math.sqrt(effective_sigma2(e_star, params))
    *_, ser, ser_err = kernels.channel_scan(batch, np.array([sigma]))
    return float(ser[0]), float(ser_err[0])
