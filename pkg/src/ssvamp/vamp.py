"""VAMP decoder for sparse superposition codes.

Two-stage iteration: a section-wise posterior-mean denoiser (softmax under
the one-hot prior) and an LMMSE stage through the operator's resolvent,
with extrinsic (Onsager) corrections in between.

Convention note: the gamma_1/gamma_2 messages carried by the iteration are
precisions, which makes the extrinsic updates
    r_2 = (xhat_1 - alpha_1 r_1) / (1 - alpha_1),
    gamma_2 = gamma_1 (1 - alpha_1) / alpha_1
(and their mirror) exact for both stages.  The denoiser itself is a softmax
at temperature 1/gamma_1 (the variance of its effective input channel); the
standalone denoise_g1 below takes that temperature directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ._backend import kernels
from .codec import Message, hard_decision, mse_per_section, section_error_rate, to_signal
from .operators import CodingOperator

__all__ = [
    "VampError",
    "VampConfig",
    "VampState",
    "DecodeResult",
    "denoise_g1",
    "lmmse_g2",
    "vamp_step",
    "decode",
]


class VampError(ValueError):
    pass


@dataclass
class VampConfig:
    max_iter: int = 50
    tol: float = 1e-8
    gamma_clamp: Tuple[float, float] = (1e-11, 1e11)
    alpha_clamp: Tuple[float, float] = (1e-11, 1.0 - 1e-11)
    damping: float = 1.0  # 1 = no damping
    init_gamma1: Optional[float] = None  # default: prior variance 1 - 1/B

    def __post_init__(self):
        if self.max_iter < 1:
            raise VampError("max_iter must be >= 1")
        if not (0.0 < self.damping <= 1.0):
            raise VampError("damping must lie in (0, 1]")
        for lo, hi in (self.gamma_clamp, self.alpha_clamp):
            if not lo < hi:
                raise VampError("clamp bounds must be ordered")


@dataclass
class VampState:
    r1: np.ndarray
    gamma1: float
    r2: Optional[np.ndarray] = None
    gamma2: float = 0.0
    xhat1: Optional[np.ndarray] = None
    xhat2: Optional[np.ndarray] = None
    alpha1: float = 0.0
    alpha2: float = 0.0
    iteration: int = 0
    gamma_clamped: bool = False
    prev_gamma_clamped: bool = False
    unstable: bool = False


@dataclass
class DecodeResult:
    xhat: np.ndarray
    mse_trajectory: List[float]
    ser_trajectory: List[float]
    iterations: int
    converged: bool
    unstable: bool
    diagnostics: List[dict] = field(default_factory=list)


def denoise_g1(r: np.ndarray, gamma: float, L: int, B: int,
               alpha_clamp: Tuple[float, float] = (1e-11, 1.0 - 1e-11
               )) -> Tuple[np.ndarray, float]:
    """Section-wise softmax denoiser at temperature gamma.

    [g1(r, gamma)]_i = exp(r_i/gamma) / sum_{j in section} exp(r_j/gamma),
    computed with max-subtraction.  Returns (xhat, alpha1) with
    alpha1 = gamma^-1 N^-1 sum_i g_i (1 - g_i), clamped.
    """
    if gamma <= 0:
        raise VampError(f"gamma must be positive, got {gamma}")
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (L * B,):
        raise VampError(f"expected vector of length {L * B}, got {r.shape}")
    xhat, deriv_sum = kernels.section_softmax(r, gamma, B)
    alpha1 = deriv_sum / (gamma * L * B)
    return xhat, float(np.clip(alpha1, *alpha_clamp))


def lmmse_g2(r: np.ndarray, gamma: float, op: CodingOperator, y: np.ndarray,
             snr: float, alpha_clamp: Tuple[float, float] = (1e-11, 1.0 - 1e-11),
             aty: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """LMMSE stage: xhat = (snr A^T A + gamma I)^-1 (snr A^T y + gamma r),
    alpha2 = gamma N^-1 Tr[(snr A^T A + gamma I)^-1], clamped."""
    if gamma <= 0:
        raise VampError(f"gamma must be positive, got {gamma}")
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (op.spec.N,):
        raise VampError(f"expected vector of length {op.spec.N}, got {r.shape}")
    if aty is None:
        aty = op.adjoint(np.asarray(y, dtype=np.float64))
    xhat = op.resolvent_solve(snr * aty + gamma * r, gamma, snr)
    alpha2 = op.resolvent_trace(gamma, snr)
    return xhat, float(np.clip(alpha2, *alpha_clamp))


def init_state(L: int, B: int, config: VampConfig) -> VampState:
    gamma1 = config.init_gamma1 if config.init_gamma1 is not None else 1.0 - 1.0 / B
    return VampState(r1=np.zeros(L * B), gamma1=gamma1)


def vamp_step(state: VampState, op: CodingOperator, y: np.ndarray, snr: float,
              config: VampConfig, aty: Optional[np.ndarray] = None) -> VampState:
    """One full iteration: denoise -> extrinsic -> LMMSE -> extrinsic."""
    L, B = op.spec.L, op.spec.B
    glo, ghi = config.gamma_clamp
    clamped = False

    xhat1, alpha1 = denoise_g1(state.r1, 1.0 / state.gamma1, L, B, config.alpha_clamp)
    r2 = (xhat1 - alpha1 * state.r1) / (1.0 - alpha1)
    gamma2 = state.gamma1 * (1.0 - alpha1) / alpha1
    if not glo <= gamma2 <= ghi:
        gamma2, clamped = float(np.clip(gamma2, glo, ghi)), True

    xhat2, alpha2 = lmmse_g2(r2, gamma2, op, y, snr, config.alpha_clamp, aty)
    r1_new = (xhat2 - alpha2 * r2) / (1.0 - alpha2)
    gamma1_new = gamma2 * (1.0 - alpha2) / alpha2
    if not glo <= gamma1_new <= ghi:
        gamma1_new, clamped = float(np.clip(gamma1_new, glo, ghi)), True

    d = config.damping
    if d < 1.0 and state.xhat1 is not None:
        r1_new = d * r1_new + (1.0 - d) * state.r1
        gamma1_new = d * gamma1_new + (1.0 - d) * state.gamma1

    return VampState(
        r1=r1_new, gamma1=gamma1_new, r2=r2, gamma2=gamma2,
        xhat1=xhat1, xhat2=xhat2, alpha1=alpha1, alpha2=alpha2,
        iteration=state.iteration + 1,
        gamma_clamped=clamped, prev_gamma_clamped=state.gamma_clamped,
        unstable=state.unstable or (clamped and state.gamma_clamped),
    )


def decode(op: CodingOperator, y: np.ndarray, snr: float, L: int, B: int,
           config: Optional[VampConfig] = None,
           truth: Optional[Message] = None) -> DecodeResult:
    """Run the decoder until convergence or max_iter.

    The trajectory index k holds the error of xhat_{1,k}; index 0 is the
    prior-mean estimate, so mse_trajectory[0] = 1 - 1/B, matching the state
    evolution initialization.
    """
    config = config or VampConfig()
    if y.shape != (op.spec.M,):
        raise VampError(f"expected channel output of length {op.spec.M}, got {y.shape}")
    x_true = to_signal(truth) if truth is not None else None
    aty = op.adjoint(np.asarray(y, dtype=np.float64))

    state = init_state(L, B, config)
    mse_traj: List[float] = []
    ser_traj: List[float] = []
    diags: List[dict] = []
    prev_xhat = None
    converged = False

    for k in range(config.max_iter + 1):
        # vamp_step computes xhat_{1,k} from the pre-step r1 as its first act
        state = vamp_step(state, op, y, snr, config, aty)
        xhat = state.xhat1
        if truth is not None:
            mse_traj.append(mse_per_section(x_true, xhat, L))
            ser_traj.append(section_error_rate(truth, hard_decision(xhat, L, B)))
            delta = abs(mse_traj[-1] - mse_traj[-2]) if len(mse_traj) > 1 else np.inf
        else:
            delta = (float(np.sum((xhat - prev_xhat) ** 2) / L)
                     if prev_xhat is not None else np.inf)
        prev_xhat = xhat
        diags.append({
            "iteration": k,
            "gamma1": state.gamma1, "gamma2": state.gamma2,
            "alpha1": state.alpha1, "alpha2": state.alpha2,
            "gamma_clamped": state.gamma_clamped,
        })
        if delta < config.tol:
            converged = True
            break

    return DecodeResult(
        xhat=prev_xhat,
        mse_trajectory=mse_traj,
        ser_trajectory=ser_traj,
        iterations=len(diags) - 1,
        converged=converged,
        unstable=state.unstable,
        diagnostics=diags,
    )
