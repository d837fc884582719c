"""Replica-symmetric potential, its large-section-size limit, and the
algorithmic / information-theoretic thresholds.

Phi_B(E) = S_B(Sigma(E)) - U_B(E) with the entropic term S_B estimated by
Monte Carlo in natural log units and the energy term
U_B(E) = (B/2) int_0^{snr E} R(-x) dx - E / (2 Sigma(E)^2) by quadrature.
Natural log is what makes the stationarity equivalence
d/dE Phi_B = 0  <=>  T(E) = E hold; the correspondence tests enforce it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from ._backend import kernels
from . import _kernels_py
from .spectra import (
    EnsembleKind,
    SpectralModel,
    psi,
    psi_integral,
    r_transform,
    r_transform_integral,
)
from .state_evolution import (
    SeParams,
    effective_sigma2,
    run_se,
    sample_batch,
    se_params,
)

__all__ = [
    "PotentialError",
    "PotentialCurve",
    "Thresholds",
    "potential_phi",
    "phi_scan",
    "find_maxima",
    "phi_derivative",
    "r_vamp_threshold",
    "r_it_threshold",
    "compute_thresholds",
    "phi_tilde",
    "r_vamp_inf",
    "r_it_inf",
    "capacity",
    "spectral_criterion_gap",
]

LN2 = math.log(2.0)


class PotentialError(ValueError):
    pass


@dataclass
class PotentialCurve:
    es: np.ndarray
    phis: np.ndarray
    stderrs: np.ndarray
    maxima: List[Tuple[float, float]] = field(default_factory=list)  # (E, phi), by E


@dataclass
class Thresholds:
    r_vamp: float
    r_it: float
    B: float  # section size, or math.inf
    snr: float
    kind: str
    no_gap: bool = False
    diagnostics: dict = field(default_factory=dict)


# -- finite-B potential ----------------------------------------------------


def _u_energy(E: float, params: SeParams) -> float:
    if E == 0.0:
        return 0.0
    sig2 = effective_sigma2(E, params)
    return (params.B / 2.0) * r_transform_integral(params.model, params.snr * E) \
        - E / (2.0 * sig2)


def potential_phi(E: float, params: SeParams,
                  batch: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """Phi_B(E) and the MC standard error of its entropic part."""
    if not (0.0 < E <= params.e_max):
        raise PotentialError(f"E must lie in (0, {params.e_max}], got {E}")
    if batch is None:
        batch = sample_batch(params)
    sigma = math.sqrt(effective_sigma2(E, params))
    _, _, s, serr, _, _ = kernels.channel_scan(batch, np.array([sigma]))
    return float(s[0] - _u_energy(E, params)), float(serr[0])


def phi_scan(es: np.ndarray, params: SeParams,
             batch: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Phi_B over an ascending grid with one shared MC batch.

    The energy integral is accumulated segment by segment so the scan does
    one short quadrature per grid interval instead of one from zero."""
    if batch is None:
        batch = sample_batch(params)
    es = np.asarray(es, dtype=np.float64)
    sigmas = np.sqrt([effective_sigma2(e, params) for e in es])
    _, _, s, serr, _, _ = kernels.channel_scan(batch, sigmas)

    model, snr, B = params.model, params.snr, params.B
    rint = np.empty(es.size)
    acc = r_transform_integral(model, snr * es[0])
    rint[0] = acc
    for i in range(1, es.size):
        seg, _ = quad(lambda x: r_transform(model, -x), snr * es[i - 1], snr * es[i],
                      epsabs=1e-12, epsrel=1e-10, limit=100)
        acc += seg
        rint[i] = acc
    u = (B / 2.0) * rint - es / (2.0 * np.array([effective_sigma2(e, params) for e in es]))
    return s - u, serr


def _e_grid(params: SeParams, grid_size: int) -> np.ndarray:
    """Geometric spacing near 0 (down to 1e-6) plus uniform spacing up to
    1 - 1/B; the low-E maximum sits at very small E at high snr."""
    e_max = params.e_max
    n_geo = grid_size // 2
    geo = np.geomspace(1e-6, 0.1 * e_max, n_geo)
    uni = np.linspace(0.1 * e_max, e_max, grid_size - n_geo + 1)[1:]
    return np.concatenate([geo, uni])


def find_maxima(params: SeParams, grid_size: int = 512,
                batch: Optional[np.ndarray] = None) -> PotentialCurve:
    """Grid scan plus golden-section refinement of each bracketed maximum.

    A local maximum counts only if it rises more than 3 MC standard errors
    above the dip separating it from its neighbour, which filters phantom
    maxima from MC noise; at most two are returned (a warning fires if more
    survive the filter).
    """
    if batch is None:
        batch = sample_batch(params)
    es = _e_grid(params, grid_size)
    phis, errs = phi_scan(es, params, batch)
    noise = 3.0 * float(np.median(errs))

    cand = []
    n = es.size
    for i in range(n):
        left = phis[i - 1] if i > 0 else -np.inf
        right = phis[i + 1] if i < n - 1 else -np.inf
        if phis[i] >= left and phis[i] >= right and (phis[i] > left or phis[i] > right):
            cand.append(i)

    # drop maxima not separated by a significant dip from a higher neighbour
    changed = True
    while changed and len(cand) > 1:
        changed = False
        for a, b in zip(cand[:-1], cand[1:]):
            dip = phis[a + 1:b].min() if b > a + 1 else min(phis[a], phis[b])
            lower = a if phis[a] <= phis[b] else b
            if min(phis[a], phis[b]) - dip <= noise:
                cand.remove(lower)
                changed = True
                break

    if len(cand) > 2:
        warnings.warn(f"{len(cand)} local maxima detected above noise; keeping the two largest")
        cand = sorted(sorted(cand, key=lambda i: phis[i])[-2:])

    maxima = []
    for i in cand:
        lo = es[i - 1] if i > 0 else es[0]
        hi = es[i + 1] if i < n - 1 else es[-1]
        if hi > lo:
            res = minimize_scalar(
                lambda e: -potential_phi(e, params, batch)[0],
                bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-8},
            )
            maxima.append((float(res.x), float(-res.fun)))
        else:
            maxima.append((float(es[i]), float(phis[i])))
    maxima.sort(key=lambda t: t[0])
    return PotentialCurve(es=es, phis=phis, stderrs=errs, maxima=maxima)


def phi_derivative(E: float, params: SeParams, batch: Optional[np.ndarray] = None,
                   h: Optional[float] = None) -> Tuple[float, float]:
    """Central difference of Phi_B with a common-random-number standard
    error (per-sample entropic differences share the frozen batch)."""
    if batch is None:
        batch = sample_batch(params)
    if h is None:
        h = max(1e-6, 0.05 * E)
    h = min(h, E * 0.5, (params.e_max - E) * 0.5 if E < params.e_max else h)
    sig_p = math.sqrt(effective_sigma2(E + h, params))
    sig_m = math.sqrt(effective_sigma2(E - h, params))
    _, s_p, _ = _kernels_py.channel_samples(batch, sig_p)
    _, s_m, _ = _kernels_py.channel_samples(batch, sig_m)
    ds = (s_p - s_m).reshape(-1, 2).mean(axis=1) / (2.0 * h)
    du = (_u_energy(E + h, params) - _u_energy(E - h, params)) / (2.0 * h)
    deriv = float(ds.mean() - du)
    stderr = float(ds.std() / math.sqrt(ds.size))
    return deriv, stderr


# -- thresholds at finite B ------------------------------------------------


def _bisect_rate(predicate, lo: float, hi: float, tol: float, history: list) -> float:
    p_lo, p_hi = predicate(lo), predicate(hi)
    history.append((lo, p_lo))
    history.append((hi, p_hi))
    if p_lo and p_hi:
        # the predicate holds all the way to capacity; report the upper end
        return hi
    if not p_lo:
        raise PotentialError(
            f"bisection bracket failure: predicate({lo})={p_lo}, predicate({hi})={p_hi}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p = predicate(mid)
        history.append((mid, p))
        if p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _rate_floor(B: int) -> float:
    # alpha = log2(B)/(R B) <= 1 requires R >= log2(B)/B
    return math.log2(B) / B * (1.0 + 1e-9)


def r_vamp_threshold(B: int, snr: float, kind: EnsembleKind | str,
                     tol: float = 1e-3, mc_samples: int = 100_000,
                     seed: int = 0, grid_size: int = 512,
                     history: Optional[list] = None) -> float:
    """Highest rate at which SE reaches the low-E fixed point and the
    potential has a single maximum; bisection on [0.1, capacity]."""
    kind = EnsembleKind(kind)
    lo = max(0.1, _rate_floor(B))
    hi = capacity(snr)
    hist = history if history is not None else []
    batch_holder = {}

    def predicate(R: float) -> bool:
        params = se_params(kind, B, snr, R, mc_samples=mc_samples, seed=seed)
        if "z" not in batch_holder:
            batch_holder["z"] = sample_batch(params)
        batch = batch_holder["z"]
        curve = find_maxima(params, grid_size, batch)
        if len(curve.maxima) != 1:
            return False
        e_top = curve.maxima[0][0]
        if e_top >= 0.5 * params.e_max:
            # the lone maximum is the high-error branch; decoding fails
            return False
        traj = run_se(params, batch)
        return traj.fixed_point <= e_top + 1e-3

    return _bisect_rate(predicate, lo, hi, tol, hist)


def r_it_threshold(B: int, snr: float, kind: EnsembleKind | str,
                   tol: float = 1e-3, mc_samples: int = 100_000,
                   seed: int = 0, grid_size: int = 512,
                   history: Optional[list] = None) -> Tuple[float, bool]:
    """Rate at which the two maxima of Phi_B exchange dominance.

    Returns (r_it, no_gap); when no two-maxima window exists the algorithmic
    threshold is returned with no_gap=True.
    """
    kind = EnsembleKind(kind)
    lo = max(0.1, _rate_floor(B))
    hi = capacity(snr)
    hist = history if history is not None else []
    batch_holder = {}
    seen_two = {"flag": False}

    def good_is_global(R: float) -> bool:
        params = se_params(kind, B, snr, R, mc_samples=mc_samples, seed=seed)
        if "z" not in batch_holder:
            batch_holder["z"] = sample_batch(params)
        curve = find_maxima(params, grid_size, batch_holder["z"])
        if len(curve.maxima) == 1:
            # classify the lone maximum by position: low-E = good solution
            return curve.maxima[0][0] < 0.5 * params.e_max
        seen_two["flag"] = True
        (_, phi_good), (_, phi_bad) = curve.maxima[0], curve.maxima[-1]
        return phi_good >= phi_bad

    r_it = _bisect_rate(good_is_global, lo, hi, tol, hist)
    if not seen_two["flag"]:
        r_vamp = r_vamp_threshold(B, snr, kind, tol, mc_samples, seed, grid_size)
        return r_vamp, True
    return r_it, False


def compute_thresholds(B: int, snr: float, kind: EnsembleKind | str,
                       tol: float = 1e-3, mc_samples: int = 100_000,
                       seed: int = 0, grid_size: int = 512) -> Thresholds:
    kind = EnsembleKind(kind)
    hist_v, hist_i = [], []
    r_vamp = r_vamp_threshold(B, snr, kind, tol, mc_samples, seed, grid_size, hist_v)
    r_it, no_gap = r_it_threshold(B, snr, kind, tol, mc_samples, seed, grid_size, hist_i)
    r_it = max(r_it, r_vamp)  # algorithmic never exceeds information-theoretic
    return Thresholds(r_vamp=r_vamp, r_it=r_it, B=B, snr=snr, kind=kind.value,
                      no_gap=no_gap,
                      diagnostics={"r_vamp_history": hist_v, "r_it_history": hist_i})


# -- large section size limit ---------------------------------------------


def capacity(snr: float) -> float:
    """Shannon capacity of the AWGN channel, (1/2) log2(1 + snr)."""
    if snr <= 0:
        raise PotentialError(f"snr must be positive, got {snr}")
    return 0.5 * math.log2(1.0 + snr)


def phi_tilde(E: float, snr: float, R: float, model: SpectralModel) -> float:
    """Rescaled B -> infinity potential (closed form, no MC)."""
    if not 0.0 <= E <= 1.0:
        raise PotentialError(f"E must lie in [0, 1], got {E}")
    m = snr * psi(model, -snr * E) / (R * LN2)  # 1 / Sigma_tilde(E)^2
    return max(1.0, 0.5 * m) - (1.0 - E) * 0.5 * m \
        - psi_integral(model, snr * E) / (2.0 * R * LN2)


def r_vamp_inf(snr: float, model: SpectralModel) -> float:
    """B -> infinity algorithmic threshold, snr Psi(-snr) / (2 ln 2)."""
    return snr * psi(model, -snr) / (2.0 * LN2)


def r_it_inf(snr: float, model: SpectralModel) -> float:
    """B -> infinity information-theoretic threshold,
    int_0^snr Psi(-u) du / (2 ln 2)."""
    return psi_integral(model, snr) / (2.0 * LN2)


def spectral_criterion_gap(snr: float, model: SpectralModel) -> Tuple[float, float]:
    """(C - R_IT(inf), snr/(2(1+snr)ln2) - R_VAMP(inf)); both are zero iff
    all nonzero eigenvalues concentrate at 1 (rho_0 = delta_1)."""
    it_deficit = capacity(snr) - r_it_inf(snr, model)
    vamp_deficit = snr / (2.0 * (1.0 + snr) * LN2) - r_vamp_inf(snr, model)
    return it_deficit, vamp_deficit
