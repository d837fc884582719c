"""Asymptotic spectra of B^-1 A^T A and their free-probability transforms.

A coding ensemble enters the asymptotic theory only through the limiting
eigenvalue density rho of B^-1 A^T A.  This module holds the three built-in
densities (Marchenko-Pastur bulk for i.i.d. gaussian matrices, the
row-orthogonal two-atom spectrum, and a three-atom discrete spectrum) plus
user-supplied custom densities, and computes the Cauchy transform, its
functional inverse, the R-transform R(z) = Cinv(-z) - 1/z, the small-aspect
expansion coefficient Psi, and the integrals of R and Psi used by the
potential and by the infinite-section-size thresholds.

All models satisfy the power constraint in spectral form: the mean of rho
equals the aspect ratio alpha, i.e. rho = (1-alpha) delta_0 + alpha rho_supp
with rho_supp of mean 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

__all__ = [
    "SpectraError",
    "EnsembleKind",
    "SpectralModel",
    "gaussian_model",
    "row_orthogonal_model",
    "discrete_tri_model",
    "custom_model",
    "cauchy_transform",
    "cauchy_inverse",
    "r_transform",
    "r_transform_at_zero",
    "r_transform_integral",
    "psi",
    "psi_integral",
]

_QUAD_EPS = 1e-12


class SpectraError(ValueError):
    """Domain violation in a spectral-transform evaluation."""


class EnsembleKind(str, Enum):
    GAUSSIAN = "gaussian"
    ROW_ORTHOGONAL = "row-orthogonal"
    DISCRETE_TRI = "discrete"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SpectralModel:
    """Asymptotic spectrum of B^-1 A^T A for one ensemble at aspect ratio alpha.

    atoms is a list of (location, mass) point masses; continuous_density, when
    present, is a density on [support_lo, support_hi].  rho0_atoms is the
    alpha -> 0 limit of rho_supp (needed for Psi on custom models; built-in
    models carry it too so every model exposes the same surface).
    """

    kind: EnsembleKind
    alpha: float
    atoms: Tuple[Tuple[float, float], ...] = ()
    continuous_density: Optional[Callable[[float], float]] = None
    support_lo: float = 0.0
    support_hi: float = 0.0
    rho0_atoms: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise SpectraError(f"alpha must be in (0, 1], got {self.alpha}")
        total = self.atom_mass() + self.continuous_mass()
        if abs(total - 1.0) > 1e-8:
            raise SpectraError(f"spectral masses integrate to {total}, not 1")
        mean = self.mean()
        if abs(mean - self.alpha) > 1e-8:
            raise SpectraError(
                f"spectral mean {mean} violates the power constraint (alpha={self.alpha})"
            )

    # -- basic functionals ------------------------------------------------

    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atoms))

    def continuous_mass(self) -> float:
        if self.continuous_density is None:
            return 0.0
        val, _ = quad(self.continuous_density, self.support_lo, self.support_hi,
                      epsabs=_QUAD_EPS, epsrel=1e-11, limit=200)
        return float(val)

    def mean(self) -> float:
        mean = sum(loc * m for loc, m in self.atoms)
        if self.continuous_density is not None:
            val, _ = quad(lambda lam: lam * self.continuous_density(lam),
                          self.support_lo, self.support_hi,
                          epsabs=_QUAD_EPS, epsrel=1e-11, limit=200)
            mean += val
        return float(mean)

    def support_inf(self) -> float:
        """Infimum of the support of rho."""
        cands = [loc for loc, m in self.atoms if m > 0]
        if self.continuous_density is not None:
            cands.append(self.support_lo)
        return float(min(cands))


def gaussian_model(alpha: float) -> SpectralModel:
    """Marchenko-Pastur spectrum of an i.i.d. gaussian coding matrix.

    rho = (1-alpha) delta_0 + sqrt((lam - lam_-)(lam_+ - lam)) / (2 pi lam)
    on [lam_-, lam_+], lam_pm = (1 +- sqrt(alpha))^2.
    """
    if not 0.0 < alpha <= 1.0:
        raise SpectraError(f"alpha must be in (0, 1], got {alpha}")
    lam_minus = (1.0 - math.sqrt(alpha)) ** 2
    lam_plus = (1.0 + math.sqrt(alpha)) ** 2

    def bulk(lam: float) -> float:
        d = (lam - lam_minus) * (lam_plus - lam)
        if d <= 0.0:
            return 0.0
        return math.sqrt(d) / (2.0 * math.pi * lam)

    atoms = () if alpha >= 1.0 else ((0.0, 1.0 - alpha),)
    return SpectralModel(
        kind=EnsembleKind.GAUSSIAN,
        alpha=alpha,
        atoms=atoms,
        continuous_density=bulk,
        support_lo=lam_minus,
        support_hi=lam_plus,
        rho0_atoms=((1.0, 1.0),),
    )


def row_orthogonal_model(alpha: float) -> SpectralModel:
    """rho = (1-alpha) delta_0 + alpha delta_1 (rows of a Haar orthogonal matrix)."""
    atoms = ((1.0, alpha),) if alpha >= 1.0 else ((0.0, 1.0 - alpha), (1.0, alpha))
    return SpectralModel(
        kind=EnsembleKind.ROW_ORTHOGONAL,
        alpha=alpha,
        atoms=atoms,
        rho0_atoms=((1.0, 1.0),),
    )


def discrete_tri_model(alpha: float) -> SpectralModel:
    """rho = (1-alpha) delta_0 + (alpha/2) delta_{1/2} + (alpha/2) delta_{3/2}."""
    atoms = [(0.5, alpha / 2.0), (1.5, alpha / 2.0)]
    if alpha < 1.0:
        atoms.insert(0, (0.0, 1.0 - alpha))
    return SpectralModel(
        kind=EnsembleKind.DISCRETE_TRI,
        alpha=alpha,
        atoms=tuple(atoms),
        rho0_atoms=((0.5, 0.5), (1.5, 0.5)),
    )


def custom_model(
    alpha: float,
    atoms: Sequence[Tuple[float, float]],
    continuous_density: Optional[Callable[[float], float]] = None,
    support: Tuple[float, float] = (0.0, 0.0),
    rho0_atoms: Optional[Sequence[Tuple[float, float]]] = None,
) -> SpectralModel:
    if rho0_atoms is not None:
        mean0 = sum(loc * m for loc, m in rho0_atoms)
        if abs(mean0 - 1.0) > 1e-10:
            raise SpectraError(f"rho0 mean is {mean0}, must be exactly 1")
    return SpectralModel(
        kind=EnsembleKind.CUSTOM,
        alpha=alpha,
        atoms=tuple((float(l), float(m)) for l, m in atoms),
        continuous_density=continuous_density,
        support_lo=support[0],
        support_hi=support[1],
        rho0_atoms=None if rho0_atoms is None else tuple(rho0_atoms),
    )


# -- Cauchy transform and inverse -----------------------------------------


def cauchy_transform(model: SpectralModel, z: float) -> float:
    """C(z) = int rho(lam) / (lam - z) dlam for z strictly below the support."""
    inf_sup = model.support_inf()
    if z >= inf_sup:
        raise SpectraError(
            f"z={z} is not strictly below the support infimum {inf_sup}"
        )
    if model.kind is EnsembleKind.GAUSSIAN:
        return _cauchy_gaussian(model.alpha, z)
    val = sum(m / (loc - z) for loc, m in model.atoms)
    if model.continuous_density is not None:
        part, _ = quad(lambda lam: model.continuous_density(lam) / (lam - z),
                       model.support_lo, model.support_hi,
                       epsabs=_QUAD_EPS, epsrel=1e-11, limit=200)
        val += part
    return float(val)


def _cauchy_gaussian(alpha: float, z: float) -> float:
    # Closed form: C solves z y^2 + (z - alpha + 1) y + 1 = 0 on the branch
    # with y > 0 and y -> -1/z as z -> -inf.
    c = z - alpha + 1.0
    disc = c * c - 4.0 * z
    return (-c - math.sqrt(disc)) / (2.0 * z)


def cauchy_inverse(model: SpectralModel, y: float, tol_scale: float = 1e-12) -> float:
    """Solve C(z) = y on the monotone branch z < inf-support.

    Safeguarded bisection/Brent on an initial bracket [-1e12, inf_sup - 1e-12],
    expanded geometrically on the left if needed.  The result satisfies
    |C(z) - y| <= tol_scale * max(1, y).
    """
    if y <= 0.0:
        raise SpectraError(f"y={y} is outside the attainable range (0, inf)")
    inf_sup = model.support_inf()
    z_hi = inf_sup - 1e-12
    z_lo = -1e12
    f = lambda z: cauchy_transform(model, z) - y
    f_hi = f(z_hi)
    if f_hi < 0.0:
        hi_val = f_hi + y
        raise SpectraError(
            f"y={y} exceeds the attainable range (0, {hi_val}] near the support edge"
        )
    f_lo = f(z_lo)
    while f_lo > 0.0:
        z_lo *= 8.0
        if not math.isfinite(z_lo):
            raise SpectraError(f"no bracket found for y={y}")
        f_lo = f(z_lo)
    z = brentq(f, z_lo, z_hi, xtol=1e-14, rtol=8.9e-16, maxiter=300)
    # Polish by bisection until the residual criterion holds.
    tol = tol_scale * max(1.0, y)
    lo, hi = (z_lo, z) if f(z) > 0 else (z, z_hi)
    for _ in range(200):
        if abs(f(z)) <= tol:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        z = 0.5 * (lo + hi)
    return float(z)


# -- R-transform -----------------------------------------------------------


def r_transform(model: SpectralModel, z: float, *, force_numeric: bool = False) -> float:
    """R(z) = Cinv(-z) - 1/z for z < 0 (the paper's sign convention).

    Closed forms are used for the gaussian and row-orthogonal ensembles;
    other models go through cauchy_inverse.
    """
    if z >= 0.0:
        raise SpectraError(f"r_transform requires z < 0, got {z}")
    if not force_numeric:
        if model.kind is EnsembleKind.GAUSSIAN:
            return model.alpha / (1.0 - z)
        if model.kind is EnsembleKind.ROW_ORTHOGONAL:
            # stable rewrite of (1 + z + root)/(2z) - 1/z, which cancels
            # catastrophically as z -> 0-
            a = model.alpha
            root = math.sqrt((1.0 - z) ** 2 + 4.0 * a * z)
            return 2.0 * a / (root + 1.0 - z)
    if z > -1e-10:
        # R(z) = alpha + O(z); the generic inversion loses all digits here
        return model.alpha
    return cauchy_inverse(model, -z) - 1.0 / z


def r_transform_at_zero(model: SpectralModel) -> float:
    """R(0) = int lam rho(lam) dlam = alpha."""
    return model.alpha


def r_transform_integral(model: SpectralModel, a: float) -> float:
    """int_0^a R(-x) dx, relative error <= 1e-9."""
    if a < 0.0:
        raise SpectraError(f"upper limit must be >= 0, got {a}")
    if a == 0.0:
        return 0.0
    if model.kind is EnsembleKind.GAUSSIAN:
        return model.alpha * math.log1p(a)
    val, _ = quad(lambda x: r_transform(model, -x) if x > 0 else model.alpha,
                  0.0, a, epsabs=_QUAD_EPS, epsrel=1e-10, limit=200)
    return float(val)


# -- Psi: the small-alpha expansion coefficient ----------------------------


def psi(model: SpectralModel, z: float) -> float:
    """First-order coefficient of Cinv(-z) in alpha, for z <= 0.

    Closed forms for the built-in ensembles; custom models need rho0 and use
    Psi(z) z = E[1/(1 - z lam0)] - 1.
    """
    if z > 0.0:
        raise SpectraError(f"psi requires z <= 0, got {z}")
    if model.kind in (EnsembleKind.GAUSSIAN, EnsembleKind.ROW_ORTHOGONAL):
        return 1.0 / (1.0 - z)
    if model.kind is EnsembleKind.DISCRETE_TRI:
        return (4.0 - 3.0 * z) / ((z - 2.0) * (3.0 * z - 2.0))
    if model.rho0_atoms is None:
        raise SpectraError("custom model needs rho0_atoms to evaluate psi")
    if z == 0.0:
        # limit of (E[1/(1 - z lam0)] - 1)/z as z -> 0 is E[lam0] = 1
        return 1.0
    expect = sum(m / (1.0 - z * loc) for loc, m in model.rho0_atoms)
    return (expect - 1.0) / z


def psi_integral(model: SpectralModel, a: float) -> float:
    """int_0^a Psi(-u) du; closed-form antiderivatives for built-in models."""
    if a < 0.0:
        raise SpectraError(f"upper limit must be >= 0, got {a}")
    if a == 0.0:
        return 0.0
    if model.kind in (EnsembleKind.GAUSSIAN, EnsembleKind.ROW_ORTHOGONAL):
        return math.log1p(a)
    if model.kind is EnsembleKind.DISCRETE_TRI:
        # Psi(-u) = (4+3u)/((u+2)(3u+2)) = (1/2)/(u+2) + (3/2)/(3u+2)
        return 0.5 * math.log((a + 2.0) / 2.0) + 0.5 * math.log((3.0 * a + 2.0) / 2.0)
    val, _ = quad(lambda u: psi(model, -u), 0.0, a,
                  epsabs=_QUAD_EPS, epsrel=1e-10, limit=200)
    return float(val)
