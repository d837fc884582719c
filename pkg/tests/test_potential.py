import math

import numpy as np
import pytest

from ssvamp.potential import (PotentialError, capacity, compute_thresholds,
                              find_maxima, phi_derivative, phi_tilde,
                              potential_phi, r_it_inf, r_it_threshold,
                              r_vamp_inf, spectral_criterion_gap)
from ssvamp.spectra import (discrete_tri_model, gaussian_model,
                            row_orthogonal_model)
from ssvamp.state_evolution import run_se, sample_batch, se_params

LN2 = math.log(2.0)


def test_capacity_values():
    assert capacity(15.0) == pytest.approx(2.0, abs=1e-12)
    assert capacity(1.0) == pytest.approx(0.5, abs=1e-12)
    assert capacity(3.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(PotentialError):
        capacity(0.0)


def test_potential_is_finite_with_uncertainty():
    p = se_params("gaussian", 4, 28.0, 1.4, mc_samples=50_000, seed=0)
    Z = sample_batch(p)
    for E in (1e-5, 0.1, 0.7):
        phi, err = potential_phi(E, p, Z)
        assert np.isfinite(phi)
        assert err > 0


def test_single_maximum_below_threshold_sits_at_low_error():
    p = se_params("gaussian", 4, 28.0, 1.3, mc_samples=50_000, seed=1)
    curve = find_maxima(p, 256, sample_batch(p))
    assert len(curve.maxima) == 1
    assert curve.maxima[0][0] < 0.01


def test_two_maxima_inside_the_hard_phase():
    # between the algorithmic and information-theoretic thresholds the
    # potential has a good and a bad maximum
    p = se_params("gaussian", 4, 28.0, 2.0, mc_samples=50_000, seed=1)
    curve = find_maxima(p, 512, sample_batch(p))
    assert len(curve.maxima) == 2
    assert curve.maxima[0][0] < 0.01 < curve.maxima[1][0]


def test_stationarity_at_fixed_point():
    # the derivative of the potential vanishes at the SE fixed point
    for kind, R in (("gaussian", 1.4), ("row-orthogonal", 1.5)):
        p = se_params(kind, 4, 28.0, R, mc_samples=50_000, seed=2)
        Z = sample_batch(p)
        traj = run_se(p, Z)
        e_star = max(traj.fixed_point, 1e-4)
        d, err = phi_derivative(e_star, p, Z)
        assert abs(d) <= 5 * max(err, 1e-8)


def test_threshold_ordering_and_no_gap_flag():
    th = compute_thresholds(2, 5.0, "row-orthogonal", mc_samples=20_000,
                            seed=0)
    assert th.r_vamp <= th.r_it + 1e-3
    assert th.r_it <= capacity(5.0) + 1e-3


def test_r_vamp_inf_closed_forms():
    snr = 15.0
    g = gaussian_model(0.5)
    assert r_vamp_inf(snr, g) == pytest.approx(15.0 / 16.0 / (2 * LN2),
                                               abs=1e-12)
    o = row_orthogonal_model(0.5)
    assert r_vamp_inf(snr, o) == r_vamp_inf(snr, g)
    d = discrete_tri_model(0.5)
    assert r_vamp_inf(snr, d) == pytest.approx(15.0 * (49.0 / 799.0) / (2 * LN2),
                                               rel=1e-9)


def test_r_it_inf_closed_forms():
    snr = 15.0
    assert r_it_inf(snr, gaussian_model(0.5)) == pytest.approx(2.0, abs=1e-9)
    assert r_it_inf(snr, row_orthogonal_model(0.5)) == pytest.approx(2.0,
                                                                    abs=1e-9)
    d = discrete_tri_model(0.5)
    expect = (0.5 * math.log(17.0 / 2.0) + 0.5 * math.log(47.0 / 2.0)) / (2 * LN2)
    assert r_it_inf(snr, d) == pytest.approx(expect, rel=1e-9)


def test_spectral_criterion():
    for model in (gaussian_model(0.5), row_orthogonal_model(0.5)):
        it_gap, vamp_gap = spectral_criterion_gap(15.0, model)
        assert abs(it_gap) <= 1e-9
        assert abs(vamp_gap) <= 1e-9
    it_gap, vamp_gap = spectral_criterion_gap(15.0, discrete_tri_model(0.5))
    assert it_gap == pytest.approx(2.0 - 1.9105, abs=5e-3)
    assert vamp_gap > 0


def test_phi_tilde_limits():
    # at E=0 the rescaled potential reduces to max(1, m/2) - m/2 with
    # m = snr Psi(0) / (R ln 2)
    model = gaussian_model(0.5)
    snr, R = 15.0, 1.5
    m = snr / (R * LN2)
    assert phi_tilde(0.0, snr, R, model) == pytest.approx(
        max(1.0, 0.5 * m) - 0.5 * m, abs=1e-12)
    with pytest.raises(PotentialError):
        phi_tilde(1.5, snr, R, model)


@pytest.mark.slow
def test_finite_b_potential_approaches_rescaled_limit():
    # Phi_B / ln B converges to the closed-form limit as B grows. The energy
    # term converges fast (its error is the O(alpha snr) transform
    # correction) but the entropy term near its condensation transition only
    # converges like log log B / log B, so the tight tolerance applies deep
    # in the condensed region and elsewhere we check the gap shrinks with B.
    snr, R = 15.0, 1.0
    gaps = {E: [] for E in (0.2, 0.5, 0.9)}
    for B in (2 ** 10, 2 ** 13, 2 ** 16):
        model = gaussian_model(math.log2(B) / (R * B))
        p = se_params("gaussian", B, snr, R, mc_samples=1_500, seed=3)
        Z = sample_batch(p)
        for E in gaps:
            phi, _ = potential_phi(E, p, Z)
            gaps[E].append(phi / math.log(B) - phi_tilde(E, snr, R, model))
    assert abs(gaps[0.2][-1]) <= 0.02
    for E in (0.5, 0.9):
        assert gaps[E][0] > gaps[E][1] > gaps[E][2] > 0
