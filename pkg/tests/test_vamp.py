import numpy as np
import pytest

from ssvamp.codec import (hard_decision, sample_message, section_error_rate,
                          to_signal, transmit)
from ssvamp.operators import EnsembleSpec, sample_operator
from ssvamp.vamp import (VampConfig, VampError, decode, denoise_g1, init_state,
                         lmmse_g2, vamp_step)


def test_denoiser_uniform_input():
    L, B = 8, 4
    xhat, alpha = denoise_g1(np.zeros(L * B), 1.0, L, B)
    assert np.allclose(xhat, 0.25)
    # each component: g(1-g) = 3/16, averaged and divided by gamma
    assert alpha == pytest.approx(3.0 / 16.0)


def test_denoiser_low_temperature_is_argmax():
    L, B = 4, 4
    r = np.random.default_rng(0).normal(size=L * B)
    xhat, _ = denoise_g1(r, 1e-8, L, B)
    hard = to_signal(hard_decision(r, L, B))
    assert np.allclose(xhat, hard, atol=1e-10)


def test_denoiser_sections_sum_to_one():
    L, B = 16, 8
    r = np.random.default_rng(1).normal(size=L * B)
    xhat, _ = denoise_g1(r, 0.7, L, B)
    assert np.allclose(xhat.reshape(L, B).sum(axis=1), 1.0)


def test_denoiser_matches_finite_difference():
    # the reported divergence equals the mean softmax Jacobian diagonal
    # over gamma
    L, B = 3, 4
    rng = np.random.default_rng(2)
    r = rng.normal(size=L * B)
    gamma = 0.9
    _, alpha = denoise_g1(r, gamma, L, B)
    eps = 1e-6
    diag = []
    for i in range(L * B):
        rp, rm = r.copy(), r.copy()
        rp[i] += eps
        rm[i] -= eps
        xp, _ = denoise_g1(rp, gamma, L, B)
        xm, _ = denoise_g1(rm, gamma, L, B)
        diag.append((xp[i] - xm[i]) / (2 * eps))
    assert alpha == pytest.approx(np.mean(diag), rel=1e-5)


def test_lmmse_matches_explicit_inversion():
    spec = EnsembleSpec("gaussian", L=4, B=4, R=1.0, snr=15.0, seed=0)
    op = sample_operator(spec)
    N = spec.N
    A = np.column_stack([op.forward(np.eye(N)[:, j]) for j in range(N)])
    rng = np.random.default_rng(3)
    r = rng.normal(size=N)
    y = rng.normal(size=spec.M)
    gamma, snr = 0.8, 15.0
    xhat, alpha = lmmse_g2(r, gamma, op, y, snr)
    K = np.linalg.inv(snr * A.T @ A + gamma * np.eye(N))
    expect = K @ (snr * A.T @ y + gamma * r)
    assert np.linalg.norm(xhat - expect) <= 1e-10 * np.linalg.norm(expect)
    assert alpha == pytest.approx(gamma * np.trace(K) / N, rel=1e-10)


def test_init_state_prior_precision():
    st = init_state(8, 4, VampConfig())
    assert np.allclose(st.r1, 0.0)
    assert st.gamma1 == pytest.approx(1 - 0.25)
    assert init_state(8, 4, VampConfig(init_gamma1=2.0)).gamma1 == 2.0


def test_vamp_step_balanced_divergence_keeps_precision():
    # at zero input with B=2 and gamma1=2 the denoiser divergence is exactly
    # 1/2: softmax at temperature 1/2 has slope g(1-g)/temp = 1/2, so the
    # extrinsic precision passes through unchanged
    spec = EnsembleSpec("row-orthogonal", L=8, B=2, R=0.5, snr=15.0, seed=1)
    op = sample_operator(spec)
    y = np.zeros(spec.M)
    st = init_state(8, 2, VampConfig(init_gamma1=2.0))
    st2 = vamp_step(st, op, y, 15.0, VampConfig(init_gamma1=2.0))
    assert st2.alpha1 == pytest.approx(0.5)
    assert st2.gamma2 == pytest.approx(2.0)


def test_decode_noiseless_recovers_message():
    L, B = 256, 2
    spec = EnsembleSpec("row-orthogonal", L=L, B=B, R=0.5, snr=100.0, seed=4)
    op = sample_operator(spec)
    msg = sample_message(L, B, seed=5)
    x = to_signal(msg)
    out = transmit(op, x, np.inf, seed=6)
    res = decode(op, out.y, 100.0, L, B)
    assert section_error_rate(msg, hard_decision(res.xhat, L, B)) == 0.0
    assert res.converged


def test_decode_trajectory_starts_at_prior_error():
    L, B = 64, 4
    spec = EnsembleSpec("dct-proxy", L=L, B=B, R=1.0, snr=15.0, seed=7)
    op = sample_operator(spec)
    msg = sample_message(L, B, seed=8)
    out = transmit(op, to_signal(msg), 15.0, seed=9)
    res = decode(op, out.y, 15.0, L, B, truth=msg)
    assert res.mse_trajectory[0] == pytest.approx(1 - 1 / B)
    assert res.iterations == len(res.mse_trajectory) - 1


def test_decode_rejects_wrong_length():
    spec = EnsembleSpec("row-orthogonal", L=16, B=2, R=0.5, snr=15.0, seed=0)
    op = sample_operator(spec)
    with pytest.raises(VampError):
        decode(op, np.zeros(3), 15.0, 16, 2)


def test_damping_still_decodes():
    L, B = 128, 4
    spec = EnsembleSpec("dct-proxy", L=L, B=B, R=1.0, snr=15.0, seed=2)
    op = sample_operator(spec)
    msg = sample_message(L, B, seed=3)
    out = transmit(op, to_signal(msg), 15.0, seed=4)
    res = decode(op, out.y, 15.0, L, B, VampConfig(damping=0.7, max_iter=100))
    assert section_error_rate(msg, hard_decision(res.xhat, L, B)) <= 0.02
