import numpy as np
import pytest

from ssvamp.codec import (CodecError, Message, hard_decision, mse_per_section,
                          sample_message, section_error_rate, to_signal,
                          transmit)
from ssvamp.operators import EnsembleSpec, sample_operator


def test_sample_message_deterministic():
    a = sample_message(32, 4, seed=9)
    b = sample_message(32, 4, seed=9)
    assert np.array_equal(a.indices, b.indices)
    assert a.L == 32
    assert a.indices.min() >= 0 and a.indices.max() < 4


def test_message_validation():
    with pytest.raises(CodecError):
        Message(indices=np.array([0, 4]), B=4)
    with pytest.raises(CodecError):
        Message(indices=np.array([-1]), B=4)


def test_to_signal_one_hot():
    msg = Message(indices=np.array([1, 0, 3]), B=4)
    x = to_signal(msg)
    assert x.shape == (12,)
    assert x.sum() == 3
    assert x[1] == 1 and x[4] == 1 and x[11] == 1


def test_transmit_noiseless_matches_forward():
    spec = EnsembleSpec("row-orthogonal", L=32, B=4, R=1.0, snr=15.0, seed=0)
    op = sample_operator(spec)
    x = to_signal(sample_message(32, 4, seed=1))
    out = transmit(op, x, np.inf, seed=2)
    assert np.allclose(out.y, op.forward(x))


def test_transmit_noise_scale():
    spec = EnsembleSpec("row-orthogonal", L=512, B=4, R=1.0, snr=4.0, seed=0)
    op = sample_operator(spec)
    x = to_signal(sample_message(512, 4, seed=1))
    out = transmit(op, x, 4.0, seed=2)
    noise = out.y - op.forward(x)
    assert noise.var() == pytest.approx(0.25, rel=0.15)


def test_hard_decision_and_ser():
    xhat = np.array([0.1, 0.9, 0.0, 0.0,
                     0.3, 0.3, 0.3, 0.4])
    est = hard_decision(xhat, 2, 4)
    assert list(est.indices) == [1, 3]
    truth = Message(indices=np.array([1, 0]), B=4)
    assert section_error_rate(truth, est) == 0.5


def test_hard_decision_tie_breaks_low():
    est = hard_decision(np.array([0.5, 0.5]), 1, 2)
    assert est.indices[0] == 0


def test_mse_per_section():
    msg = Message(indices=np.array([0, 1]), B=2)
    x = to_signal(msg)
    assert mse_per_section(x, x, 2) == 0.0
    assert mse_per_section(x, np.zeros_like(x), 2) == pytest.approx(1.0)
