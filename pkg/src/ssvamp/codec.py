"""Message model for sparse superposition codes: sampling, one-hot signals,
the AWGN channel, hard decisions, and the two error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import CodingOperator

__all__ = [
    "CodecError",
    "Message",
    "ChannelOutput",
    "sample_message",
    "to_signal",
    "transmit",
    "hard_decision",
    "section_error_rate",
    "mse_per_section",
]


class CodecError(ValueError):
    pass


@dataclass(frozen=True)
class Message:
    """L section indices, each in [0, B)."""

    indices: np.ndarray
    B: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or idx.size < 1:
            raise CodecError("message must be a non-empty vector of indices")
        if idx.min() < 0 or idx.max() >= self.B:
            raise CodecError(f"section indices must lie in [0, {self.B})")

    @property
    def L(self) -> int:
        return self.indices.size

    def __eq__(self, other):
        return self.B == other.B and np.array_equal(self.indices, other.indices)


@dataclass(frozen=True)
class ChannelOutput:
    y: np.ndarray
    snr: float


def sample_message(L: int, B: int, seed: int) -> Message:
    if L < 1 or B < 2:
        raise CodecError(f"need L >= 1 and B >= 2, got L={L}, B={B}")
    rng = np.random.default_rng(seed)
    return Message(indices=rng.integers(0, B, size=L), B=B)


def to_signal(msg: Message) -> np.ndarray:
    """N = L*B one-hot vector with ones at l*B + index_l."""
    x = np.zeros(msg.L * msg.B)
    x[np.arange(msg.L) * msg.B + msg.indices] = 1.0
    return x


def transmit(op: CodingOperator, x: np.ndarray, snr: float, seed: int) -> ChannelOutput:
    """y = Ax + z with z ~ N(0, 1/snr); snr = inf sends noiselessly."""
    if snr <= 0:
        raise CodecError(f"snr must be positive, got {snr}")
    y = op.forward(np.asarray(x, dtype=np.float64))
    if math.isfinite(snr):
        rng = np.random.default_rng(seed)
        y = y + rng.standard_normal(y.size) / math.sqrt(snr)
    return ChannelOutput(y=y, snr=snr)


def hard_decision(xhat: np.ndarray, L: int, B: int) -> Message:
    """Per-section argmax; ties break toward the lowest index."""
    xhat = np.asarray(xhat)
    if xhat.shape != (L * B,):
        raise CodecError(f"expected vector of length {L * B}, got {xhat.shape}")
    return Message(indices=xhat.reshape(L, B).argmax(axis=1), B=B)


def section_error_rate(truth: Message, est: Message) -> float:
    if truth.L != est.L or truth.B != est.B:
        raise CodecError("messages have different shapes")
    return float(np.mean(truth.indices != est.indices))


def mse_per_section(x: np.ndarray, xhat: np.ndarray, L: int) -> float:
    x = np.asarray(x)
    xhat = np.asarray(xhat)
    if x.shape != xhat.shape:
        raise CodecError("signal shapes differ")
    return float(np.sum((x - xhat) ** 2) / L)
