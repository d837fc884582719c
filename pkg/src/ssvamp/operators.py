"""Finite-size coding matrices sampled from rotational-invariant ensembles.

Each operator exposes the coding matrix only through forward/adjoint
products, a positive-definite resolvent solve (snr A^T A + gamma I)^-1 v,
the normalized resolvent trace, and its eigenvalue list.  That interface is
exactly what encoding and the LMMSE half of the VAMP decoder need, and it
lets the DCT proxy run in O(N log N) instead of dense algebra.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.fft import dct, idct

from .spectra import EnsembleKind

__all__ = [
    "OperatorError",
    "EnsembleSpec",
    "CodingOperator",
    "sample_gaussian",
    "sample_row_orthogonal",
    "sample_discrete",
    "build_dct_proxy",
    "sample_operator",
    "save_operator",
    "load_operator",
]


class OperatorError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    """Code parameters (L, B, R, snr) plus the sampling seed.

    M = round(L log2 B / R); the realized rate L log2 B / M is stored
    alongside the requested one because of the rounding.
    """

    kind: EnsembleKind
    L: int
    B: int
    R: float
    snr: float
    seed: int = 0

    def __post_init__(self):
        if self.L < 1 or self.B < 2:
            raise OperatorError(f"need L >= 1 and B >= 2, got L={self.L}, B={self.B}")
        if self.R <= 0 or self.snr <= 0:
            raise OperatorError("R and snr must be positive")
        if self.M < 1:
            raise OperatorError("M rounds to zero; rate too high for this (L, B)")
        if self.M > self.N:
            raise OperatorError(
                f"alpha = M/N = {self.M}/{self.N} > 1 is outside the supported regime"
            )

    @property
    def M(self) -> int:
        return int(round(self.L * math.log2(self.B) / self.R))

    @property
    def N(self) -> int:
        return self.L * self.B

    @property
    def alpha(self) -> float:
        return self.M / self.N

    @property
    def R_actual(self) -> float:
        return self.L * math.log2(self.B) / self.M


class CodingOperator:
    """Interface contract shared by all sampled coding matrices."""

    spec: EnsembleSpec

    @property
    def dims(self) -> Tuple[int, int]:
        return (self.spec.M, self.spec.N)

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def resolvent_solve(self, v: np.ndarray, gamma: float, snr: float) -> np.ndarray:
        raise NotImplementedError

    def resolvent_trace(self, gamma: float, snr: float) -> float:
        """gamma N^-1 Tr[(snr A^T A + gamma I)^-1], the LMMSE divergence."""
        raise NotImplementedError

    def spectrum(self) -> np.ndarray:
        """All N eigenvalues of B^-1 A^T A, zeros included, ascending."""
        raise NotImplementedError

    def _check_solve_args(self, v, gamma, snr):
        if gamma <= 0 or snr < 0:
            raise OperatorError(f"need gamma > 0 and snr >= 0, got {gamma}, {snr}")
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.spec.N,):
            raise OperatorError(f"expected vector of length {self.spec.N}, got {v.shape}")
        return v


class _GaussianOperator(CodingOperator):
    """Dense i.i.d. gaussian matrix, entries N(0, 1/L).

    The resolvent is applied through a Woodbury identity using the
    eigendecomposition of the M x M Gram matrix A A^T, computed once at
    construction: this stores M^2 instead of the N x M thin-SVD factor.
    """

    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        self.A = rng.standard_normal((spec.M, spec.N)) / math.sqrt(spec.L)
        gram = self.A @ self.A.T
        evals, Q = np.linalg.eigh(gram)
        self._evals = np.maximum(evals, 0.0)  # eigenvalues of A^T A (nonzero part)
        self._Q = Q

    def forward(self, x):
        return self.A @ x

    def adjoint(self, y):
        return self.A.T @ y

    def resolvent_solve(self, v, gamma, snr):
        v = self._check_solve_args(v, gamma, snr)
        if snr == 0.0:
            return v / gamma
        t = self._Q.T @ (self.A @ v)
        t /= self._evals * snr + gamma
        return (v - snr * (self.A.T @ (self._Q @ t))) / gamma

    def resolvent_trace(self, gamma, snr):
        M, N = self.dims
        return float((N - M + np.sum(gamma / (snr * self._evals + gamma))) / N)

    def spectrum(self):
        M, N = self.dims
        return np.sort(np.concatenate([np.zeros(N - M), self._evals / self.spec.B]))


class _RowOrthogonalOperator(CodingOperator):
    """A = sqrt(B) x (M rows of a Haar orthogonal N x N matrix).

    A A^T = B I, so A^T A / B is an orthogonal projector and the resolvent
    is closed-form.
    """

    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        q = _haar_orthogonal(spec.N, rng)
        rows = np.sort(rng.choice(spec.N, size=spec.M, replace=False))
        self.A = math.sqrt(spec.B) * q[rows, :]

    def forward(self, x):
        return self.A @ x

    def adjoint(self, y):
        return self.A.T @ y

    def resolvent_solve(self, v, gamma, snr):
        v = self._check_solve_args(v, gamma, snr)
        B = self.spec.B
        proj = self.A.T @ (self.A @ v) / B
        return v / gamma + (1.0 / (snr * B + gamma) - 1.0 / gamma) * proj

    def resolvent_trace(self, gamma, snr):
        M, N = self.dims
        return float((N - M + M * gamma / (snr * self.spec.B + gamma)) / N)

    def spectrum(self):
        M, N = self.dims
        return np.concatenate([np.zeros(N - M), np.ones(M)])


class _DiscreteOperator(CodingOperator):
    """A = U sqrt(D) V^T with Haar U, V and the three-atom singular spectrum.

    The M nonzero eigenvalues of A^T A sit at B*{1/2, 3/2} (ceil(M/2) low,
    floor(M/2) high, rescaled so the empirical mean meets the power
    constraint exactly when M is odd).
    """

    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        M, N, B = spec.M, spec.N, spec.B
        d = np.concatenate([
            np.full((M + 1) // 2, 0.5 * B),
            np.full(M // 2, 1.5 * B),
        ])
        d *= M * B / d.sum()  # exact power constraint: mean of spectrum()/N = alpha
        self._u = _haar_orthogonal(M, rng)
        self._v = _haar_orthogonal(N, rng)[:, :M]
        self._d = d  # eigenvalues of A^T A
        self._s = np.sqrt(d)

    def forward(self, x):
        return self._u @ (self._s * (self._v.T @ x))

    def adjoint(self, y):
        return self._v @ (self._s * (self._u.T @ y))

    def resolvent_solve(self, v, gamma, snr):
        v = self._check_solve_args(v, gamma, snr)
        t = self._v.T @ v
        t *= 1.0 / (snr * self._d + gamma) - 1.0 / gamma
        return v / gamma + self._v @ t

    def resolvent_trace(self, gamma, snr):
        M, N = self.dims
        return float((N - M + np.sum(gamma / (snr * self._d + gamma))) / N)

    def spectrum(self):
        M, N = self.dims
        return np.sort(np.concatenate([np.zeros(N - M), self._d / self.spec.B]))


class _DctProxyOperator(CodingOperator):
    """Subsampled orthonormal DCT-II with random signs: A = sqrt(B) S C diag(eps).

    Fast stand-in for the row-orthogonal ensemble: same (exact) spectrum,
    O(N log N) products, closed-form resolvent in the transform domain.
    """

    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        self.signs = rng.choice([-1.0, 1.0], size=spec.N)
        self.rows = np.sort(rng.choice(spec.N, size=spec.M, replace=False))
        self._scale = math.sqrt(spec.B)
        self._mask = np.zeros(spec.N, dtype=bool)
        self._mask[self.rows] = True

    def forward(self, x):
        w = dct(self.signs * x, norm="ortho")
        return self._scale * w[self.rows]

    def adjoint(self, y):
        w = np.zeros(self.spec.N)
        w[self.rows] = y
        return self._scale * self.signs * idct(w, norm="ortho")

    def resolvent_solve(self, v, gamma, snr):
        v = self._check_solve_args(v, gamma, snr)
        w = dct(self.signs * v, norm="ortho")
        denom = np.full(self.spec.N, gamma)
        denom[self._mask] += snr * self.spec.B
        return self.signs * idct(w / denom, norm="ortho")

    def resolvent_trace(self, gamma, snr):
        M, N = self.dims
        return float((N - M + M * gamma / (snr * self.spec.B + gamma)) / N)

    def spectrum(self):
        M, N = self.dims
        return np.concatenate([np.zeros(N - M), np.ones(M)])


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform orthogonal matrix: QR of a gaussian matrix with the
    sign-of-R-diagonal correction."""
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def sample_gaussian(spec: EnsembleSpec) -> CodingOperator:
    return _GaussianOperator(spec)


def sample_row_orthogonal(spec: EnsembleSpec) -> CodingOperator:
    return _RowOrthogonalOperator(spec)


def sample_discrete(spec: EnsembleSpec) -> CodingOperator:
    return _DiscreteOperator(spec)


def build_dct_proxy(spec: EnsembleSpec) -> CodingOperator:
    return _DctProxyOperator(spec)


_SAMPLERS = {
    EnsembleKind.GAUSSIAN: sample_gaussian,
    EnsembleKind.ROW_ORTHOGONAL: sample_row_orthogonal,
    EnsembleKind.DISCRETE_TRI: sample_discrete,
}

# the DCT proxy is not a SpectralModel kind; address it by name
DCT_PROXY = "dct-proxy"


def sample_operator(spec: EnsembleSpec, proxy: bool = False) -> CodingOperator:
    if proxy or spec.kind == DCT_PROXY:
        return build_dct_proxy(spec)
    return _SAMPLERS[EnsembleKind(spec.kind)](spec)


# -- binary operator cache -------------------------------------------------

_MAGIC = b"SSOP"
_VERSION = 1
_KIND_CODES = {
    EnsembleKind.GAUSSIAN: 0,
    EnsembleKind.ROW_ORTHOGONAL: 1,
    EnsembleKind.DISCRETE_TRI: 2,
}
_KIND_FROM_CODE = {v: k for k, v in _KIND_CODES.items()}
_DCT_CODE = 3


def save_operator(op: CodingOperator, path) -> None:
    """Binary cache: header (magic, version, kind, L, B, M, seed) then the
    sampled payload as little-endian float64, enough to rebuild the operator
    without resampling."""
    spec = op.spec
    if isinstance(op, _DctProxyOperator):
        code = _DCT_CODE
        payload = np.concatenate([op.signs, op.rows.astype(np.float64)])
    elif isinstance(op, (_GaussianOperator, _RowOrthogonalOperator)):
        code = _KIND_CODES[spec.kind]
        payload = op.A.ravel()
    elif isinstance(op, _DiscreteOperator):
        code = _KIND_CODES[spec.kind]
        payload = np.concatenate([op._u.ravel(), op._v.ravel(), op._d])
    else:
        raise OperatorError(f"cannot cache operator of type {type(op)}")
    header = _MAGIC + struct.pack(
        "<HHqqqqd", _VERSION, code, spec.L, spec.B, spec.M, spec.seed, spec.snr
    ) + struct.pack("<d", spec.R)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.astype("<f8").tobytes())


def load_operator(path) -> CodingOperator:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise OperatorError(f"{path} is not an operator cache file")
        version, code, L, B, M, seed, snr = struct.unpack("<HHqqqqd", fh.read(44))
        (R,) = struct.unpack("<d", fh.read(8))
        if version != _VERSION:
            raise OperatorError(f"unsupported cache version {version}")
        payload = np.frombuffer(fh.read(), dtype="<f8")
    kind = DCT_PROXY if code == _DCT_CODE else _KIND_FROM_CODE[code]
    spec = EnsembleSpec(kind=kind, L=L, B=B, R=R, snr=snr, seed=seed)
    if spec.M != M:
        raise OperatorError(f"cache header M={M} disagrees with spec M={spec.M}")
    N = spec.N
    if code == _DCT_CODE:
        op = _DctProxyOperator.__new__(_DctProxyOperator)
        op.spec = spec
        op.signs = payload[:N].copy()
        op.rows = payload[N:N + M].astype(np.int64)
        op._scale = math.sqrt(B)
        op._mask = np.zeros(N, dtype=bool)
        op._mask[op.rows] = True
        return op
    if kind is EnsembleKind.GAUSSIAN:
        op = _GaussianOperator.__new__(_GaussianOperator)
        op.spec = spec
        op.A = payload.reshape(M, N).copy()
        gram = op.A @ op.A.T
        evals, Q = np.linalg.eigh(gram)
        op._evals = np.maximum(evals, 0.0)
        op._Q = Q
        return op
    if kind is EnsembleKind.ROW_ORTHOGONAL:
        op = _RowOrthogonalOperator.__new__(_RowOrthogonalOperator)
        op.spec = spec
        op.A = payload.reshape(M, N).copy()
        return op
    op = _DiscreteOperator.__new__(_DiscreteOperator)
    op.spec = spec
    op._u = payload[:M * M].reshape(M, M).copy()
    op._v = payload[M * M:M * M + N * M].reshape(N, M).copy()
    op._d = payload[M * M + N * M:].copy()
    op._s = np.sqrt(op._d)
    return op
