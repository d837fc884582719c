"""Pure-numpy implementations of the hot kernels.

Kept behaviourally identical to the compiled extension in ``_kernels.pyx``;
the active backend is picked in ``_backend``.  All Monte Carlo reductions
average antithetic pairs first (rows 2p and 2p+1 of Z are a +/- pair), so
standard errors are computed over n/2 independent pair means.
"""

import numpy as np

BACKEND = "python"

# Effective channels narrower than this are treated as noiseless: the
# posterior puts all mass on the sent symbol and every statistic is 0.
_NOISELESS_INV_VAR = 1e8


def channel_scan(Z, sigmas):
    """Posterior statistics of the effective one-hot channel Y = e1 + sigma Z.

    For each sigma returns the Monte Carlo mean and standard error of
      t   : posterior MSE sample  (g1 - 1)^2 + (B-1) g2^2
      s   : entropy sample        log sum_i w_i - log w_sent  (natural log)
      ser : hard-decision error indicator (argmax of posterior != sent)
    over the rows of Z (shape (n, B), antithetic pairs adjacent).
    """
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    n, B = Z.shape
    npairs = n // 2
    out = np.zeros((6, sigmas.size))
    for k, sigma in enumerate(sigmas):
        if sigma <= 0.0 or 1.0 / (sigma * sigma) > _NOISELESS_INV_VAR:
            continue
        b = Z / sigma
        b[:, 0] += 1.0 / (sigma * sigma)
        m = b.max(axis=1)
        w = np.exp(b - m[:, None])
        D = w.sum(axis=1)
        g1 = w[:, 0] / D
        g2 = w[:, 1] / D
        t = (g1 - 1.0) ** 2 + (B - 1) * g2 * g2
        s = np.log(D) + m - b[:, 0]
        ser = (m > b[:, 0]).astype(np.float64)
        for j, vals in enumerate((t, s, ser)):
            pair = vals.reshape(npairs, 2).mean(axis=1)
            mean = pair.mean()
            var = max(pair.var(), 0.0)
            out[2 * j, k] = mean
            out[2 * j + 1, k] = np.sqrt(var / npairs)
    return tuple(out)


def channel_samples(Z, sigma):
    """Per-sample (t, s, ser) arrays for one sigma; used where common-random-
    number differences are needed (e.g. potential derivatives)."""
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    n, B = Z.shape
    if sigma <= 0.0 or 1.0 / (sigma * sigma) > _NOISELESS_INV_VAR:
        zero = np.zeros(n)
        return zero, zero.copy(), zero.copy()
    b = Z / sigma
    b[:, 0] += 1.0 / (sigma * sigma)
    m = b.max(axis=1)
    w = np.exp(b - m[:, None])
    D = w.sum(axis=1)
    g1 = w[:, 0] / D
    g2 = w[:, 1] / D
    t = (g1 - 1.0) ** 2 + (B - 1) * g2 * g2
    s = np.log(D) + m - b[:, 0]
    ser = (m > b[:, 0]).astype(np.float64)
    return t, s, ser


def section_softmax(r, temp, B):
    """Section-wise softmax of r at temperature temp.

    Returns (xhat, deriv_sum) with deriv_sum = sum_i g_i (1 - g_i); the
    caller turns that into the mean derivative gamma^-1 <g(1-g)>.
    """
    r = np.asarray(r, dtype=np.float64)
    sec = (r / temp).reshape(-1, B)
    sec = sec - sec.max(axis=1, keepdims=True)
    w = np.exp(sec)
    w /= w.sum(axis=1, keepdims=True)
    xhat = w.reshape(-1)
    deriv_sum = float(np.sum(xhat * (1.0 - xhat)))
    return xhat, deriv_sum
