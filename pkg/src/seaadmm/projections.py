"""Euclidean projections used by the inner and outer ADMM loops."""
from __future__ import annotations

import numpy as np


def project_simplex(v: np.ndarray, tau: float = 1.0) -> np.ndarray:
    """Project ``v`` onto ``{q >= 0, sum(q) = tau}`` by the sort-and-threshold rule."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    if tau <= 0:
        raise ValueError("tau must be positive")
    u = np.sort(v, kind="stable")[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    eta = np.nonzero(u - (css - tau) / j > 0)[0][-1] + 1
    theta = (css[eta - 1] - tau) / eta
    return np.maximum(v - theta, 0.0)


def project_weighted_simplex(v: np.ndarray, weights: np.ndarray, tau: float = 1.0) -> np.ndarray:
    """Project onto ``{q >= 0, weights @ q = tau}`` for positive weights.

    The solution is ``max(v - theta * w, 0)``; theta is located exactly by
    sorting the breakpoints ``v_i / w_i``.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    if np.any(w <= 0) or tau <= 0:
        raise ValueError("weights and tau must be positive")
    if np.all(w == w[0]):
        return project_simplex(v * w[0], tau) / w[0]
    order = np.argsort(-v / w, kind="stable")
    vs, ws = v[order], w[order]
    # with the first j entries active: theta_j = (sum w v - tau) / sum w^2
    num = np.cumsum(ws * vs) - tau
    den = np.cumsum(ws * ws)
    theta = num / den
    active = vs - theta * ws > 0
    j = np.nonzero(active)[0][-1]
    return np.maximum(v - theta[j] * w, 0.0)


def project_nonneg(v: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def project_psd(X: np.ndarray) -> np.ndarray:
    """Nearest Hermitian PSD matrix in Frobenius norm."""
    lam, V = np.linalg.eigh(0.5 * (X + X.conj().T))
    pos = lam > 0
    Vp = V[:, pos]
    return (Vp * lam[pos]) @ Vp.conj().T
