"""Gaussian process regression on the unit hypercube.

Squared-exponential kernel with per-dimension lengthscales. Hyperparameters
are fit by maximizing the log marginal likelihood with a few restarts of
Nelder-Mead in log space; inputs are assumed pre-scaled to [0, 1] so fairly
tight lengthscale bounds are safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

# log-space box for (lengthscales..., signal variance, noise variance)
_LOG_LS_LO, _LOG_LS_HI = np.log(1e-2), np.log(1e2)
_LOG_SV_LO, _LOG_SV_HI = np.log(1e-4), np.log(1e2)
_LOG_NV_LO, _LOG_NV_HI = np.log(1e-12), np.log(1e-2)
_JITTER = 1e-12


def _sqdist(xa: np.ndarray, xb: np.ndarray, ls: np.ndarray) -> np.ndarray:
    a = xa / ls
    b = xb / ls
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    sq = aa + bb - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


def _kernel(xa, xb, ls, sv):
    return sv * np.exp(-0.5 * _sqdist(xa, xb, ls))


@dataclass(frozen=True)
class GpModel:
    """Fitted GP: training inputs, targets, and kernel hyperparameters."""

    x: np.ndarray
    y: np.ndarray
    lengthscales: np.ndarray
    signal_var: float
    noise_var: float
    y_mean: float
    alpha: np.ndarray  # K^-1 (y - mean), precomputed
    chol: np.ndarray
    chol_lower: bool


def _factor(k_base, nv):
    """Cholesky with escalating jitter; tiny noise floors need the backstop."""
    jitter = _JITTER
    n = k_base.shape[0]
    while jitter <= 1e-6:
        try:
            return cho_factor(k_base + (nv + jitter) * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            jitter *= 100.0
    raise np.linalg.LinAlgError("kernel matrix is not positive definite")


def _neg_lml(log_theta, x, yc):
    d = x.shape[1]
    ls = np.exp(np.clip(log_theta[:d], _LOG_LS_LO, _LOG_LS_HI))
    sv = float(np.exp(np.clip(log_theta[d], _LOG_SV_LO, _LOG_SV_HI)))
    nv = float(np.exp(np.clip(log_theta[d + 1], _LOG_NV_LO, _LOG_NV_HI)))
    n = x.shape[0]
    k = _kernel(x, x, ls, sv) + (nv + _JITTER) * np.eye(n)
    try:
        c, lower = cho_factor(k, lower=True)
    except np.linalg.LinAlgError:
        return 1e12
    alpha = cho_solve((c, lower), yc)
    lml = -0.5 * float(yc @ alpha) - float(np.sum(np.log(np.diag(c)))) - 0.5 * n * np.log(2.0 * np.pi)
    return -lml


def gp_fit(x, y, seed: int = 0, restarts: int = 2, max_iter: int = None) -> GpModel:
    """Fit kernel hyperparameters by restarted Nelder-Mead on the log LML."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x must be (n, d) with matching y of length n")
    n, d = x.shape
    if n < 2:
        raise ValueError("need at least 2 observations")

    y_mean = float(np.mean(y))
    yc = y - y_mean
    y_var = float(np.var(yc))

    if y_var < 1e-14:
        # constant targets: any lengthscale works, predict the mean
        ls = np.full(d, 1.0)
        sv, nv = 1e-4, 1e-8
        c, lower = _factor(_kernel(x, x, ls, sv), nv)
        alpha = cho_solve((c, lower), yc)
        return GpModel(x, y, ls, sv, nv, y_mean, alpha, c, lower)

    # enough Nelder-Mead budget to settle lengthscales without dominating the
    # optimization loop; callers with one expensive fit can raise it
    if max_iter is None:
        max_iter = 30 * (d + 2)

    rng = np.random.default_rng(seed)
    base = np.concatenate([np.zeros(d), [np.log(max(y_var, 1e-4))], [np.log(1e-6)]])
    # second deterministic start: short lengthscales and near-zero noise, so
    # wiggly noise-free targets do not get written off as noise around a
    # too-smooth mean (a real local optimum of the LML)
    short = np.concatenate([np.full(d, np.log(0.2)), [np.log(max(y_var, 1e-4))], [np.log(1e-10)]])
    starts = [base, short]
    for _ in range(max(0, restarts - 1)):
        start = base.copy()
        start[:d] += rng.uniform(-1.0, 1.0, size=d)
        start[d] += rng.uniform(-0.5, 0.5)
        starts.append(start)
    best = None
    for start in starts:
        res = minimize(_neg_lml, start, args=(x, yc), method="Nelder-Mead",
                       options={"maxiter": max_iter, "xatol": 1e-3, "fatol": 1e-6})
        if best is None or res.fun < best.fun:
            best = res

    theta = best.x
    ls = np.exp(np.clip(theta[:d], _LOG_LS_LO, _LOG_LS_HI))
    sv = float(np.exp(np.clip(theta[d], _LOG_SV_LO, _LOG_SV_HI)))
    nv = float(np.exp(np.clip(theta[d + 1], _LOG_NV_LO, _LOG_NV_HI)))
    c, lower = _factor(_kernel(x, x, ls, sv), nv)
    alpha = cho_solve((c, lower), yc)
    return GpModel(x, y, ls, sv, nv, y_mean, alpha, c, lower)


def gp_predict(model: GpModel, xq):
    """Posterior mean and variance at query points `xq` (m, d).

    Returns (mean, var) arrays of shape (m,); variance is clamped at zero.
    """
    xq = np.atleast_2d(np.asarray(xq, dtype=float))
    ks = _kernel(xq, model.x, model.lengthscales, model.signal_var)
    mean = model.y_mean + ks @ model.alpha
    v = cho_solve((model.chol, model.chol_lower), ks.T)
    var = model.signal_var - np.sum(ks * v.T, axis=1)
    return mean, np.maximum(var, 0.0)
