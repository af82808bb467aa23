"""Squared, logistic and Poisson losses with their output-space derivatives.

Squared loss is reported as ``(f - y)**2`` but its gradient and curvature
follow the half-loss convention (``g = f - y``, ``h = 1``). Both the
objectives and the weight fits are invariant to that positive rescaling.
"""
from __future__ import annotations

import numpy as np

from .core import BINARY, COUNT, REGRESSION, DataError

SQUARED = "squared"
LOGISTIC = "logistic"
POISSON = "poisson"
LOSSES = (SQUARED, LOGISTIC, POISSON)

TASK_LOSS = {REGRESSION: SQUARED, BINARY: LOGISTIC, COUNT: POISSON}

_EXP_CAP = 700.0  # exp(700) ~ 1e304, below float64 overflow


def _check_kind(kind):
    if kind not in LOSSES:
        raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


def check_targets(kind, y):
    _check_kind(kind)
    y = np.asarray(y, dtype=np.float64)
    if kind == LOGISTIC and not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("logistic loss requires targets in {-1, +1}")
    if kind == POISSON and np.any(y < 0):
        raise DataError("poisson loss requires nonnegative targets")


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _xlogx(y):
    y = np.asarray(y, dtype=np.float64)
    safe = np.where(y > 0, y, 1.0)
    return np.where(y > 0, y * np.log(safe), 0.0)


def loss_value(kind, f, y):
    """Elementwise loss; scalars in, scalar out."""
    check_targets(kind, y)
    f = np.asarray(f, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kind == SQUARED:
        out = (f - y) ** 2
    elif kind == LOGISTIC:
        out = np.logaddexp(0.0, -y * f)
    else:
        out = _xlogx(y) - y * f - y + np.exp(np.minimum(f, _EXP_CAP))
    return out if out.ndim else float(out)


def loss_derivative(kind, f, y):
    """Exact d loss / d f (so ``2 (f - y)`` for squared loss)."""
    g = gradient(kind, f, y)
    return 2.0 * g if kind == SQUARED else g


def loss_second_derivative(kind, f, y):
    h = hessian_diag(kind, f, y)
    return 2.0 * h if kind == SQUARED else h


def gradient(kind, f_vec, y_vec):
    _check_kind(kind)
    f = np.asarray(f_vec, dtype=np.float64)
    y = np.asarray(y_vec, dtype=np.float64)
    if f.shape != y.shape:
        raise ValueError("f and y lengths differ")
    if kind == SQUARED:
        return f - y
    if kind == LOGISTIC:
        return -y * _sigmoid(-y * f)
    return np.exp(np.minimum(f, _EXP_CAP)) - y


def hessian_diag(kind, f_vec, y_vec):
    _check_kind(kind)
    f = np.asarray(f_vec, dtype=np.float64)
    y = np.asarray(y_vec, dtype=np.float64)
    if f.shape != y.shape:
        raise ValueError("f and y lengths differ")
    if kind == SQUARED:
        return np.ones_like(f)
    if kind == LOGISTIC:
        z = y * f
        return _sigmoid(z) * _sigmoid(-z)
    return np.exp(np.minimum(f, _EXP_CAP))


def predict_mean(kind, f):
    _check_kind(kind)
    if kind == SQUARED:
        return f
    if kind == LOGISTIC:
        out = _sigmoid(f)
    else:
        out = np.exp(np.minimum(np.asarray(f, dtype=np.float64), _EXP_CAP))
    return out if np.ndim(out) else float(out)


def risk(kind, f_vec, y_vec, weights=(), lam=0.0):
    """Regularized empirical risk ``mean(loss) + lam * ||weights||^2 / n``."""
    y = np.asarray(y_vec, dtype=np.float64)
    n = y.shape[0]
    w = np.asarray(weights, dtype=np.float64)
    return float(np.sum(loss_value(kind, f_vec, y)) / n + lam * float(w @ w) / n)
