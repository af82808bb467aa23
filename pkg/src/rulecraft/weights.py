"""Rule weight fitting: offset, stagewise line search, xgb closed form and
fully corrective refits of all weights."""
from __future__ import annotations

import numpy as np

from .core import Dataset
from .losses import (
    LOGISTIC,
    SQUARED,
    check_targets,
    loss_derivative,
    loss_second_derivative,
    loss_value,
)

STAGEWISE = "stagewise"
XGB_CLOSED_FORM = "xgb"
CORRECTIVE = "corrective"
UPDATES = (STAGEWISE, XGB_CLOSED_FORM, CORRECTIVE)

_PROB_CLAMP = 1e-6
_ARMIJO = 1e-4
_MAX_BACKTRACK = 50
_JITTER = 1e-10


class WeightFitError(RuntimeError):
    pass


def fit_offset(ds: Dataset, kind: str) -> float:
    """Unregularized constant model minimizing the empirical risk."""
    y = ds.target
    check_targets(kind, y)
    if kind == SQUARED:
        return float(np.mean(y))
    if kind == LOGISTIC:
        p = float(np.clip(np.mean(y > 0), _PROB_CLAMP, 1 - _PROB_CLAMP))
        return float(np.log(p / (1 - p)))
    return float(np.log(max(float(np.mean(y)), _PROB_CLAMP)))


def line_search_weight(kind, f_vec, y_vec, q, lam=0.0, tol=1e-10, max_iter=100) -> float:
    """argmin over beta of R_lam(f + beta q), other weights held fixed."""
    f = np.asarray(f_vec, dtype=np.float64)
    y = np.asarray(y_vec, dtype=np.float64)
    sel = np.asarray(q, dtype=np.float64) > 0
    if not sel.any():
        raise ValueError("line search needs a nonempty query")
    n = y.size
    fs, ys = f[sel], y[sel]
    if kind == SQUARED:
        return float(np.sum(ys - fs) / (sel.sum() + lam))

    def phi(b):
        return float(np.sum(loss_value(kind, fs + b, ys))) / n + lam * b * b / n

    def dphi(b):
        return float(np.sum(loss_derivative(kind, fs + b, ys))) / n + 2 * lam * b / n

    def d2phi(b):
        return float(np.sum(loss_second_derivative(kind, fs + b, ys))) / n + 2 * lam / n

    b = 0.0
    for _ in range(max_iter):
        d = dphi(b)
        if abs(d) <= tol:
            break
        step = -d / max(d2phi(b), 1e-300)
        cur = phi(b)
        t = 1.0
        for _ in range(_MAX_BACKTRACK):
            if phi(b + t * step) <= cur + _ARMIJO * t * step * d:
                break
            t *= 0.5
        if t * abs(step) <= 1e-15 * max(1.0, abs(b)):
            break
        b += t * step
    return float(b)


def xgb_weight(q, g, h, lam=0.0) -> float:
    q = np.asarray(q, dtype=np.float64)
    denom = float(q @ np.asarray(h, dtype=np.float64)) + lam
    if denom == 0:
        raise ZeroDivisionError("<q, h> + lambda is zero")
    return -float(q @ np.asarray(g, dtype=np.float64)) / denom


def query_matrix(ds: Dataset, queries) -> np.ndarray:
    """n x t matrix of query output vectors."""
    cols = [q.mask(ds.features) for q in queries]
    if not cols:
        return np.zeros((ds.n, 0))
    return np.column_stack(cols).astype(np.float64)


def _solve(a, b):
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return np.linalg.solve(a + _JITTER * np.eye(a.shape[0]), b)


def corrective_fit(kind, ds: Dataset, offset: float, queries, lam=0.0, init=None,
                   tol=1e-8, max_iter=100, Q=None) -> np.ndarray:
    """Jointly refit all rule weights with the offset held fixed.

    Squared loss solves the ridge normal equations; the other losses use
    damped Newton iterations.
    """
    if not queries:
        raise ValueError("corrective fit needs at least one query")
    check_targets(kind, ds.target)
    y = ds.target
    n = ds.n
    Q = query_matrix(ds, queries) if Q is None else Q
    t = Q.shape[1]
    if kind == SQUARED:
        gram = Q.T @ Q + lam * np.eye(t)
        rhs = Q.T @ (y - offset)
        beta = _solve(gram, rhs)
        if not np.all(np.isfinite(beta)):
            raise WeightFitError("ridge system is singular")
        return beta

    beta = np.zeros(t) if init is None else np.asarray(init, dtype=np.float64).copy()

    def objective(b):
        return float(np.sum(loss_value(kind, offset + Q @ b, y))) / n + lam * float(b @ b) / n

    for _ in range(max_iter):
        f = offset + Q @ beta
        grad = Q.T @ loss_derivative(kind, f, y) / n + 2 * lam * beta / n
        if np.max(np.abs(grad)) <= tol:
            break
        hess = (Q.T * loss_second_derivative(kind, f, y)) @ Q / n + 2 * lam * np.eye(t) / n
        step = -_solve(hess, grad)
        cur = objective(beta)
        slope = float(grad @ step)
        s = 1.0
        for _ in range(_MAX_BACKTRACK):
            if objective(beta + s * step) <= cur + _ARMIJO * s * slope:
                break
            s *= 0.5
        beta = beta + s * step
    return beta


def gradient_norm(kind, ds: Dataset, offset, queries, beta, lam=0.0) -> float:
    """Infinity norm of the risk gradient with respect to the rule weights."""
    Q = query_matrix(ds, queries)
    f = offset + Q @ beta
    grad = Q.T @ loss_derivative(kind, f, ds.target) / ds.n + 2 * lam * np.asarray(beta) / ds.n
    return float(np.max(np.abs(grad))) if grad.size else 0.0


__all__ = [
    "CORRECTIVE", "STAGEWISE", "XGB_CLOSED_FORM", "UPDATES", "WeightFitError",
    "corrective_fit", "fit_offset", "gradient_norm", "line_search_weight", "query_matrix",
    "xgb_weight",
]
