"""Query-selection objectives evaluated on binary output vectors.

These are the direct (non-incremental) forms; the search engine computes
the same quantities through prefix scans in ``rulecraft.kernels``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import OrthoBasis, project_out
from .kernels import RAD_TOL

GB, GS, XGB, OGB = "gb", "gs", "xgb", "ogb"
OBJECTIVES = (GB, GS, XGB, OGB)
DEFAULT_EPSILON = 1e-3


@dataclass(frozen=True)
class ObjectiveKind:
    name: str = OGB
    epsilon: float = DEFAULT_EPSILON
    lam: float = 0.0

    def __post_init__(self):
        if self.name not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.name!r}; expected one of {OBJECTIVES}")
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError("epsilon must be finite and >= 0")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and >= 0")


def _as_kind(kind) -> ObjectiveKind:
    return kind if isinstance(kind, ObjectiveKind) else ObjectiveKind(kind)


def objective_value(kind, q, g, h=None, basis: OrthoBasis | None = None) -> float:
    """Objective of the binary output vector ``q``.

    For ``ogb`` the caller passes the already projected gradient; this
    function projects only ``q``.
    """
    kind = _as_kind(kind)
    q = np.asarray(q, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if q.shape != g.shape:
        raise ValueError("q and g lengths differ")
    size = float(q.sum())
    if size == 0:
        return 0.0
    inner = abs(float(g @ q))
    if kind.name == GB:
        return inner / np.sqrt(size)
    if kind.name == GS:
        return inner
    if kind.name == XGB:
        if h is None:
            raise ValueError("xgb objective needs the hessian diagonal")
        denom = float(np.asarray(h, dtype=np.float64) @ q) + kind.lam
        return inner / np.sqrt(denom) if denom > 0 else 0.0
    if basis is None:
        basis = OrthoBasis(q.size)
    q_perp, _ = project_out(basis, q)
    nsq = float(q_perp @ q_perp)
    if nsq <= RAD_TOL * size:
        return 0.0
    return inner / (np.sqrt(nsq) + kind.epsilon)


def projection_error(q, target, basis: OrthoBasis) -> float:
    """Squared distance from ``target`` to span(basis columns and ``q``)."""
    q = np.asarray(q, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if q.shape != target.shape or q.shape[0] != basis.n:
        raise ValueError("dimension mismatch")
    r, _ = project_out(basis, target)
    q_perp, _ = project_out(basis, q)
    nsq = float(q_perp @ q_perp)
    if nsq <= RAD_TOL * max(1.0, float(q @ q)):
        return float(r @ r)
    return float(r @ r - (r @ q_perp) ** 2 / nsq)
