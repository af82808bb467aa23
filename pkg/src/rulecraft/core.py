"""Domain types: datasets, threshold propositions, conjunctive queries,
rule ensembles and the orthonormal basis kept across boosting rounds."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

REGRESSION = "regression"
BINARY = "binary-classification"
COUNT = "count-regression"
TASKS = (REGRESSION, BINARY, COUNT)

# ||q_perp|| at or below this is treated as "q lies in the span"
REDUNDANCY_TOL = 1e-9


class DataError(ValueError):
    """Raised for malformed or incompatible input data."""


@dataclass
class Dataset:
    """Numeric feature matrix plus target.

    ``features`` is stored column-major (Fortran order) because every search
    step slices one feature column. ``sort_index[j]`` is a stable argsort of
    column ``j``.
    """

    features: np.ndarray
    target: np.ndarray
    task: str = REGRESSION
    feature_names: list[str] | None = None
    sort_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.asarray(self.target, dtype=np.float64).ravel()
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError("features must be a non-empty n x d matrix")
        if y.shape[0] != x.shape[0]:
            raise DataError(f"target has {y.shape[0]} rows, features have {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise DataError("feature values must be finite")
        if not np.all(np.isfinite(y)):
            raise DataError("target values must be finite")
        if self.task not in TASKS:
            raise DataError(f"unknown task {self.task!r}")
        if self.task == BINARY and not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("binary-classification targets must be -1/+1")
        if self.task == COUNT and (np.any(y < 0) or np.any(y != np.round(y))):
            raise DataError("count-regression targets must be nonnegative integers")
        self.features = np.asfortranarray(x)
        self.target = y
        if self.feature_names is None:
            self.feature_names = [f"x{j + 1}" for j in range(x.shape[1])]
        elif len(self.feature_names) != x.shape[1]:
            raise DataError("feature_names length does not match feature count")
        self.feature_names = list(self.feature_names)
        self.sort_index = np.stack(
            [np.argsort(x[:, j], kind="stable") for j in range(x.shape[1])]
        )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.target[rows], self.task, self.feature_names)


@dataclass(frozen=True, order=True)
class Proposition:
    """Threshold literal ``sign * x[feature] >= sign * threshold``."""

    feature: int
    sign: int
    threshold: float

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        col = x[:, self.feature]
        if self.sign > 0:
            return col >= self.threshold
        return col <= self.threshold

    def describe(self, names: Sequence[str] | None = None) -> str:
        name = names[self.feature] if names is not None else f"x{self.feature + 1}"
        op = ">=" if self.sign > 0 else "<="
        return f"{name} {op} {self.threshold:.6g}"


def normalize_propositions(props) -> tuple[Proposition, ...]:
    """Keep only the tightest threshold per (feature, sign), sorted."""
    tight: dict[tuple[int, int], float] = {}
    for p in props:
        key = (p.feature, p.sign)
        if key not in tight:
            tight[key] = p.threshold
        elif p.sign > 0:
            tight[key] = max(tight[key], p.threshold)
        else:
            tight[key] = min(tight[key], p.threshold)
    return tuple(sorted(Proposition(f, s, t) for (f, s), t in tight.items()))


class Query:
    """Conjunction of propositions. The empty conjunction selects every row."""

    __slots__ = ("propositions", "selected")

    def __init__(self, propositions=(), selected=None):
        self.propositions = normalize_propositions(propositions)
        self.selected = None if selected is None else np.asarray(selected, dtype=np.int64)

    def __len__(self):
        return len(self.propositions)

    def __eq__(self, other):
        return isinstance(other, Query) and self.propositions == other.propositions

    def __hash__(self):
        return hash(self.propositions)

    def __repr__(self):
        return f"Query({list(self.propositions)!r})"

    @property
    def output_norm_sq(self) -> int:
        if self.selected is None:
            raise ValueError("query is not bound to a dataset; call evaluate_query first")
        return int(self.selected.size)

    def mask(self, x: np.ndarray) -> np.ndarray:
        m = np.ones(x.shape[0], dtype=bool)
        for p in self.propositions:
            m &= p.evaluate(x)
        return m

    def conjoin(self, prop: Proposition) -> "Query":
        return Query(self.propositions + (prop,))

    def describe(self, names=None) -> str:
        if not self.propositions:
            return "TRUE"
        return " AND ".join(p.describe(names) for p in self.propositions)


def evaluate_query(q: Query, ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Return (ascending selected row indices, binary output vector); caches the selection."""
    for p in q.propositions:
        if not 0 <= p.feature < ds.d:
            raise IndexError(f"proposition feature {p.feature} out of range for d={ds.d}")
    m = q.mask(ds.features)
    q.selected = np.flatnonzero(m)
    return q.selected, m.astype(np.float64)


@dataclass
class RuleEnsemble:
    """``f(x) = offset + sum_i weight_i * q_i(x)``."""

    offset: float = 0.0
    queries: list[Query] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    loss: str = "squared"

    @property
    def k(self) -> int:
        return len(self.queries)

    @property
    def complexity(self) -> int:
        return self.k + sum(len(q) for q in self.queries)

    @property
    def rules(self):
        return list(zip(self.queries, self.weights))

    def decision_function(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        f = np.full(x.shape[0], float(self.offset))
        for q, w in zip(self.queries, self.weights):
            f[q.mask(x)] += w
        return f

    def predict(self, x) -> np.ndarray:
        from .losses import predict_mean

        return predict_mean(self.loss, self.decision_function(x))

    def describe(self, names=None) -> str:
        lines = [f"offset {self.offset:+.6g}"]
        for q, w in zip(self.queries, self.weights):
            lines.append(f"IF {q.describe(names)} THEN {w:+.6g}")
        return "\n".join(lines)


class OrthoBasis:
    """Orthonormal basis of the span of the selected query output vectors.

    Columns are stored as rows of a (t, n) C-contiguous array so the prefix
    kernels can stream one basis vector at a time.
    """

    REORTH_EVERY = 32
    REORTH_TOL = 1e-8

    def __init__(self, n: int):
        self.n = int(n)
        self._cols = np.empty((0, self.n))
        self.source_norms: list[float] = []

    def __len__(self):
        return self._cols.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """(t, n) array whose rows are the basis vectors."""
        return self._cols

    @property
    def columns(self) -> list[np.ndarray]:
        return list(self._cols)

    def copy(self) -> "OrthoBasis":
        b = OrthoBasis(self.n)
        b._cols = self._cols.copy()
        b.source_norms = list(self.source_norms)
        return b

    def gram_error(self) -> float:
        if len(self) == 0:
            return 0.0
        gram = self._cols @ self._cols.T
        return float(np.max(np.abs(gram - np.eye(len(self)))))

    def _reorthogonalize(self):
        cols = self._cols.copy()
        for a in range(cols.shape[0]):
            for b in range(a):
                cols[a] -= (cols[b] @ cols[a]) * cols[b]
            cols[a] /= np.linalg.norm(cols[a])
        self._cols = np.ascontiguousarray(cols)


def project_out(basis: OrthoBasis, v) -> tuple[np.ndarray, np.ndarray]:
    """Remove the span of ``basis`` from ``v``; returns (v_perp, coefficients)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (basis.n,):
        raise ValueError(f"vector of length {v.shape} does not match basis dimension {basis.n}")
    if len(basis) == 0:
        return v.copy(), np.zeros(0)
    coef = basis.matrix @ v
    return v - basis.matrix.T @ coef, coef


def extend_basis(basis: OrthoBasis, q_output) -> tuple[OrthoBasis, bool]:
    """Append the normalized orthogonal part of ``q_output``.

    Returns ``(basis, accepted)``. A query whose orthogonal part has norm at
    most ``REDUNDANCY_TOL`` is rejected and the basis is left untouched.
    """
    q = np.asarray(q_output, dtype=np.float64)
    q_perp, _ = project_out(basis, q)
    # second pass restores orthogonality lost to cancellation
    q_perp, _ = project_out(basis, q_perp)
    norm = float(np.linalg.norm(q_perp))
    if norm <= REDUNDANCY_TOL:
        return basis, False
    basis._cols = np.ascontiguousarray(np.vstack([basis._cols, q_perp / norm]))
    basis.source_norms.append(norm)
    if len(basis) % OrthoBasis.REORTH_EVERY == 0 and basis.gram_error() > OrthoBasis.REORTH_TOL:
        basis._reorthogonalize()
    return basis, True
