"""Single-rule base learner.

One layered search engine covers greedy (width 1), beam (finite width) and
branch-and-bound (unbounded width with bounding). Each dequeued node is
expanded by scanning, for every feature and direction, the node's rows in
feature order; all prefixes of such a scan are evaluated at once by
``kernels.prefix_scan``.
"""
from __future__ import annotations

import heapq
import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import Dataset, OrthoBasis, Proposition, Query, project_out
from .kernels import prefix_scan
from .objectives import GB, GS, OGB, XGB, ObjectiveKind

TIE_TOL = 1e-12
_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class SearchConfig:
    """``width=None`` means unbounded (branch-and-bound when ``bounding``)."""

    width: int | None = None
    objective: ObjectiveKind = field(default_factory=ObjectiveKind)
    max_propositions: int | None = None
    bounding: bool = True

    def __post_init__(self):
        if self.width is not None and self.width < 1:
            raise ValueError("width must be >= 1")
        if self.max_propositions is not None and self.max_propositions < 1:
            raise ValueError("max_propositions must be >= 1")

    @classmethod
    def from_string(cls, text: str, objective: ObjectiveKind, max_propositions=None):
        """Parse ``greedy``, ``beam:W``, ``bnb`` or ``exhaustive``."""
        text = text.strip().lower()
        if text == "greedy":
            return cls(1, objective, max_propositions, bounding=False)
        if text == "bnb":
            return cls(None, objective, max_propositions, bounding=True)
        if text == "exhaustive":
            return cls(None, objective, max_propositions, bounding=False)
        m = re.fullmatch(r"beam:(\d+)", text)
        if m:
            return cls(int(m.group(1)), objective, max_propositions, bounding=False)
        raise ValueError(f"unknown search {text!r}; expected greedy, beam:W, bnb or exhaustive")


@dataclass
class SearchNode:
    value: float
    query: Query
    selected: np.ndarray


@dataclass
class SearchResult:
    query: Query | None
    value: float
    nodes_expanded: int = 0
    nodes_pruned: int = 0


@lru_cache(maxsize=64)
def row_keys(n: int) -> np.ndarray:
    """Fixed random 64-bit keys; the xor over a row set is its fingerprint."""
    return np.random.default_rng(0x5EED).integers(0, 2**64, size=n, dtype=np.uint64)


def set_fingerprint(rows, n: int) -> int:
    rows = np.asarray(rows, dtype=np.int64)
    return int(np.bitwise_xor.reduce(row_keys(n)[rows])) if rows.size else 0


def orthogonal_gradient(g, basis: OrthoBasis) -> np.ndarray:
    """``g`` with the basis span removed; skipped when already orthogonal."""
    g = np.asarray(g, dtype=np.float64)
    if len(basis) == 0:
        return g
    coef = basis.matrix @ g
    if np.max(np.abs(coef)) <= _ORTHO_TOL * max(1.0, float(np.linalg.norm(g))):
        return g
    return project_out(basis, g)[0]


def prefix_values(g_perp, basis: OrthoBasis, order, epsilon: float, backend=None) -> np.ndarray:
    """Orthogonal boosting objective of every prefix of ``order``, in O(t * len(order))."""
    order = np.asarray(order, dtype=np.int64)
    if order.size != np.unique(order).size:
        raise ValueError("order must not repeat rows")
    g_perp = np.asarray(g_perp, dtype=np.float64)
    vals, _ = prefix_scan(order, g_perp, g_perp, basis.matrix, row_keys(g_perp.size), OGB,
                          eps=epsilon, backend=backend)
    return vals


def prefix_argmax(g_perp, basis: OrthoBasis, order, epsilon: float) -> tuple[int, float]:
    """1-based index of the best prefix; ties go to the shorter prefix."""
    if len(order) == 0:
        return 0, 0.0
    vals = prefix_values(g_perp, basis, order, epsilon)
    i = int(np.argmax(vals))
    return i + 1, float(vals[i])


def bound_heuristic(node: SearchNode, g_perp, basis: OrthoBasis, epsilon: float, phi=None) -> float:
    """Prefix-greedy bound for the orthogonal objective (not admissible).

    Scans the node's rows in ascending and descending order of the
    projected gradient and returns the best prefix value seen.
    """
    g_perp = np.asarray(g_perp, dtype=np.float64)
    if phi is None:
        phi = np.argsort(g_perp, kind="stable")
    mask = np.zeros(g_perp.size, dtype=bool)
    mask[node.selected] = True
    order = phi[mask[phi]]
    if order.size == 0:
        return 0.0
    b_plus = prefix_values(g_perp, basis, order, epsilon).max()
    b_minus = prefix_values(g_perp, basis, order[::-1], epsilon).max()
    return float(max(b_plus, b_minus))


def redundancy_check(fp: int, count: int, parent_count: int, visited: set) -> bool:
    """True when the candidate repeats its parent's selection or an enqueued one."""
    return count == parent_count or fp in visited


def _lex_key(props):
    return tuple((p.feature, p.sign, p.threshold) for p in props)


class _Incumbent:
    __slots__ = ("value", "props", "coverage")

    def __init__(self):
        self.value = 0.0
        self.props = None
        self.coverage = 0

    def offer(self, value, props, coverage) -> bool:
        if value <= 0:
            return False
        tol = TIE_TOL * max(1.0, abs(self.value))
        if self.props is None or value > self.value + tol:
            better = True
        elif value < self.value - tol:
            better = False
        else:
            better = (len(props), -coverage, _lex_key(props)) < (
                len(self.props), -self.coverage, _lex_key(self.props))
        if better:
            self.value, self.props, self.coverage = value, props, coverage
        return better


class _Child:
    __slots__ = ("value", "count", "props", "keys")

    def __init__(self, value, count, props, keys):
        self.value = value
        self.count = count
        self.props = props
        self.keys = keys


def _with_prop(props, keys, prop):
    key = (prop.feature, prop.sign)
    if key in keys:
        props = tuple(prop if (p.feature, p.sign) == key else p for p in props)
        return props, keys
    return tuple(sorted(props + (prop,))), keys | {key}


def _selection(ds: Dataset, props) -> np.ndarray:
    m = np.ones(ds.n, dtype=bool)
    for p in props:
        m &= p.evaluate(ds.features)
    return np.flatnonzero(m)


def search(ds: Dataset, g, h, basis: OrthoBasis, cfg: SearchConfig, backend=None) -> SearchResult:
    """Run the base learner and return the best query with its objective value."""
    if ds.n < 1:
        raise ValueError("empty dataset")
    kind = cfg.objective
    name = kind.name
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (ds.n,):
        raise ValueError("gradient length does not match dataset")
    if h is None:
        if name == XGB:
            raise ValueError("xgb objective needs the hessian diagonal")
        h = np.ones(ds.n)
    h = np.asarray(h, dtype=np.float64)
    gvec = orthogonal_gradient(g, basis) if name == OGB else g
    omat = basis.matrix if name == OGB else np.empty((0, ds.n))
    keys = row_keys(ds.n)
    x = ds.features

    def scan(order):
        return prefix_scan(order, gvec, h, omat, keys, name, eps=kind.epsilon, lam=kind.lam,
                           backend=backend)

    if cfg.bounding:
        bound_key = gvec / h if name == XGB else gvec
        phi = np.argsort(bound_key, kind="stable")

    best = _Incumbent()
    all_rows = np.arange(ds.n)
    root_vals, _ = scan(all_rows)
    best.offer(float(root_vals[-1]), (), ds.n)

    visited = {set_fingerprint(all_rows, ds.n)}
    layer = [_Child(float(root_vals[-1]), ds.n, (), frozenset())]
    seq = itertools.count()
    expanded = pruned = 0
    width = cfg.width
    cap = cfg.max_propositions

    while layer:
        nxt: list = []  # heap of (value, -count, -seq, child) when width is finite
        for node in layer:
            sel = all_rows if not node.props else _selection(ds, node.props)
            mask = np.zeros(ds.n, dtype=bool)
            mask[sel] = True
            if cfg.bounding:
                order = phi[mask[phi]]
                b = max(scan(order)[0].max(), scan(order[::-1])[0].max())
                if b <= best.value:
                    pruned += 1
                    continue
            expanded += 1
            for j in range(ds.d):
                sj = ds.sort_index[j]
                sigma = sj[mask[sj]]
                xs = x[sigma, j]
                if xs[0] == xs[-1]:
                    continue
                for order, sign in ((sigma, -1), (sigma[::-1], 1)):
                    xo = xs if sign < 0 else xs[::-1]
                    vals, fps = scan(order)
                    valid = np.flatnonzero(xo[:-1] != xo[1:])
                    if valid.size == 0:
                        continue
                    key = (j, sign)
                    grows = key not in node.keys
                    if cap is not None and len(node.props) + grows > cap:
                        continue
                    vv = vals[valid]
                    # incumbent candidates
                    thresh = best.value - TIE_TOL * max(1.0, best.value)
                    for pos in np.flatnonzero(vv >= thresh):
                        i = int(valid[pos])
                        props, _ = _with_prop(node.props, node.keys,
                                              Proposition(j, sign, float(xo[i])))
                        best.offer(float(vv[pos]), props, i + 1)
                    # children
                    if width is not None and len(nxt) >= width:
                        floor = nxt[0][0]
                        cand = valid[vv >= floor]
                    else:
                        cand = valid
                    for i in cand.tolist():
                        fp = int(fps[i])
                        if redundancy_check(fp, i + 1, sel.size, visited):
                            continue
                        v = float(vals[i])
                        if width is not None and len(nxt) >= width:
                            worst = nxt[0]
                            if (v, -(i + 1)) <= (worst[0], worst[1]):
                                continue
                        visited.add(fp)
                        props, pkeys = _with_prop(node.props, node.keys,
                                                  Proposition(j, sign, float(xo[i])))
                        child = _Child(v, i + 1, props, pkeys)
                        if width is None:
                            nxt.append(child)
                        else:
                            item = (v, -(i + 1), -next(seq), child)
                            if len(nxt) < width:
                                heapq.heappush(nxt, item)
                            else:
                                heapq.heapreplace(nxt, item)
        if width is None:
            layer = nxt
        else:
            layer = [item[3] for item in sorted(nxt, reverse=True)]

    if best.props is None:
        return SearchResult(None, 0.0, expanded, pruned)
    q = Query(best.props)
    q.selected = _selection(ds, q.propositions)
    return SearchResult(q, best.value, expanded, pruned)


def find_best_query(ds: Dataset, g, h, basis: OrthoBasis, cfg: SearchConfig, backend=None):
    """Best query under ``cfg``, or ``None`` when no query has positive objective."""
    return search(ds, g, h, basis, cfg, backend=backend).query
