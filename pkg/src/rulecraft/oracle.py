"""Brute-force reference implementations used to check the fast paths,
plus the greedy-bound approximation study."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, OrthoBasis, Proposition, Query, extend_basis, project_out
from .kernels import RAD_TOL
from .objectives import OGB, ObjectiveKind, objective_value
from .search import TIE_TOL, _lex_key, bound_heuristic, SearchNode

MAX_SELECTIONS = 10**6
MAX_SUBSET_POINTS = 20
APPROX_LEVELS = (0.75, 0.80, 0.85, 0.90, 0.95, 1.00)


class EnumerationLimit(RuntimeError):
    pass


def _candidate_props(ds: Dataset) -> list[Proposition]:
    props = []
    for j in range(ds.d):
        for v in np.unique(ds.features[:, j]):
            props.append(Proposition(j, -1, float(v)))
            props.append(Proposition(j, 1, float(v)))
    return props


def enumerate_queries(ds: Dataset, max_props: int, limit: int = MAX_SELECTIONS) -> list[Query]:
    """Every conjunction of at most ``max_props`` propositions, one per distinct
    nonempty selection.

    Built breadth first, so each selection is represented by a shortest
    query (lexicographically smallest among equals).
    """
    x = ds.features
    cand = [(p, p.evaluate(x)) for p in _candidate_props(ds)]
    root = Query(())
    root_mask = np.ones(ds.n, dtype=bool)
    found = {root_mask.tobytes(): (root, root_mask)}
    layer = [(root, root_mask)]
    for _ in range(max_props):
        new: dict[bytes, tuple[Query, np.ndarray]] = {}
        for q, m in layer:
            for p, pm in cand:
                child = m & pm
                if not child.any():
                    continue
                key = child.tobytes()
                if key in found:
                    continue
                cq = q.conjoin(p)
                old = new.get(key)
                if old is None or (len(cq), _lex_key(cq.propositions)) < (
                        len(old[0]), _lex_key(old[0].propositions)):
                    new[key] = (cq, child)
        found.update(new)
        if len(found) > limit:
            raise EnumerationLimit(f"more than {limit} distinct selections")
        layer = list(new.values())
        if not layer:
            break
    out = []
    for q, m in found.values():
        q.selected = np.flatnonzero(m)
        out.append(q)
    return out


def brute_force_best(ds: Dataset, g, h, basis: OrthoBasis, kind, max_props=None):
    """Exact maximizer over all enumerable queries, with the search tie-break.

    Returns ``(query, value)``; ``query`` is None when nothing scores above 0.
    """
    kind = kind if isinstance(kind, ObjectiveKind) else ObjectiveKind(kind)
    g = np.asarray(g, dtype=np.float64)
    if kind.name == OGB:
        g = project_out(basis, g)[0]
    max_props = 2 * ds.d if max_props is None else max_props
    best_q, best_v = None, 0.0
    for q in enumerate_queries(ds, max_props):
        qvec = np.zeros(ds.n)
        qvec[q.selected] = 1.0
        v = objective_value(kind, qvec, g, h, basis)
        if v <= 0:
            continue
        tol = TIE_TOL * max(1.0, abs(best_v))
        if best_q is None or v > best_v + tol:
            better = True
        elif v < best_v - tol:
            better = False
        else:
            better = (len(q), -q.selected.size, _lex_key(q.propositions)) < (
                len(best_q), -best_q.selected.size, _lex_key(best_q.propositions))
        if better:
            best_q, best_v = q, v
    return best_q, best_v


def naive_projection(queries, q) -> np.ndarray:
    """``q - Q (Q^T Q)^{-1} Q^T q`` from the raw query vectors."""
    q = np.asarray(q, dtype=np.float64)
    if len(queries) == 0:
        return q.copy()
    Q = np.column_stack([np.asarray(c, dtype=np.float64) for c in queries])
    if np.linalg.matrix_rank(Q) < Q.shape[1]:
        raise np.linalg.LinAlgError("query matrix is rank deficient")
    coef = np.linalg.solve(Q.T @ Q, Q.T @ q)
    return q - Q @ coef


def _subset_masks(m: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(np.float64)


def exact_subset_bound(node_selection, g_perp, basis: OrthoBasis, epsilon: float,
                       chunk: int = 1 << 16) -> float:
    """Largest orthogonal objective over all nonempty subsets of the node's rows."""
    sel = np.asarray(node_selection, dtype=np.int64)
    m = sel.size
    if m > MAX_SUBSET_POINTS:
        raise EnumerationLimit(f"subset bound limited to {MAX_SUBSET_POINTS} points, got {m}")
    if m == 0:
        return 0.0
    gs = np.asarray(g_perp, dtype=np.float64)[sel]
    osel = basis.matrix[:, sel]
    best = 0.0
    total = 1 << m
    for lo in range(1, total, chunk):
        M = _subset_masks(m, lo, min(total, lo + chunk))
        size = M.sum(axis=1)
        inner = np.abs(M @ gs)
        proj = M @ osel.T
        nsq = size - np.einsum("ij,ij->i", proj, proj)
        ok = nsq > RAD_TOL * size
        vals = np.where(ok, inner / (np.sqrt(np.where(ok, nsq, 1.0)) + epsilon), 0.0)
        best = max(best, float(vals.max()))
    return best


def full_greedy_bound(node_selection, g_perp, basis: OrthoBasis, epsilon: float) -> float:
    """Grow a point set one best point at a time; best value along the path.

    Run once for each sign of the inner product, since the objective uses
    its absolute value.
    """
    sel = np.asarray(node_selection, dtype=np.int64)
    g = np.asarray(g_perp, dtype=np.float64)
    O = basis.matrix
    best = 0.0
    for sign in (1.0, -1.0):
        remaining = list(sel)
        inner = 0.0
        size = 0
        proj = np.zeros(O.shape[0])
        while remaining:
            idx = np.asarray(remaining)
            cand_inner = inner + sign * g[idx]
            cand_proj = proj[:, None] + O[:, idx]
            cand_size = size + 1
            nsq = cand_size - np.einsum("ij,ij->j", cand_proj, cand_proj)
            ok = nsq > RAD_TOL * cand_size
            vals = np.where(ok, cand_inner / (np.sqrt(np.where(ok, nsq, 1.0)) + epsilon), -np.inf)
            pick = int(np.argmax(vals))
            i = remaining.pop(pick)
            inner += sign * g[i]
            size += 1
            proj = proj + O[:, i]
            if np.isfinite(vals[pick]):
                best = max(best, abs(float(vals[pick])))
    return best


@dataclass
class BoundStudyConfig:
    instances: int = 2000
    points: int = 15
    existing_rules: int = 5
    epsilons: tuple = (0.001, 0.1, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if not 1 <= self.points <= MAX_SUBSET_POINTS:
            raise ValueError(f"points must be in [1, {MAX_SUBSET_POINTS}]")
        if self.existing_rules < 0:
            raise ValueError("existing_rules must be >= 0")
        if not self.epsilons or any(not (e >= 0) for e in self.epsilons):
            raise ValueError("epsilons must be a nonempty list of nonnegative values")
        self.epsilons = tuple(float(e) for e in self.epsilons)


@dataclass
class BoundStudyResult:
    config: BoundStudyConfig
    prefix_ratio: dict = field(default_factory=dict)   # eps -> array of ratios
    full_ratio: dict = field(default_factory=dict)

    def table(self, which="prefix") -> dict:
        """{level: {eps: fraction of instances with ratio >= level}}."""
        ratios = self.prefix_ratio if which == "prefix" else self.full_ratio
        # a hair of slack so ratios that are exactly 1 up to rounding count as 100%
        return {lvl: {e: float(np.mean(ratios[e] >= lvl - 1e-12)) for e in self.config.epsilons}
                for lvl in APPROX_LEVELS}

    def to_csv(self, which="prefix") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        eps = self.config.epsilons
        w.writerow(["approx_rate"] + [f"eps={e:g}" for e in eps])
        for lvl, row in self.table(which).items():
            w.writerow([f"{lvl:.0%}"] + [f"{100 * row[e]:.2f}%" for e in eps])
        return buf.getvalue()


def _ratio(approx, exact):
    return 1.0 if exact <= 0 else approx / exact


def bound_instance(rng: np.random.Generator, cfg: BoundStudyConfig):
    """Draw one instance; returns (g_perp, basis)."""
    n = cfg.points
    basis = OrthoBasis(n)
    for _ in range(cfg.existing_rules):
        extend_basis(basis, (rng.random(n) < 0.5).astype(np.float64))
    g = rng.standard_normal(n)
    return project_out(basis, g)[0], basis


def run_bound_study(cfg: BoundStudyConfig | None = None) -> BoundStudyResult:
    """Approximation ratio of the prefix-greedy and full-greedy bounds to the exact one."""
    cfg = cfg or BoundStudyConfig()
    rng = np.random.default_rng(cfg.seed)
    res = BoundStudyResult(cfg, {e: np.empty(cfg.instances) for e in cfg.epsilons},
                           {e: np.empty(cfg.instances) for e in cfg.epsilons})
    rows = np.arange(cfg.points)
    for i in range(cfg.instances):
        g_perp, basis = bound_instance(rng, cfg)
        node = SearchNode(0.0, Query(()), rows)
        phi = np.argsort(g_perp, kind="stable")
        for e in cfg.epsilons:
            exact = exact_subset_bound(rows, g_perp, basis, e)
            res.prefix_ratio[e][i] = _ratio(bound_heuristic(node, g_perp, basis, e, phi), exact)
            res.full_ratio[e][i] = _ratio(full_greedy_bound(rows, g_perp, basis, e), exact)
    return res


__all__ = [
    "APPROX_LEVELS", "BoundStudyConfig", "BoundStudyResult", "EnumerationLimit",
    "bound_instance", "brute_force_best", "enumerate_queries", "exact_subset_bound",
    "full_greedy_bound", "naive_projection", "run_bound_study",
]
