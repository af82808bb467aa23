"""Boosting driver, complexity/risk trade-off sweep, cross-validated
selection of the regularization strength and coverage comparison."""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Dataset, OrthoBasis, Query, RuleEnsemble, evaluate_query, extend_basis
from .losses import TASK_LOSS, check_targets, gradient, hessian_diag, risk
from .objectives import DEFAULT_EPSILON, OGB, XGB, ObjectiveKind
from .search import SearchConfig, search
from .weights import (
    CORRECTIVE,
    STAGEWISE,
    UPDATES,
    XGB_CLOSED_FORM,
    corrective_fit,
    fit_offset,
    line_search_weight,
    xgb_weight,
)

CV_GRID = tuple(10.0 ** a for a in (-2, -1, 0, 1, 2))
CV_FOLDS = 5

STOP_RULES = "max_rules"
STOP_COMPLEXITY = "max_complexity"
STOP_NO_QUERY = "no_improving_query"
STOP_REDUNDANT = "redundant_query"


def worker_count() -> int:
    """Thread cap from ``RULECRAFT_THREADS`` (default 1)."""
    raw = os.environ.get("RULECRAFT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class BoostConfig:
    """Method configuration.

    ``search`` is a string (``greedy``, ``beam:W``, ``bnb``, ``exhaustive``)
    or a ready ``SearchConfig``. ``lam=None`` together with ``cv=True``
    selects the strength per rule count by five-fold cross-validation.
    The same ``lam`` also enters the xgb objective's denominator.
    """

    objective: str = OGB
    update: str = CORRECTIVE
    search: str | SearchConfig = "beam:10"
    loss: str | None = None
    lam: float = 0.0
    cv: bool = False
    epsilon: float = DEFAULT_EPSILON
    max_complexity: int = 50
    max_rules: int | None = None
    max_propositions: int | None = None
    seed: int = 0
    fit_offset: bool = True

    def __post_init__(self):
        if self.update not in UPDATES:
            raise ValueError(f"unknown update {self.update!r}; expected one of {UPDATES}")
        if self.update == XGB_CLOSED_FORM and self.objective != XGB:
            raise ValueError("the xgb closed-form update requires the xgb objective")
        if self.max_complexity < 2:
            raise ValueError("max_complexity must be >= 2")
        if self.max_rules is not None and self.max_rules < 0:
            raise ValueError("max_rules must be >= 0")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and >= 0")
        self.objective_kind()
        self.search_config()

    def objective_kind(self) -> ObjectiveKind:
        return ObjectiveKind(self.objective, self.epsilon, self.lam)

    def search_config(self) -> SearchConfig:
        if isinstance(self.search, SearchConfig):
            return replace(self.search, objective=self.objective_kind())
        return SearchConfig.from_string(self.search, self.objective_kind(), self.max_propositions)

    def loss_for(self, ds: Dataset) -> str:
        return self.loss or TASK_LOSS[ds.task]

    @property
    def label(self) -> str:
        name = self.search if isinstance(self.search, str) else "custom"
        return f"{self.objective}+{self.update}+{name}"


@dataclass
class RoundLog:
    """``train_risk`` is the plain mean loss; ``objective`` adds the penalty."""

    k: int
    complexity: int
    train_risk: float
    objective: float
    value: float
    seconds: float
    rule: str


@dataclass
class BoostResult:
    """All ensembles f0..fk of one run; ``ensembles[k]`` has ``k`` rules."""

    ensembles: list[RuleEnsemble]
    log: list[RoundLog]
    stop_reason: str
    lam: float
    elapsed: list[float] = field(default_factory=list)

    @property
    def final(self) -> RuleEnsemble:
        return self.ensembles[-1]


def boost(ds: Dataset, cfg: BoostConfig, backend=None) -> BoostResult:
    """Grow a rule ensemble one rule per round until a stopping condition."""
    loss = cfg.loss_for(ds)
    check_targets(loss, ds.target)
    scfg = cfg.search_config()
    lam = cfg.lam
    y = ds.target
    n = ds.n
    start = time.perf_counter()

    offset = fit_offset(ds, loss) if cfg.fit_offset else 0.0
    f = np.full(n, offset)
    queries: list[Query] = []
    weights = np.zeros(0)
    cols: list[np.ndarray] = []
    basis = OrthoBasis(n)
    ensembles = [RuleEnsemble(offset, [], [], loss)]
    elapsed = [time.perf_counter() - start]
    log: list[RoundLog] = []
    stop = STOP_RULES
    needs_basis = cfg.update == CORRECTIVE or cfg.objective == OGB

    while True:
        if cfg.max_rules is not None and len(queries) >= cfg.max_rules:
            stop = STOP_RULES
            break
        g = gradient(loss, f, y)
        h = hessian_diag(loss, f, y) if cfg.objective == XGB else None
        res = search(ds, g, h, basis, scfg, backend=backend)
        q = res.query
        if q is None:
            stop = STOP_NO_QUERY
            break
        if ensembles[-1].complexity + 1 + len(q) > cfg.max_complexity:
            stop = STOP_COMPLEXITY
            break
        _, qvec = evaluate_query(q, ds)
        if needs_basis:
            _, accepted = extend_basis(basis, qvec)
            if not accepted:
                stop = STOP_REDUNDANT
                break
        queries.append(q)
        cols.append(qvec)
        if cfg.update == STAGEWISE:
            weights = np.append(weights, line_search_weight(loss, f, y, qvec, lam))
        elif cfg.update == XGB_CLOSED_FORM:
            weights = np.append(weights, xgb_weight(qvec, g, hessian_diag(loss, f, y), lam))
        else:
            Q = np.column_stack(cols)
            weights = corrective_fit(loss, ds, offset, queries, lam,
                                     init=np.append(weights, 0.0), Q=Q)
        f = offset + np.column_stack(cols) @ weights
        ens = RuleEnsemble(offset, list(queries), [float(w) for w in weights], loss)
        ensembles.append(ens)
        now = time.perf_counter() - start
        elapsed.append(now)
        plain = ensemble_risk(ens, ds)
        penalized = plain + lam * float(weights @ weights) / n
        log.append(RoundLog(ens.k, ens.complexity, plain, penalized, res.value, now,
                            f"IF {q.describe(ds.feature_names)} THEN {weights[-1]:+.6g}"))
    return BoostResult(ensembles, log, stop, lam, elapsed)


def ensemble_risk(ens: RuleEnsemble, ds: Dataset) -> float:
    """Unregularized empirical risk of ``ens`` on ``ds``."""
    return risk(ens.loss, ens.decision_function(ds.features), ds.target)


def _kfold(n: int, folds: int, seed: int):
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cv_risk_table(train: Dataset, cfg: BoostConfig, grid=CV_GRID, folds=CV_FOLDS,
                  max_k: int | None = None) -> np.ndarray:
    """Mean held-out risk, shape (len(grid), max_k + 1).

    A fold run that stopped before ``k`` rules contributes its last ensemble.
    """
    if train.n < folds:
        raise ValueError(f"cross-validation needs at least {folds} rows")
    parts = _kfold(train.n, folds, cfg.seed)
    jobs = [(lam, i) for lam in grid for i in range(folds)]

    def run(job):
        lam, i = job
        test_idx = parts[i]
        train_idx = np.sort(np.concatenate([p for j, p in enumerate(parts) if j != i]))
        sub = replace(cfg, lam=lam, cv=False)
        if max_k is not None:
            sub = replace(sub, max_rules=max_k if cfg.max_rules is None else min(max_k, cfg.max_rules))
        res = boost(train.subset(train_idx), sub)
        held = train.subset(np.sort(test_idx))
        return [ensemble_risk(e, held) for e in res.ensembles]

    curves = _pmap(run, jobs)
    width = max(len(c) for c in curves) if max_k is None else max_k + 1
    table = np.zeros((len(grid), width))
    for (lam, i), c in zip(jobs, curves):
        row = grid.index(lam)
        padded = np.array(c + [c[-1]] * (width - len(c)))[:width]
        table[row] += padded / folds
    return table


def select_from_table(table: np.ndarray, k: int, grid=CV_GRID) -> float:
    """Grid value with the smallest CV risk at ``k``; ties go to the smaller value."""
    col = table[:, min(k, table.shape[1] - 1)]
    best = col.min()
    tied = np.flatnonzero(np.isclose(col, best, rtol=1e-12, atol=0.0))
    return float(sorted(grid[i] for i in tied)[0])


def cv_select_lambda(train: Dataset, k: int, cfg: BoostConfig, grid=CV_GRID) -> float:
    """Regularization strength for ``k``-rule ensembles by five-fold CV."""
    grid = tuple(sorted(grid))
    return select_from_table(cv_risk_table(train, cfg, grid, max_k=k), k, grid)


@dataclass
class TradeoffPoint:
    k: int
    complexity: int
    train_risk: float
    test_risk: float
    lambda_used: float
    wall_time: float
    train_risk_norm: float = float("nan")
    test_risk_norm: float = float("nan")


def _normalized(value, base):
    if base > 0:
        return value / base
    return 0.0 if value == 0 else float("inf")


def sweep_tradeoff(train: Dataset, test: Dataset, cfg: BoostConfig) -> list[TradeoffPoint]:
    """Risk of ensembles with k = 0, 1, ... rules until the complexity budget is spent.

    Risks are also reported relative to the offset-only ensemble. With
    ``cfg.cv`` each k gets its own cross-validated strength; one boosting
    run per grid value supplies every k, since runs are nested in k.
    """
    if train.d != test.d:
        raise ValueError("train and test feature counts differ")
    if cfg.cv:
        grid = tuple(sorted(CV_GRID))
        table = cv_risk_table(train, cfg, grid)
        runs = dict(zip(grid, _pmap(lambda lam: boost(train, replace(cfg, lam=lam, cv=False)), grid)))
        lam_for = lambda k: select_from_table(table, k, grid)  # noqa: E731
    else:
        run = boost(train, cfg)
        runs = {cfg.lam: run}
        lam_for = lambda k: cfg.lam  # noqa: E731

    base = next(iter(runs.values())).ensembles[0]
    base_train = ensemble_risk(base, train)
    base_test = ensemble_risk(base, test)
    points = []
    k = 0
    while True:
        lam = lam_for(k)
        run = runs[lam]
        if k >= len(run.ensembles):
            break
        ens = run.ensembles[k]
        tr, te = ensemble_risk(ens, train), ensemble_risk(ens, test)
        points.append(TradeoffPoint(k, ens.complexity, tr, te, lam, run.elapsed[k],
                                    _normalized(tr, base_train), _normalized(te, base_test)))
        k += 1
    return points


def risk_at_complexity(points, levels) -> np.ndarray:
    """Best train risk among points with complexity <= each level (step function)."""
    out = np.full(len(levels), np.inf)
    for i, c in enumerate(levels):
        vals = [p.train_risk for p in points if p.complexity <= c]
        if vals:
            out[i] = min(vals)
    return out


@dataclass
class CoverageRound:
    round: int
    base_coverage: float
    ogb_coverage: float


def coverage_compare(ds: Dataset, base_objective, rounds: int, epsilon=DEFAULT_EPSILON,
                     search_spec="beam:10", loss=None, fit_offset_=True, lam=0.0) -> list[CoverageRound]:
    """Coverage of the base learner's rule next to the ogb choice from the same state.

    The ensemble grows with ``base_objective`` and stagewise line-search
    weights; each round also asks which query ogb would have chosen.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    base_kind = base_objective if isinstance(base_objective, ObjectiveKind) else ObjectiveKind(
        base_objective, epsilon, lam)
    ogb_kind = ObjectiveKind(OGB, epsilon, lam)
    base_cfg = SearchConfig.from_string(search_spec, base_kind)
    ogb_cfg = SearchConfig.from_string(search_spec, ogb_kind)
    loss = loss or TASK_LOSS[ds.task]
    check_targets(loss, ds.target)
    y = ds.target
    offset = fit_offset(ds, loss) if fit_offset_ else 0.0
    f = np.full(ds.n, offset)
    basis = OrthoBasis(ds.n)
    out: list[CoverageRound] = []
    for t in range(rounds):
        g = gradient(loss, f, y)
        h = hessian_diag(loss, f, y)
        res = search(ds, g, h, basis, base_cfg)
        if res.query is None:
            break
        alt = search(ds, g, h, basis, ogb_cfg).query
        _, qvec = evaluate_query(res.query, ds)
        alt_cov = 0.0 if alt is None else alt.selected.size / ds.n
        out.append(CoverageRound(t + 1, res.query.selected.size / ds.n, alt_cov))
        f = f + line_search_weight(loss, f, y, qvec, lam) * qvec
        extend_basis(basis, qvec)
    return out


__all__ = [
    "BoostConfig", "BoostResult", "CV_GRID", "CoverageRound", "RoundLog", "TradeoffPoint",
    "boost", "coverage_compare", "cv_risk_table", "cv_select_lambda", "ensemble_risk",
    "risk_at_complexity", "select_from_table", "sweep_tradeoff", "worker_count",
]
