"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 configuration error,
3 data error. Every output file is written to a temporary name and then
renamed into place.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .boosting import (
    BoostConfig,
    boost,
    coverage_compare,
    cv_select_lambda,
    ensemble_risk,
    sweep_tradeoff,
)
from .core import BINARY, COUNT, REGRESSION, DataError, Dataset
from .data_io import (
    GENERATORS,
    ModelFormatError,
    align_features,
    atomic_write_text,
    gen_synthetic,
    load_csv,
    parse_model,
    save_csv,
    serialize_model,
    split,
)
from .losses import LOSSES, risk
from .objectives import DEFAULT_EPSILON, OBJECTIVES, ObjectiveKind
from .oracle import BoundStudyConfig, run_bound_study
from .search import SearchConfig
from .weights import UPDATES

TASK_FLAGS = {"reg": REGRESSION, "binary": BINARY, "count": COUNT}


class ConfigError(ValueError):
    pass


def _search_spec(text):
    try:
        SearchConfig.from_string(text, ObjectiveKind())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (np.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0: {text!r}")
    return v


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_data(p, target_required=True):
    p.add_argument("--data", required=True, help="input CSV with a header row")
    p.add_argument("--target", default="y" if target_required else None,
                   help="name of the target column (default: y)")
    p.add_argument("--task", choices=sorted(TASK_FLAGS), default="reg",
                   help="reg (squared loss), binary (logistic, labels 0/1 or -1/+1) "
                        "or count (poisson)")


def _add_method(p):
    p.add_argument("--loss", choices=LOSSES, help="loss function (default: from --task)")
    p.add_argument("--objective", choices=OBJECTIVES, default="ogb",
                   help="query objective (default: ogb)")
    p.add_argument("--update", choices=UPDATES, default="corrective",
                   help="weight update (default: corrective)")
    p.add_argument("--search", type=_search_spec, default="beam:10",
                   help="greedy, beam:W, bnb or exhaustive (default: beam:10; bnb is exact "
                        "but exponential on more than a few dozen rows)")
    p.add_argument("--max-propositions", type=int, default=None,
                   help="cap on propositions per rule (default: none)")
    p.add_argument("--epsilon", type=_nonneg_float, default=DEFAULT_EPSILON,
                   help=f"ogb denominator offset (default: {DEFAULT_EPSILON})")
    reg = p.add_mutually_exclusive_group()
    reg.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.0,
                     help="L2 penalty on rule weights (default: 0)")
    reg.add_argument("--cv", action="store_true",
                     help="pick the penalty from 0.01..100 by five-fold cross-validation")
    p.add_argument("--rules", type=int, default=None, help="maximum number of rules")
    p.add_argument("--max-complexity", type=int, default=50,
                   help="stop before rules plus propositions exceed this (default: 50)")
    p.add_argument("--seed", type=int, default=0, help="seed for folds and splits (default: 0)")
    p.add_argument("--no-offset", action="store_true",
                   help="start from the zero model instead of the fitted constant")


def _config(args) -> BoostConfig:
    try:
        return BoostConfig(
            objective=args.objective, update=args.update, search=args.search, loss=args.loss,
            lam=args.lam, cv=args.cv, epsilon=args.epsilon, max_complexity=args.max_complexity,
            max_rules=args.rules, max_propositions=args.max_propositions, seed=args.seed,
            fit_offset=not args.no_offset)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load(args) -> Dataset:
    return load_csv(args.data, args.target, TASK_FLAGS[args.task])


def _emit(text, out):
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_train(args):
    cfg = _config(args)
    if cfg.cv and cfg.max_rules is None:
        raise ConfigError("--cv needs --rules to know which ensemble size to tune for")
    ds = _load(args)
    if cfg.cv:
        lam = cv_select_lambda(ds, cfg.max_rules, cfg)
        cfg = replace(cfg, lam=lam, cv=False)
        print(f"cv selected lambda={lam:g}")
    res = boost(ds, cfg)
    ens = res.final
    print(f"k=0 complexity=0 train_risk={ensemble_risk(res.ensembles[0], ds):.10g} "
          f"offset={ens.offset:+.6g}")
    for r in res.log:
        print(f"k={r.k} complexity={r.complexity} train_risk={r.train_risk:.10g} {r.rule}")
    print(f"stopped: {res.stop_reason}; final train risk {ensemble_risk(ens, ds)!r}")
    meta = {"objective": cfg.objective, "update": cfg.update, "search": str(cfg.search),
            "lambda": cfg.lam, "epsilon": cfg.epsilon, "seed": cfg.seed,
            "max_complexity": cfg.max_complexity, "fit_offset": cfg.fit_offset}
    text = serialize_model(ens, ds.feature_names, meta)
    if args.out:
        atomic_write_text(args.out, text)


def _read_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_model(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc.strerror}") from None


def _model_inputs(args):
    ens, names, meta = _read_model(args.model)
    ds = load_csv(args.data, args.target, TASK_FLAGS[args.task])
    return ens, names, ds, align_features(ds, names)


def cmd_predict(args):
    ens, _, _, x = _model_inputs(args)
    f = ens.decision_function(x)
    mean = np.atleast_1d(ens.predict(x))
    rows = [[repr(float(a)), repr(float(b))] for a, b in zip(f, mean)]
    _emit(_csv_text(["f", "prediction"], rows), args.out)


def cmd_evaluate(args):
    ens, names, ds, x = _model_inputs(args)
    data = Dataset(x, ds.target, ds.task, names)
    raw = ensemble_risk(ens, data)
    base = risk(ens.loss, np.full(data.n, ens.offset), data.target)
    norm = raw / base if base > 0 else (0.0 if raw == 0 else float("inf"))
    lines = [f"risk={raw!r} risk_norm={norm!r} complexity={ens.complexity} rules={ens.k}"]
    for i, q in enumerate(ens.queries, 1):
        cov = float(q.mask(x).mean())
        lines.append(f"rule {i} coverage={cov:.6g} IF {q.describe(names)} THEN {ens.weights[i - 1]:+.6g}")
    _emit("\n".join(lines) + "\n", args.out)


def cmd_tradeoff(args):
    cfg = _config(args)
    ds = _load(args)
    if args.test:
        train, test = ds, load_csv(args.test, args.target, TASK_FLAGS[args.task])
        if test.feature_names != train.feature_names:
            raise DataError("train and test files have different feature columns")
    else:
        try:
            train, test = split(ds, args.split, args.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    points = sweep_tradeoff(train, test, cfg)
    rows = [[cfg.label, p.k, p.complexity, repr(p.lambda_used), repr(p.train_risk_norm),
             repr(p.test_risk_norm), "0" if args.no_timing else f"{p.wall_time:.6f}"]
            for p in points]
    header = ["method", "k", "complexity", "lambda", "train_risk_norm", "test_risk_norm", "seconds"]
    _emit(_csv_text(header, rows), args.out)


def cmd_coverage(args):
    if args.rounds < 0:
        raise ConfigError("--rounds must be >= 0")
    ds = _load(args)
    rounds = coverage_compare(ds, args.base, args.rounds, epsilon=args.epsilon,
                              search_spec=args.search, loss=args.loss,
                              fit_offset_=not args.no_offset)
    rows = [[r.round, repr(r.base_coverage), repr(r.ogb_coverage)] for r in rounds]
    _emit(_csv_text(["round", f"{args.base}_coverage", "ogb_coverage"], rows), args.out)
    if rounds:
        share = np.mean([r.ogb_coverage > r.base_coverage for r in rounds])
        print(f"ogb covers more rows in {100 * share:.1f}% of {len(rounds)} rounds", file=sys.stderr)


def cmd_bound_study(args):
    try:
        cfg = BoundStudyConfig(args.instances, args.points, args.existing_rules,
                               tuple(args.epsilons), args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = run_bound_study(cfg)
    _emit(res.to_csv(args.greedy), args.out)


def cmd_gen_data(args):
    params = {}
    for item in args.param or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = float(val)
        except ValueError:
            raise ConfigError(f"--param {key} must be numeric") from None
    try:
        ds = gen_synthetic(args.name, params, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    save_csv(ds, args.out, args.target)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rulecraft", description="Additive rule ensembles by boosting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a rule ensemble and write a model file")
    _add_data(p)
    _add_method(p)
    p.add_argument("--out", help="model file to write")
    p.set_defaults(func=cmd_train)

    for name, func, hlp in (("predict", cmd_predict, "per-row model output and prediction"),
                            ("evaluate", cmd_evaluate, "risk, complexity and rule coverage")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--model", required=True, help="model file from train")
        _add_data(p, target_required=name == "evaluate")
        p.add_argument("--out", help="output file (default: stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("tradeoff", help="risk against complexity for k = 0, 1, ... rules")
    _add_data(p)
    _add_method(p)
    p.add_argument("--test", help="test CSV; without it the data is split")
    p.add_argument("--split", type=float, default=0.8, help="train fraction (default: 0.8)")
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 in the seconds column so reruns are byte-identical")
    p.add_argument("--out", help="CSV to write (default: stdout)")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("coverage", help="coverage of base-objective rules against ogb choices")
    _add_data(p)
    p.add_argument("--base", choices=[o for o in OBJECTIVES if o != "ogb"], default="gb",
                   help="objective that grows the ensemble (default: gb)")
    p.add_argument("--rounds", type=int, default=10, help="number of rules (default: 10)")
    p.add_argument("--epsilon", type=_nonneg_float, default=DEFAULT_EPSILON)
    p.add_argument("--search", type=_search_spec, default="beam:10")
    p.add_argument("--loss", choices=LOSSES)
    p.add_argument("--no-offset", action="store_true")
    p.add_argument("--out", help="CSV to write (default: stdout)")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("bound-study", help="approximation quality of the greedy bound")
    p.add_argument("--instances", type=int, default=2000)
    p.add_argument("--points", type=int, default=15)
    p.add_argument("--existing-rules", type=int, default=5)
    p.add_argument("--epsilons", type=_float_list, default=[0.001, 0.1, 1.0],
                   help="comma-separated list (default: 0.001,0.1,1)")
    p.add_argument("--greedy", choices=("prefix", "full"), default="prefix",
                   help="which greedy bound to report (default: prefix)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV to write (default: stdout)")
    p.set_defaults(func=cmd_bound_study)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    p.add_argument("--name", required=True, choices=GENERATORS)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="generator parameter, e.g. n=500, noise=0.5, alpha=1000, eps=0.01")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", default="y", help="target column name (default: y)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ModelFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
