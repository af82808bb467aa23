"""CSV datasets, synthetic generators, seeded splits and the JSON model format."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile

import numpy as np

from .core import BINARY, REGRESSION, DataError, Dataset, Proposition, Query, RuleEnsemble
from .losses import LOSSES

FORMAT_VERSION = 1
GENERATORS = ("friedman1", "friedman2", "friedman3", "prop2", "fig2")

# standard Friedman benchmark noise levels
_FRIEDMAN_NOISE = {"friedman1": 1.0, "friedman2": 125.0, "friedman3": 0.1}
_FRIEDMAN_SHAPE = {"friedman1": (2000, 10), "friedman2": (10000, 4), "friedman3": (5000, 4)}


class ModelFormatError(ValueError):
    """Malformed or incompatible model file."""


def atomic_write_text(path, text: str):
    """Write to a temp file in the same directory, then rename over ``path``."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_cell(text, row, col):
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"non-numeric value {text!r} at row {row}, column {col!r}") from None
    if not math.isfinite(v):
        raise DataError(f"non-finite value {text!r} at row {row}, column {col!r}")
    return v


def load_csv(path, target_column: str | None, task: str = REGRESSION) -> Dataset:
    """Read a header-first numeric CSV. Binary labels 0/1 become -1/+1.

    With ``target_column=None`` every column is a feature and the target is
    left at zero (for prediction).
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if target_column is not None and target_column not in header:
        raise DataError(f"target column {target_column!r} not found; columns are {header}")
    if len(rows) < 2:
        raise DataError(f"{path} has a header but no data rows")
    t = header.index(target_column) if target_column is not None else None
    names = [h for i, h in enumerate(header) if i != t]
    if not names:
        raise DataError("no feature columns besides the target")
    values = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"row {r} has {len(row)} cells, header has {len(header)}")
        for c, cell in enumerate(row):
            values[r - 2, c] = _parse_cell(cell.strip(), r, header[c])
    if t is None:
        return Dataset(values, np.zeros(values.shape[0]), REGRESSION, names)
    y = values[:, t]
    x = np.delete(values, t, axis=1)
    if task == BINARY:
        labels = set(np.unique(y).tolist())
        if labels <= {0.0, 1.0}:
            y = 2.0 * y - 1.0
        elif not labels <= {-1.0, 1.0}:
            raise DataError(f"binary targets must be 0/1 or -1/+1, found {sorted(labels)}")
    return Dataset(x, y, task, names)


def save_csv(ds: Dataset, path, target_column: str = "y"):
    """Write features then target with shortest round-trip float text."""
    if target_column in ds.feature_names:
        raise DataError(f"target name {target_column!r} clashes with a feature name")
    lines = [",".join(list(ds.feature_names) + [target_column])]
    for xi, yi in zip(ds.features, ds.target):
        lines.append(",".join(repr(float(v)) for v in xi) + "," + repr(float(yi)))
    atomic_write_text(path, "\n".join(lines) + "\n")


def gen_synthetic(name: str, params: dict | None = None, seed: int = 0) -> Dataset:
    """Synthetic datasets.

    ``friedman1``-``friedman3`` take ``n`` and ``noise`` (friedman1 also
    ``d``); ``prop2`` takes ``alpha`` and ``eps``; ``fig2`` is the fixed
    three-point example.
    """
    params = dict(params or {})
    if name == "fig2":
        return Dataset(np.array([[1.0], [2.0], [3.0]]), np.array([-10.0, -6.0, 5.0]))
    if name == "prop2":
        a = float(params.get("alpha", 1000.0))
        e = float(params.get("eps", 0.01))
        y = np.array([-a - e, a, -3 * a - e, a + e, 2 * a + e])
        return Dataset(np.arange(1.0, 6.0).reshape(-1, 1), y)
    if name not in _FRIEDMAN_NOISE:
        raise ValueError(f"unknown generator {name!r}; expected one of {GENERATORS}")
    n0, d0 = _FRIEDMAN_SHAPE[name]
    n = int(params.get("n", n0))
    noise = float(params.get("noise", _FRIEDMAN_NOISE[name]))
    rng = np.random.default_rng(seed)
    if name == "friedman1":
        d = int(params.get("d", d0))
        if d < 5:
            raise ValueError("friedman1 needs d >= 5")
        x = rng.uniform(size=(n, d))
        y = (10 * np.sin(np.pi * x[:, 0] * x[:, 1]) + 20 * (x[:, 2] - 0.5) ** 2
             + 10 * x[:, 3] + 5 * x[:, 4])
    else:
        x = np.column_stack([
            rng.uniform(0, 100, n),
            rng.uniform(40 * np.pi, 560 * np.pi, n),
            rng.uniform(0, 1, n),
            rng.uniform(1, 11, n),
        ])
        inner = x[:, 1] * x[:, 2] - 1 / (x[:, 1] * x[:, 3])
        if name == "friedman2":
            y = np.sqrt(x[:, 0] ** 2 + inner ** 2)
        else:
            y = np.arctan(inner / x[:, 0])
    y = y + noise * rng.standard_normal(n)
    return Dataset(x, y)


def split(ds: Dataset, fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first ``round(n * fraction)`` rows train."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    n_train = int(round(ds.n * fraction))
    if n_train < 1 or n_train > ds.n - 1:
        raise ValueError(f"split of {ds.n} rows at {fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:]))


def serialize_model(ens: RuleEnsemble, feature_names, metadata: dict | None = None) -> str:
    """JSON text; floats use Python's shortest round-trip repr, so parsing is exact."""
    names = list(feature_names)
    rules = []
    for q, w in zip(ens.queries, ens.weights):
        rules.append({
            "weight": float(w),
            "propositions": [
                {"feature": names[p.feature], "sign": int(p.sign), "threshold": float(p.threshold)}
                for p in q.propositions
            ],
        })
    doc = {
        "format_version": FORMAT_VERSION,
        "loss": ens.loss,
        "offset": float(ens.offset),
        "feature_names": names,
        "rules": rules,
        "metadata": dict(metadata or {}),
    }
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _field(obj, key, kind, path):
    if not isinstance(obj, dict) or key not in obj:
        raise ModelFormatError(f"missing field {path}{key}")
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ModelFormatError(f"field {path}{key} must be a number")
        return float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is int:
        raise ModelFormatError(f"field {path}{key} must be {kind.__name__}")
    return val


def parse_model(text: str) -> tuple[RuleEnsemble, list[str], dict]:
    """Inverse of ``serialize_model``: returns (ensemble, feature names, metadata)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from None
    version = _field(doc, "format_version", int, "")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version}; this build reads {FORMAT_VERSION}")
    loss = _field(doc, "loss", str, "")
    if loss not in LOSSES:
        raise ModelFormatError(f"field loss has unknown value {loss!r}")
    offset = _field(doc, "offset", float, "")
    names = _field(doc, "feature_names", list, "")
    index = {nm: j for j, nm in enumerate(names)}
    queries, weights = [], []
    for i, rule in enumerate(_field(doc, "rules", list, "")):
        path = f"rules[{i}]."
        weights.append(_field(rule, "weight", float, path))
        props = []
        for k, p in enumerate(_field(rule, "propositions", list, path)):
            ppath = f"{path}propositions[{k}]."
            feat = _field(p, "feature", str, ppath)
            if feat not in index:
                raise ModelFormatError(f"field {ppath}feature names unknown feature {feat!r}")
            sign = _field(p, "sign", int, ppath)
            if sign not in (1, -1):
                raise ModelFormatError(f"field {ppath}sign must be +1 or -1")
            props.append(Proposition(index[feat], sign, _field(p, "threshold", float, ppath)))
        queries.append(Query(props))
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise ModelFormatError("field metadata must be an object")
    return RuleEnsemble(offset, queries, weights, loss), list(names), meta


def align_features(ds: Dataset, model_names) -> np.ndarray:
    """Feature matrix reordered to the model's columns; missing names raise."""
    missing = [nm for nm in model_names if nm not in ds.feature_names]
    if missing:
        raise DataError(f"data lacks model features: {', '.join(missing)}")
    cols = [ds.feature_names.index(nm) for nm in model_names]
    return ds.features[:, cols]


__all__ = [
    "FORMAT_VERSION", "GENERATORS", "ModelFormatError", "align_features", "atomic_write_text",
    "gen_synthetic", "load_csv", "parse_model", "save_csv", "serialize_model", "split",
]
