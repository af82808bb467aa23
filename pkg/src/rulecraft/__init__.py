"""Small additive rule ensembles learned by gradient boosting.

The default configuration is corrective orthogonal boosting: every new
rule is chosen for how well its orthogonal complement to the existing
rules fits the gradient, and all weights are refit jointly.
"""
from .boosting import BoostConfig, boost, coverage_compare, cv_select_lambda, sweep_tradeoff
from .core import Dataset, OrthoBasis, Proposition, Query, RuleEnsemble
from .data_io import gen_synthetic, load_csv, parse_model, save_csv, serialize_model, split
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoostConfig", "Dataset", "OrthoBasis", "Proposition", "Query", "RuleEnsemble",
    "boost", "coverage_compare", "cv_select_lambda", "gen_synthetic", "load_csv", "parse_model",
    "save_csv", "serialize_model", "split", "sweep_tradeoff", "__version__",
]
