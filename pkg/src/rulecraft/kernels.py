"""Backend selection for the prefix scan kernel.

The compiled Cython kernel is used when importable; setting
``RULECRAFT_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

KIND_CODES = {"gb": 0, "gs": 1, "xgb": 2, "ogb": 3}
RAD_TOL = 1e-10

_compiled = None
if os.environ.get("RULECRAFT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def available_backends():
    return ["cython", "python"] if _compiled is not None else ["python"]


def prefix_scan(order, gvec, hvec, basis, keys, kind, eps=0.0, lam=0.0, backend=None):
    """Objective value and xor fingerprint of every prefix of ``order``.

    ``basis`` is a (t, n) array of orthonormal rows (only read for ``ogb``).
    Returns ``(values, fingerprints)``, both of length ``len(order)``.
    """
    code = KIND_CODES[kind] if isinstance(kind, str) else int(kind)
    backend = backend or BACKEND
    order = np.ascontiguousarray(order, dtype=np.int64)
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel not available")
        return _compiled.prefix_scan(
            order,
            np.ascontiguousarray(gvec, dtype=np.float64),
            np.ascontiguousarray(hvec, dtype=np.float64),
            np.ascontiguousarray(basis, dtype=np.float64),
            np.ascontiguousarray(keys, dtype=np.uint64),
            code, float(eps), float(lam), RAD_TOL,
        )
    return _kernels_py.prefix_scan(order, gvec, hvec, basis, keys, code, eps, lam, RAD_TOL)
