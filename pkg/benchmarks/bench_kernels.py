"""Time the prefix-scan kernel on each available backend.

Usage: python3 benchmarks/bench_kernels.py [--n 20000] [--rules 0 5 20] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from rulecraft.core import OrthoBasis, extend_basis, project_out
from rulecraft.kernels import available_backends, prefix_scan
from rulecraft.search import row_keys


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--rules", type=int, nargs="+", default=[0, 5, 20])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.n
    order = rng.permutation(n)
    keys = row_keys(n)
    backends = available_backends()
    print(f"n={n}, backends: {', '.join(backends)}")
    print(f"{'kind':<5}{'rules':>6}" + "".join(f"{b + ' ms':>14}" for b in backends) + f"{'speedup':>10}")
    for t in args.rules:
        basis = OrthoBasis(n)
        for _ in range(t):
            extend_basis(basis, (rng.random(n) < 0.5).astype(float))
        g = project_out(basis, rng.normal(size=n))[0]
        h = rng.random(n) + 0.5
        for kind in ("gb", "xgb", "ogb") if t == args.rules[0] else ("ogb",):
            times = {}
            for b in backends:
                call = lambda: prefix_scan(order, g, h, basis.matrix, keys, kind, 1e-3, 0.0, backend=b)  # noqa: E731
                call()
                times[b] = 1e3 * min(timeit.repeat(call, number=1, repeat=args.repeat))
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{kind:<5}{t:>6}" + "".join(f"{times[b]:>14.2f}" for b in backends) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
