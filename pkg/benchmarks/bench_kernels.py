"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --sizes 10000,100000,1000000 --repeats 5

Both backends run in the same process (the backend argument overrides the
environment flag), so the numba column is absent when numba is missing.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from splitjoin import kernels
from splitjoin.datagen import star_skew
from splitjoin.executor import evaluate
from splitjoin.query import catalog_query


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best * 1e3


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="10000,100000,1000000")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print rows as JSON instead of a table")
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if kernels.BACKEND == "numba" else [])
    rng = np.random.default_rng(args.seed)
    rows = []
    for n in map(int, args.sizes.split(",")):
        probe = rng.integers(0, n // 4 + 1, size=n)
        build = rng.integers(0, n // 4 + 1, size=n)
        cases = {
            "equi_join": lambda b: kernels.equi_join_indices(probe, build, b),
            "group_counts": lambda b: kernels.group_counts(probe, b),
        }
        for name, fn in cases.items():
            row = {"kernel": name, "n": n}
            for b in backends:
                fn(b)  # warm-up, includes JIT compilation
                row[f"{b}_ms"] = round(best_of(lambda: fn(b), args.repeats), 3)
            rows.append(row)

    # end to end: skewed triangle, split mode
    q = catalog_query("Q1").graph
    base = star_skew(max(2, int(args.sizes.split(",")[-1]) // 100))
    inst = {r: base.renamed(r) for r in q.rel_ids}
    row = {"kernel": "triangle_split", "n": base.n}
    for b in backends:
        evaluate(q, inst, "split", backend=b)
        row[f"{b}_ms"] = round(best_of(lambda: evaluate(q, inst, "split", backend=b), args.repeats), 3)
    rows.append(row)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    header = ["kernel", "n"] + [f"{b}_ms" for b in backends] + (["speedup"] if len(backends) == 2 else [])
    print("  ".join(f"{h:>14}" for h in header))
    for r in rows:
        cells = [r["kernel"], r["n"]] + [r[f"{b}_ms"] for b in backends]
        if len(backends) == 2:
            cells.append(f"{r['numpy_ms'] / max(r['numba_ms'], 1e-9):.2f}x")
        print("  ".join(f"{c:>14}" for c in cells))


if __name__ == "__main__":
    main()
