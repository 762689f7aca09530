"""Command-line driver: ``splitjoin {run,bench,verify,generate,emit-sql,stats}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import datagen
from .executor import MODES, check_agm, evaluate, plan_cells
from .query import (
    CATALOG_NAMES,
    Disconnected,
    QueryError,
    QueryGraph,
    UnknownQuery,
    build_query_graph,
    connected_components,
    load_query,
    parse_relations,
)
from .relation import ParseError, Relation, build_summary, load_edge_list, write_edge_list
from .split import choose_split_set, parse_split_set
from .sql import ConfigError, TableRef, emit_split_query, emit_stats_sql, parse_table_map
from .threshold import SplitConstants

log = logging.getLogger("splitjoin")

EXIT_USAGE = 2


def _consts(args) -> SplitConstants:
    return SplitConstants(args.delta1, args.delta2, not args.no_skip, args.strategy)


def resolve_queries(spec: str) -> list[QueryGraph]:
    """Connected subqueries of a catalog name or query file."""
    try:
        return [load_query(spec)]
    except Disconnected:
        rels = parse_relations(Path(spec).read_text())
        return [build_query_graph(c) for c in connected_components(rels)]


def bind_data(spec: Optional[str], q: QueryGraph, cache: dict) -> dict[str, Relation]:
    """``g.txt`` binds every relation to one edge list; ``R1=a.txt,R2=b.txt`` binds per relation."""
    if not spec:
        raise ValueError("--data is required")
    if "=" not in spec:
        paths = {r: spec for r in q.rel_ids}
    else:
        paths = {}
        for item in spec.split(","):
            rel, _, path = item.partition("=")
            paths[rel.strip()] = path.strip()
        if "*" in paths:
            for r in q.rel_ids:
                paths.setdefault(r, paths["*"])
        missing = [r for r in q.rel_ids if r not in paths]
        if missing:
            raise ValueError(f"no data file for {missing}")
    out = {}
    for r in q.rel_ids:
        p = paths[r]
        if p not in cache:
            cache[p] = load_edge_list(p)
        out[r] = cache[p].renamed(r)
    return out


def run_once(queries: list[QueryGraph], data: Optional[str], args, cache: dict) -> dict:
    """Evaluate every connected subquery; a cartesian product multiplies the counts."""
    reports = []
    for q in queries:
        inst = bind_data(data, q, cache)
        sigma = None
        if args.mode == "split" and getattr(args, "split_set", None):
            sigma = parse_split_set(args.split_set, q, inst, _consts(args), args.force_theory)
        _, rep = evaluate(
            q, inst, args.mode, consts=_consts(args), force_theory=args.force_theory,
            split_set=sigma, threads=args.threads, name=getattr(args, "query", ""),
        )
        if args.mode == "theory":
            n = max(inst[r].n for r in q.rel_ids)
            rep.agm = check_agm(rep, q, n, args.slack).to_dict()
        reports.append(rep.to_dict())
    if len(reports) == 1:
        return reports[0]
    timings = {k: sum(r["timings"][k] for r in reports) for k in reports[0]["timings"]}
    return {
        "query": getattr(args, "query", ""),
        "mode": args.mode,
        "components": reports,
        "max_intermediate": max(r["max_intermediate"] for r in reports),
        "output_count": math.prod(r["output_count"] for r in reports),
        "timings": timings,
    }


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    queries = resolve_queries(args.query)
    rep = run_once(queries, args.data, args, {})
    _emit(json.dumps(rep, indent=2) + "\n", args.out)
    if rep.get("agm") and not rep["agm"]["satisfied"]:
        return 1
    return 0


def cmd_bench(args) -> int:
    names = [s for s in (args.queries or "").split(",") if s]
    modes = [s for s in (args.modes or "").split(",") if s]
    if not names or not modes:
        raise ValueError("bench needs --queries and --modes")
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}")
    cache: dict = {}
    rows = []
    for name in names:
        queries = resolve_queries(name)
        for mode in modes:
            args.mode, args.query = mode, name
            row = {"query": name, "mode": mode, "status": "ok"}
            try:
                best = None
                for _ in range(args.repeats):
                    t = time.perf_counter()
                    rep = run_once(queries, args.data, args, cache)
                    ms = (time.perf_counter() - t) * 1e3
                    best = ms if best is None else min(best, ms)
                row.update(runtime_ms=round(best, 3), max_intermediate=rep["max_intermediate"],
                           output_count=rep["output_count"])
            except Exception as exc:  # partial results are reported, not dropped
                row.update(status=f"error: {exc}", runtime_ms=None, max_intermediate=None, output_count=None)
            rows.append(row)
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["query", "mode", "runtime_ms", "max_intermediate", "output_count", "status"])
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    _emit(text, args.out)
    return 0 if all(r["status"] == "ok" for r in rows) else 1


def random_instance(q: QueryGraph, rng: np.random.Generator, max_tuples: int = 200) -> dict[str, Relation]:
    """Mix of uniform and Zipf relations on a small domain so joins are non-trivial."""
    out = {}
    domain = int(rng.integers(4, 25))
    for r in q.rel_ids:
        n = int(rng.integers(1, max_tuples + 1))
        seed = int(rng.integers(0, 2**31))
        if rng.random() < 0.5:
            rel = datagen.random_uniform(n, domain=domain, seed=seed, rel_id=r)
        else:
            rel = datagen.zipf(n, a=float(rng.uniform(1.1, 2.0)), domain=domain, seed=seed, rel_id=r)
        out[r] = rel
    return out


def verify_query(q: QueryGraph, instances: int, seed: int, max_tuples: int = 200,
                 consts: SplitConstants = SplitConstants()) -> tuple[int, list[str]]:
    from .oracle import brute_force_eval

    rng = np.random.default_rng(seed)
    failures = []
    for i in range(instances):
        inst = random_instance(q, rng, max_tuples)
        truth = brute_force_eval(q, inst)
        for mode in MODES:
            res, _ = evaluate(q, inst, mode, consts=consts)
            got = res.as_set()
            if got != truth or len(res) != len(got):
                failures.append(f"instance {i} mode {mode}: {len(got)} rows, expected {len(truth)}")
    return instances, failures


def cmd_verify(args) -> int:
    names = [s for s in args.queries.split(",") if s] if args.queries else list(CATALOG_NAMES)
    ok = True
    print(f"{'query':<8}{'instances':>10}  result")
    for k, name in enumerate(names):
        q = load_query(name)
        n, failures = verify_query(q, args.instances, args.seed + k, args.max_tuples, _consts(args))
        ok &= not failures
        print(f"{name:<8}{n:>10}  {'PASS' if not failures else 'FAIL'}")
        for f in failures[:5]:
            print(f"    {f}")
    return 0 if ok else 1


def cmd_generate(args) -> int:
    rel = datagen.generate(args.kind, args.n, args.seed)
    if args.out:
        write_edge_list(rel, args.out)
    else:
        sys.stdout.write("".join(f"{a} {b}\n" for a, b in rel.data.tolist()))
    return 0


def _table_map(args, q: QueryGraph) -> dict[str, TableRef]:
    if not args.table_map:
        raise ConfigError("--table-map is required")
    if "=" not in args.table_map:
        # a bare table name maps every relation to it
        return {r: TableRef(args.table_map.strip()) for r in q.rel_ids}
    return parse_table_map(args.table_map)


def cmd_emit_sql(args) -> int:
    q = load_query(args.query)
    tm = _table_map(args, q)
    inst = bind_data(args.data, q, {})
    if args.split_set:
        sigma = parse_split_set(args.split_set, q, inst, _consts(args), args.force_theory)
    else:
        sigma = choose_split_set(q, inst, _consts(args), args.force_theory).chosen
    plans = plan_cells(q, inst, sigma)
    _emit(emit_split_query(q, list(sigma), plans, tm), args.out)
    return 0


def cmd_stats(args) -> int:
    if args.sql:
        q = load_query(args.query)
        _emit(emit_stats_sql(q, _table_map(args, q), args.cap), args.out)
        return 0
    if not args.data:
        raise ValueError("stats needs --data (or --sql with --query and --table-map)")
    rel = load_edge_list(args.data)
    attrs = ("first", "second") if args.attr == "both" else (args.attr,)
    chunks = []
    for a in attrs:
        s = build_summary(rel, a, args.cap)
        chunks.append(f"# {a}: distinct={s.distinct} total={s.total} capped={s.capped}\n{s.to_csv()}")
    _emit("".join(chunks), args.out)
    return 0


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta1", type=float, default=5.0, help="skip when deg_1/delta1 <= K (default 5)")
    p.add_argument("--delta2", type=float, default=240.0, help="skip when K <= delta2 (default 240)")
    p.add_argument("--no-skip", action="store_true", help="never skip a split")
    p.add_argument("--strategy", choices=("k", "degk"), default="k", help="threshold is K or deg_K")
    p.add_argument("--force-theory", action="store_true", help="use tau = ceil(sqrt(N)) everywhere")
    p.add_argument("--split-set", help="override, e.g. R1:R2@a1,R3:R4@a3")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="splitjoin", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate one query in one mode")
    p.add_argument("--data", help="edge list for all relations, or R1=a.txt,R2=b.txt")
    p.add_argument("--query", required=True, help="catalog name (Q1..Q11) or query file")
    p.add_argument("--mode", choices=MODES, default="split")
    p.add_argument("--slack", type=float, default=4.0, help="AGM slack factor for theory mode")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    _add_split_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="compare modes across queries")
    p.add_argument("--data", required=True)
    p.add_argument("--queries", help="comma-separated query names")
    p.add_argument("--modes", default="baseline,split")
    p.add_argument("--repeats", type=int, default=4, help="runs per cell; the minimum is reported")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--slack", type=float, default=4.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    _add_split_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="executor vs brute force on random instances")
    p.add_argument("--queries", help="comma-separated; default all catalog queries")
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--max-tuples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    _add_split_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a synthetic edge list")
    p.add_argument("--kind", choices=datagen.KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("emit-sql", help="write the split-rewritten SQL")
    p.add_argument("--query", required=True)
    p.add_argument("--table-map", help="R1=edges,R2=edges(src,dst) or a single table name")
    p.add_argument("--data", required=True, help="edge list used to pick thresholds and plans")
    p.add_argument("--out")
    _add_split_flags(p)
    p.set_defaults(func=cmd_emit_sql)

    p = sub.add_parser("stats", help="degree summaries (CSV) or the SQL that collects them")
    p.add_argument("--data")
    p.add_argument("--attr", choices=("first", "second", "both"), default="both")
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--sql", action="store_true")
    p.add_argument("--query")
    p.add_argument("--table-map")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UnknownQuery as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QueryError, ConfigError, ParseError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
