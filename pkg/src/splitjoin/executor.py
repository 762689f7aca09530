"""Plan execution, per-split union and instrumentation."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .planner import JoinPlan, Leaf, dp_optimize, light_join_order, orient_all
from .query import QueryGraph
from .relation import Relation, build_summary
from .split import (
    SplitChoice,
    SplitSet,
    Subinstance,
    choose_split_set,
    full_subinstance,
    split_phase,
)
from .threshold import SplitConstants, theory_threshold

MODES = ("baseline", "split", "theory")


class SchemaMismatch(ValueError):
    pass


class PartitionError(AssertionError):
    pass


@dataclass
class IntermediateTable:
    schema: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64).reshape(-1, len(self.schema))

    def __len__(self):
        return int(self.rows.shape[0])

    def project(self, schema: Sequence[str]) -> "IntermediateTable":
        idx = [self.schema.index(a) for a in schema]
        return IntermediateTable(tuple(schema), self.rows[:, idx])

    def as_set(self) -> set[tuple[int, ...]]:
        return set(map(tuple, self.rows.tolist()))


def hash_join(left: IntermediateTable, right: IntermediateTable, attrs: Optional[Sequence[str]] = None,
              backend: Optional[str] = None) -> IntermediateTable:
    """Natural join on ``attrs``; output schema is left's then right's new attributes.

    The smaller input is the build side.
    """
    if attrs is None:
        attrs = [a for a in left.schema if a in right.schema]
    missing = [a for a in attrs if a not in left.schema or a not in right.schema]
    if missing:
        raise SchemaMismatch(f"join attributes {missing} not in both {left.schema} and {right.schema}")
    extra = [i for i, a in enumerate(right.schema) if a not in left.schema]
    schema = left.schema + tuple(right.schema[i] for i in extra)
    if len(left) == 0 or len(right) == 0:
        return IntermediateTable(schema, np.empty((0, len(schema)), dtype=np.int64))
    if not attrs:
        raise SchemaMismatch("refusing a cartesian product")
    li = [left.schema.index(a) for a in attrs]
    ri = [right.schema.index(a) for a in attrs]
    nl = len(left)
    if len(attrs) == 1:
        lk, rk = left.rows[:, li[0]], right.rows[:, ri[0]]
    else:
        keys = kernels.dense_keys(*(np.concatenate([left.rows[:, a], right.rows[:, b]]) for a, b in zip(li, ri)))
        lk, rk = keys[:nl], keys[nl:]
    if len(right) <= nl:
        lidx, ridx = kernels.equi_join_indices(np.ascontiguousarray(lk), np.ascontiguousarray(rk), backend)
    else:
        ridx, lidx = kernels.equi_join_indices(np.ascontiguousarray(rk), np.ascontiguousarray(lk), backend)
    rows = np.hstack([left.rows[lidx], right.rows[ridx][:, extra]])
    return IntermediateTable(schema, rows)


@dataclass
class JoinStat:
    attrs: list[str]
    out_card: int
    plan: str


@dataclass
class SubqueryReport:
    label: str
    plan: str
    joins: list[JoinStat]
    max_intermediate: int
    output_count: int
    fragments: dict[str, int]


@dataclass
class ExecutionReport:
    query: str
    mode: str
    split_set: list[dict] = field(default_factory=list)
    subqueries: list[SubqueryReport] = field(default_factory=list)
    max_intermediate: int = 0
    output_count: int = 0
    timings: dict[str, float] = field(default_factory=dict)
    pruned_subqueries: int = 0
    agm: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def subquery(self, label: str) -> SubqueryReport:
        for s in self.subqueries:
            if s.label == label:
                return s
        raise KeyError(label)


def fragment_table(frag) -> IntermediateTable:
    return IntermediateTable(frag.schema.attrs, frag.data)


def execute_plan(plan: JoinPlan, sub: Subinstance, backend: Optional[str] = None):
    """Evaluate bottom-up; returns the result and one JoinStat per join (post-order)."""
    stats: list[JoinStat] = []

    def run(node) -> IntermediateTable:
        if isinstance(node, Leaf):
            return fragment_table(sub.fragments[node.rel_id])
        left = run(node.left)
        right = run(node.right)
        out = hash_join(left, right, node.attrs, backend)
        stats.append(JoinStat(list(node.attrs), len(out), node.text()))
        return out

    table = run(plan.root)
    if isinstance(plan.root, Leaf):
        mx = len(table)
    else:
        mx = max(s.out_card for s in stats)
    return table, stats, mx


def verify_partition(q: QueryGraph, instance: Mapping[str, Relation], subs: Sequence[Subinstance]) -> None:
    """Each relation's distinct fragments (one per part) must be an exact disjoint cover."""
    for r in q.rel_ids:
        by_part = {}
        for s in subs:
            f = s.fragments[r]
            prev = by_part.setdefault(f.part, f.data)
            if prev is not f.data and not np.array_equal(prev, f.data):
                raise PartitionError(f"{r}: two cells disagree on the {f.part} fragment")
        if len(by_part) > 1 and "FULL" in by_part:
            raise PartitionError(f"{r}: split in some cells and whole in others")
        parts = list(by_part.values())
        allrows = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
        original = instance[r].data
        if len(allrows) != len(original):
            raise PartitionError(f"{r}: fragments hold {len(allrows)} tuples, relation has {len(original)}")
        uniq = np.unique(allrows, axis=0) if len(allrows) else allrows
        if len(uniq) != len(original) or not np.array_equal(uniq, np.unique(original, axis=0)):
            raise PartitionError(f"{r}: fragments are not a disjoint cover")


def verify_disjoint_outputs(outputs: Sequence[IntermediateTable]) -> None:
    rows = [o.rows for o in outputs if len(o)]
    if not rows:
        return
    allrows = np.concatenate(rows)
    if len(np.unique(allrows, axis=0)) != len(allrows):
        raise PartitionError("subquery outputs overlap")


def evaluate(
    q: QueryGraph,
    instance: Mapping[str, Relation],
    mode: str = "split",
    *,
    consts: SplitConstants = SplitConstants(),
    force_theory: bool = False,
    split_set: Optional[SplitSet] = None,
    start_order: Sequence[str] = (),
    threads: int = 1,
    verify: bool = True,
    name: str = "",
    backend: Optional[str] = None,
) -> tuple[IntermediateTable, ExecutionReport]:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    for r in q.rel_ids:
        if r not in instance:
            raise KeyError(f"no data bound to relation {r}")
    report = ExecutionReport(name or str(q), mode)
    t0 = time.perf_counter()

    # summaries feed threshold choice; built up front so the stats phase is timed on its own
    for r in q.rel_ids:
        for a in (0, 1):
            build_summary(instance[r], a)
    t_stats = time.perf_counter()

    if mode == "baseline":
        subs = [full_subinstance(q, instance)]
    elif mode == "split":
        if split_set is None:
            choice: SplitChoice = choose_split_set(q, instance, consts, force_theory)
            split_set = choice.chosen
        report.split_set = [c.to_json() for c in split_set]
        subs = split_phase(q, instance, split_set)
    else:
        n = max(instance[r].n for r in q.rel_ids)
        tau = theory_threshold(max(n, 1))
        oriented = orient_all(q, instance, tau)
        subs = [s for _, s in oriented]
        graphs = {id(s): g for g, s in oriented}
        report.split_set = [{"rels": [r], "attr": min(q.rel(r).attrs), "threshold": tau.to_json()} for r in q.rel_ids]
    if verify and len(subs) > 1:
        verify_partition(q, instance, subs)
    live = [s for s in subs if not s.is_empty]
    report.pruned_subqueries = len(subs) - len(live)
    t_split = time.perf_counter()

    plans = []
    for s in live:
        if mode == "theory":
            names = {r: f.name for r, f in s.fragments.items()}
            plans.append(light_join_order(graphs[id(s)], start_order, names))
        else:
            plans.append(dp_optimize(s, q))
    t_plan = time.perf_counter()

    def work(i):
        return execute_plan(plans[i], live[i], backend)

    if threads > 1 and len(live) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, range(len(live))))
    else:
        results = [work(i) for i in range(len(live))]

    outputs = []
    for s, plan, (table, stats, mx) in zip(live, plans, results):
        out = table.project(q.attrs)
        outputs.append(out)
        report.subqueries.append(SubqueryReport(
            s.label, plan.text(), stats, mx, len(out), {f.name: len(f) for f in s.fragments.values()},
        ))
    if verify:
        verify_disjoint_outputs(outputs)
    if outputs:
        result = IntermediateTable(q.attrs, np.concatenate([o.rows for o in outputs]))
    else:
        result = IntermediateTable(q.attrs, np.empty((0, len(q.attrs)), dtype=np.int64))
    t_exec = time.perf_counter()

    report.max_intermediate = max((s.max_intermediate for s in report.subqueries), default=0)
    report.output_count = len(result)
    report.timings = {
        "stats_ms": (t_stats - t0) * 1e3,
        "split_ms": (t_split - t_stats) * 1e3,
        "plan_ms": (t_plan - t_split) * 1e3,
        "exec_ms": (t_exec - t_plan) * 1e3,
        "total_ms": (t_exec - t0) * 1e3,
    }
    return result, report


@dataclass
class AGMCertificate:
    rho: Fraction
    bound: float
    observed_max: int
    slack: float
    satisfied: bool

    @property
    def limit(self) -> float:
        return self.slack * self.bound

    def to_dict(self):
        d = asdict(self)
        d["rho"] = str(self.rho)
        d["limit"] = self.limit
        return d


def check_agm(report: ExecutionReport, q: QueryGraph, n: int, slack: float = 4.0) -> AGMCertificate:
    """Compare the largest intermediate against ``slack * n**rho``."""
    from .oracle import min_fractional_edge_cover

    rho = min_fractional_edge_cover(q).total
    bound = float(n) ** rho
    return AGMCertificate(rho, bound, report.max_intermediate, slack, report.max_intermediate <= slack * bound)


def plan_cells(q: QueryGraph, instance: Mapping[str, Relation], split_set: SplitSet) -> dict[str, JoinPlan]:
    """DP plan per non-empty cell of ``split_set``, keyed by cell label."""
    sigma = [c for c in split_set if c.threshold.finite]
    subs = split_phase(q, instance, sigma) if sigma else [full_subinstance(q, instance)]
    return {s.label: dp_optimize(s, q) for s in subs if not s.is_empty}
