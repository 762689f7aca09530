"""SQL text generation: degree statistics and the split-rewritten query.

The output is plain SQL with common table expressions. Each cell of the
split becomes one SELECT whose join order is fixed by nesting derived
tables, and the cells are combined with UNION ALL.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .planner import Join, JoinPlan, Leaf, make_join
from .query import QueryGraph, _id_key
from .relation import SUMMARY_CAP
from .split import CoSplit

DEFAULT_COLUMNS = ("src", "dst")


class ConfigError(ValueError):
    pass


class UnsupportedPlanShape(ValueError):
    pass


@dataclass(frozen=True)
class TableRef:
    table: str
    columns: tuple[str, str] = DEFAULT_COLUMNS


_ENTRY = re.compile(r"\s*(\w+)\s*=\s*(\w+)\s*(?:\(\s*(\w+)\s*,\s*(\w+)\s*\))?\s*")


def parse_table_map(text: str) -> dict[str, TableRef]:
    """``R1=edges,R2=edges(src,dst)`` -> {rel_id: TableRef}."""
    out: dict[str, TableRef] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _ENTRY.match(text, pos)
        if not m:
            raise ConfigError(f"cannot parse table map at {text[pos:]!r}")
        rel, table, c1, c2 = m.groups()
        out[rel] = TableRef(table, (c1, c2) if c1 else DEFAULT_COLUMNS)
        pos = m.end()
        if pos < len(text):
            if text[pos] != ",":
                raise ConfigError(f"expected ',' at {text[pos:]!r}")
            pos += 1
    return out


def _check_map(q: QueryGraph, table_map: Mapping[str, TableRef]) -> None:
    if not table_map:
        raise ConfigError("empty table map")
    missing = [r for r in q.rel_ids if r not in table_map]
    if missing:
        raise ConfigError(f"no table mapped for {missing}")


def qi(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def emit_stats_sql(q: QueryGraph, table_map: Mapping[str, TableRef], cap: int = SUMMARY_CAP) -> str:
    """One (value, degree) query per distinct (table, column)."""
    _check_map(q, table_map)
    seen = set()
    stmts = []
    for r in q.rel_ids:
        ref = table_map[r]
        for col in ref.columns:
            if (ref.table, col) in seen:
                continue
            seen.add((ref.table, col))
            c1, c2 = map(qi, ref.columns)
            stmts.append(
                f"SELECT {qi(col)} AS value, COUNT(*) AS degree\n"
                f"FROM (SELECT DISTINCT {c1}, {c2} FROM {qi(ref.table)}) AS t\n"
                f"GROUP BY {qi(col)}\nORDER BY degree DESC, value\nLIMIT {cap};"
            )
    return "\n\n".join(stmts) + "\n"


def default_plan(q: QueryGraph) -> JoinPlan:
    """Left-deep plan adding, at each step, the smallest-id relation that connects."""
    rels = sorted(q.rel_ids, key=_id_key)
    node = Leaf(rels[0], q.rel(rels[0]).attrs)
    rest = rels[1:]
    while rest:
        r = next((r for r in rest if set(q.rel(r).attrs) & set(node.schema)), None)
        if r is None:
            raise UnsupportedPlanShape("query is not connected")
        rest.remove(r)
        node = make_join(node, Leaf(r, q.rel(r).attrs))
    return JoinPlan(node)


def cell_labels(sigma: Sequence[CoSplit]) -> list[tuple[str, tuple[str, ...]]]:
    """(label, parts) per cell, in the same order as the split phase produces them."""
    if not sigma:
        return [("all", ())]
    out = []
    for parts in itertools.product("LH", repeat=len(sigma)):
        out.append((",".join(f"{cs}={p}" for cs, p in zip(sigma, parts)), parts))
    return out


def _heavy_cte(i: int, cs: CoSplit) -> str:
    tau = int(cs.tau)
    a = qi(cs.attr)
    if len(cs.rels) == 1:
        return (f"heavy_{i} AS (SELECT {a} AS v FROM base_{cs.rels[0]} "
                f"GROUP BY {a} HAVING COUNT(*) > {tau})")
    r, t = cs.rels
    return (
        f"heavy_{i} AS (SELECT r.v AS v FROM "
        f"(SELECT {a} AS v, COUNT(*) AS d FROM base_{r} GROUP BY {a}) AS r JOIN "
        f"(SELECT {a} AS v, COUNT(*) AS d FROM base_{t} GROUP BY {a}) AS t ON r.v = t.v "
        f"WHERE CASE WHEN r.d < t.d THEN r.d ELSE t.d END > {tau})"
    )


class _Render:
    def __init__(self, q: QueryGraph, frag_names: Mapping[str, str]):
        self.q = q
        self.frag_names = frag_names
        self.n = 0

    def alias(self) -> str:
        self.n += 1
        return f"j{self.n}"

    def source(self, node) -> str:
        if isinstance(node, Leaf):
            return self.frag_names[node.rel_id]
        if not isinstance(node, Join):
            raise UnsupportedPlanShape(f"unexpected plan node {node!r}")
        return "(" + self.select(node) + ")"

    def select(self, node: Join) -> str:
        la, ra = self.alias(), self.alias()
        left, right = self.source(node.left), self.source(node.right)
        cols = [f"{la}.{qi(a)} AS {qi(a)}" for a in node.left.schema]
        cols += [f"{ra}.{qi(a)} AS {qi(a)}" for a in node.right.schema if a not in node.left.schema]
        on = " AND ".join(f"{la}.{qi(a)} = {ra}.{qi(a)}" for a in node.attrs)
        return f"SELECT {', '.join(cols)} FROM {left} AS {la} JOIN {right} AS {ra} ON {on}"


def emit_split_query(
    q: QueryGraph,
    sigma: Sequence[CoSplit],
    plans: Optional[Mapping[str, JoinPlan]],
    table_map: Mapping[str, TableRef],
) -> str:
    """Single statement realizing the split and per-cell join orders.

    ``plans`` maps cell labels to plans; cells without one (for instance
    cells that were empty on the data used for planning) get a default
    left-deep plan.
    """
    _check_map(q, table_map)
    sigma = [cs for cs in sigma if cs.threshold.finite]
    plans = plans or {}
    ctes = []
    for r in q.rel_ids:
        ref = table_map[r]
        x, y = q.rel(r).attrs
        c1, c2 = map(qi, ref.columns)
        ctes.append(f"base_{r} AS (SELECT DISTINCT {c1} AS {qi(x)}, {c2} AS {qi(y)} FROM {qi(ref.table)})")
    split_of = {}
    for i, cs in enumerate(sigma):
        ctes.append(_heavy_cte(i, cs))
        for r in cs.rels:
            split_of[r] = i
            a = qi(cs.attr)
            ctes.append(f"{r}_L AS (SELECT * FROM base_{r} WHERE {a} NOT IN (SELECT v FROM heavy_{i}))")
            ctes.append(f"{r}_H AS (SELECT * FROM base_{r} WHERE {a} IN (SELECT v FROM heavy_{i}))")

    out_cols = ", ".join(qi(a) for a in q.attrs)
    branches = []
    for label, parts in cell_labels(sigma):
        names = {}
        for r in q.rel_ids:
            names[r] = f"{r}_{parts[split_of[r]]}" if r in split_of else f"base_{r}"
        plan = plans.get(label) or default_plan(q)
        rd = _Render(q, names)
        if isinstance(plan.root, Leaf):
            body = f"SELECT {out_cols} FROM {names[plan.root.rel_id]}"
        else:
            body = f"SELECT {out_cols} FROM ({rd.select(plan.root)}) AS b"
        branches.append(f"-- {label}\n{body}")
    return "WITH\n  " + ",\n  ".join(ctes) + "\n" + "\nUNION ALL\n".join(branches) + ";\n"
