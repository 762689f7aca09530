"""Ground truth that shares no code with the executor.

Brute-force evaluation by backtracking over Python dicts, nested-loop
recomputation of plan intermediates, and the minimum fractional edge cover
by exhaustive half-integral search.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .planner import JoinPlan, Leaf
from .query import QueryGraph

DEFAULT_LIMIT = 10**7


class TooLarge(RuntimeError):
    pass


class Infeasible(ValueError):
    pass


def _pairs(rel) -> list[tuple[int, int]]:
    data = rel.data if hasattr(rel, "data") else rel
    return [tuple(t) for t in (data.tolist() if hasattr(data, "tolist") else data)]


def brute_force_eval(q: QueryGraph, instance: Mapping, limit: int = DEFAULT_LIMIT) -> set[tuple[int, ...]]:
    """Natural join by backtracking, binding attributes relation by relation.

    Result tuples follow ``q.attrs`` order.
    """
    rels = {r.rel_id: _pairs(instance[r.rel_id]) for r in q.relations}
    if any(not v for v in rels.values()):
        return set()

    order = []
    bound: set[str] = set()
    remaining = list(q.relations)
    while remaining:
        def rank(r):
            k = sum(a in bound for a in r.attrs)
            return (-k if bound else 0, len(rels[r.rel_id]))
        nxt = min(remaining, key=rank)
        if bound and not (set(nxt.attrs) & bound):
            raise ValueError("query is not connected")
        remaining.remove(nxt)
        order.append(nxt)
        bound |= set(nxt.attrs)

    by_first: dict[str, dict[int, list[int]]] = {}
    by_second: dict[str, dict[int, list[int]]] = {}
    members: dict[str, set] = {}
    for r in q.relations:
        f, s = {}, {}
        for a, b in rels[r.rel_id]:
            f.setdefault(a, []).append(b)
            s.setdefault(b, []).append(a)
        by_first[r.rel_id], by_second[r.rel_id], members[r.rel_id] = f, s, set(rels[r.rel_id])

    out: set[tuple[int, ...]] = set()
    binding: dict[str, int] = {}
    steps = [0]

    def tick(k=1):
        steps[0] += k
        if steps[0] > limit:
            raise TooLarge(f"brute force exceeded {limit} candidate steps")

    def rec(i):
        if i == len(order):
            out.add(tuple(binding[a] for a in q.attrs))
            return
        r = order[i]
        x, y = r.attrs
        if x in binding and y in binding:
            tick()
            if (binding[x], binding[y]) in members[r.rel_id]:
                rec(i + 1)
        elif x in binding:
            ys = by_first[r.rel_id].get(binding[x], ())
            tick(len(ys) or 1)
            for v in ys:
                binding[y] = v
                rec(i + 1)
            binding.pop(y, None)
        elif y in binding:
            xs = by_second[r.rel_id].get(binding[y], ())
            tick(len(xs) or 1)
            for v in xs:
                binding[x] = v
                rec(i + 1)
            binding.pop(x, None)
        else:
            tick(len(rels[r.rel_id]))
            for a, b in rels[r.rel_id]:
                binding[x], binding[y] = a, b
                rec(i + 1)
            binding.pop(x, None)
            binding.pop(y, None)

    rec(0)
    return out


@dataclass(frozen=True)
class EdgeCover:
    weights: dict[str, Fraction]
    total: Fraction

    def covers(self, q: QueryGraph) -> bool:
        return all(sum(self.weights[r.rel_id] for r in q.relations_with(a)) >= 1 for a in q.attrs)


def min_fractional_edge_cover(q: QueryGraph) -> EdgeCover:
    """Minimum cover with weights in {0, 1/2, 1}; exact for graphs by half-integrality."""
    rels = list(q.relations)
    if len(rels) > 16:
        raise ValueError("exhaustive cover search is limited to 16 relations")
    attrs = list(q.attrs)
    for a in attrs:
        if not q.relations_with(a):
            raise Infeasible(f"attribute {a} has no relation")
    # work in half units: each attribute needs 2
    last_use = {a: max(i for i, r in enumerate(rels) if a in r.attrs) for a in attrs}
    need = {a: 2 for a in attrs}
    best = [None, None]
    w = [0] * len(rels)

    def rec(i, total):
        if best[0] is not None and total >= best[0]:
            return
        if i == len(rels):
            best[0], best[1] = total, list(w)
            return
        x, y = rels[i].attrs
        for h in (0, 1, 2):
            need[x] -= h
            need[y] -= h
            # an attribute whose last relation is this one must be satisfied now
            ok = all(need[a] <= 0 for a in (x, y) if last_use[a] == i)
            if ok:
                w[i] = h
                rec(i + 1, total + h)
            need[x] += h
            need[y] += h
        w[i] = 0

    rec(0, 0)
    if best[0] is None:
        raise Infeasible("no feasible edge cover")
    weights = {r.rel_id: Fraction(h, 2) for r, h in zip(rels, best[1])}
    return EdgeCover(weights, Fraction(best[0], 2))


def plan_intermediates_oracle(plan: JoinPlan, sub, limit: int = DEFAULT_LIMIT) -> list[int]:
    """Cardinality of every join node, post-order, by nested-loop joins."""
    budget = [limit]

    def run(node):
        if isinstance(node, Leaf):
            frag = sub.fragments[node.rel_id]
            x, y = frag.schema.attrs
            return [{x: a, y: b} for a, b in _pairs(frag.data)]
        left = run(node.left)
        right = run(node.right)
        budget[0] -= len(left) * len(right)
        if budget[0] < 0:
            raise TooLarge(f"nested-loop oracle exceeded {limit} pair comparisons")
        rows = []
        for l in left:
            for r in right:
                if all(l[a] == r[a] for a in node.attrs):
                    m = dict(l)
                    m.update(r)
                    rows.append(m)
        cards.append(len(rows))
        return rows

    cards: list[int] = []
    run(plan.root)
    return cards
