"""Join plans per subinstance.

Two planners live here: the light-join ordering used with the
every-relation split (each subinstance is an orientation of the query
graph), and a bushy dynamic-programming optimizer whose cost model reads
the degree annotations left by the split phase.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .query import QueryGraph, RelSchema, _id_key
from .relation import Relation
from .split import LIGHT, CoSplit, Fragment, Light, Subinstance, split_phase
from .threshold import Threshold


class NoStart(RuntimeError):
    pass


# -- plan trees --------------------------------------------------------------

@dataclass(frozen=True)
class CostEstimate:
    bound: int
    basis: str  # LIGHT_K | HEAVY_K | MAX_DEGREE | CARDINALITY | KEY_BOUND


@dataclass(frozen=True)
class Leaf:
    rel_id: str
    attrs: tuple[str, ...]
    name: str = ""

    @property
    def schema(self) -> tuple[str, ...]:
        return self.attrs

    @property
    def label(self) -> str:
        return self.name or self.rel_id

    def leaves(self):
        yield self

    def text(self) -> str:
        return self.label


@dataclass(frozen=True)
class Join:
    left: "Node"
    right: "Node"
    attrs: tuple[str, ...]
    cost: Optional[CostEstimate] = None
    kind: str = "join"  # "light" / "merge" for the light-join ordering

    @property
    def schema(self) -> tuple[str, ...]:
        ls = self.left.schema
        return ls + tuple(a for a in self.right.schema if a not in ls)

    def leaves(self):
        yield from self.left.leaves()
        yield from self.right.leaves()

    def text(self) -> str:
        return f"({self.left.text()} ⋈[{','.join(self.attrs)}] {self.right.text()})"


Node = Union[Leaf, Join]


@dataclass(frozen=True)
class JoinPlan:
    root: Node

    def leaves(self) -> list[Leaf]:
        return list(self.root.leaves())

    def joins(self) -> list[Join]:
        """Internal nodes in post-order (children before parents)."""
        out = []

        def walk(n):
            if isinstance(n, Join):
                walk(n.left)
                walk(n.right)
                out.append(n)

        walk(self.root)
        return out

    def text(self) -> str:
        return self.root.text()

    def __str__(self):
        return self.text()


def make_join(left: Node, right: Node, **kw) -> Join:
    shared = tuple(a for a in left.schema if a in right.schema)
    if not shared:
        raise ValueError(f"cartesian join between {left.text()} and {right.text()}")
    return Join(left, right, shared, **kw)


# -- orientations and the light-join ordering --------------------------------

@dataclass
class DirectedQueryGraph:
    """Query graph with each relation pointing away from its light attribute.

    ``light[rel_id]`` is the attribute in which the relation is light, or
    None when unknown.
    """

    base: QueryGraph
    light: dict[str, Optional[str]]

    def head(self, rel_id: str) -> Optional[str]:
        x = self.light.get(rel_id)
        return None if x is None else self.base.rel(rel_id).other(x)


def theory_split_attr(schema: RelSchema) -> str:
    return min(schema.attrs)


def orient_all(q: QueryGraph, instance: Mapping[str, Relation], tau) -> list[tuple[DirectedQueryGraph, Subinstance]]:
    """Split every relation on its first attribute by name at threshold tau.

    Returns all 2^l (orientation, subinstance) pairs, empty ones included.
    """
    th = tau if isinstance(tau, Threshold) else Threshold(tau)
    sigma = [CoSplit((r.rel_id,), theory_split_attr(r), th) for r in q.relations]
    out = []
    for sub in split_phase(q, instance, sigma):
        light = {}
        for r in q.relations:
            a = theory_split_attr(r)
            frag = sub.fragments[r.rel_id]
            light[r.rel_id] = a if frag.part == LIGHT else r.other(a)
        out.append((DirectedQueryGraph(q, light), sub))
    return out


@dataclass
class ComponentTrace:
    start: str
    light_rels: list[str] = field(default_factory=list)
    merged_with: list[int] = field(default_factory=list)


def light_join_order(
    g: DirectedQueryGraph,
    start_order: Sequence[str] = (),
    leaf_names: Optional[Mapping[str, str]] = None,
    trace: Optional[list] = None,
) -> JoinPlan:
    """Grow intermediates by light joins, merging those that meet.

    Free choices are resolved deterministically: a start attribute from
    ``start_order`` when one qualifies, else the smallest attribute name;
    among relations, smallest relation id; among light joins, smallest
    (attribute, relation id).
    """
    q = g.base
    leaf_names = leaf_names or {}
    unused = {r.rel_id for r in q.relations}
    comps: list[tuple[set[str], Node, int]] = []
    traces: list[ComponentTrace] = [] if trace is None else trace
    rid_key = _id_key

    def leaf(rid):
        return Leaf(rid, q.rel(rid).attrs, leaf_names.get(rid, ""))

    while True:
        covered = set().union(*(c for c, _, _ in comps)) if comps else set()
        starts = sorted({g.light[r] for r in unused if g.light.get(r) is not None and g.light[r] not in covered})
        if not starts:
            break
        x = next((s for s in start_order if s in starts), starts[0])
        rid = min((r for r in unused if g.light.get(r) == x), key=rid_key)
        unused.discard(rid)
        c = set(q.rel(rid).attrs)
        node: Node = leaf(rid)
        tr = ComponentTrace(x, [rid])
        traces.append(tr)
        while True:
            nxt = [(g.light[r], rid_key(r), r) for r in unused if g.light.get(r) in c]
            if not nxt:
                break
            _, _, r = min(nxt)
            unused.discard(r)
            node = make_join(node, leaf(r), kind="light")
            c |= set(q.rel(r).attrs)
            tr.light_rels.append(r)
        while True:
            hit = next((i for i, (c2, _, _) in enumerate(comps) if c & c2), None)
            if hit is None:
                break
            c2, node2, idx2 = comps.pop(hit)
            node = make_join(node, node2, kind="merge")
            c |= c2
            tr.merged_with.append(idx2)
        comps.append((c, node, len(traces) - 1))
    if unused:
        raise NoStart(f"relations {sorted(unused, key=rid_key)} were never reached by a light join")
    if len(comps) != 1:
        raise NoStart(f"ended with {len(comps)} components; is the query connected?")
    return JoinPlan(comps[0][1])


# -- split-aware cost model and DP -------------------------------------------

def tag_degree_bound(tag) -> int:
    if isinstance(tag, Light):
        return tag.bound
    return tag.max_degree


def _tag_basis(tag) -> str:
    if isinstance(tag, Light):
        return "HEAVY_K" if tag.via_heavy else "LIGHT_K"
    return "MAX_DEGREE"


def estimate_join_cost(left_card: int, right: Fragment, attr: str | Sequence[str]) -> CostEstimate:
    """Upper estimate of ``|left ⋈ right|`` from the right fragment's annotations."""
    attrs = (attr,) if isinstance(attr, str) else tuple(attr)
    best = CostEstimate(left_card * len(right), "CARDINALITY")
    for a in attrs:
        tag = right.tags[a]
        est = CostEstimate(left_card * tag_degree_bound(tag), _tag_basis(tag))
        if est.bound < best.bound:
            best = est
    return best


@dataclass
class _Entry:
    cost: int
    card: int
    kb: dict[str, int]
    node: Node
    text: str
    size: int


def dp_optimize(sub: Subinstance, q: QueryGraph) -> JoinPlan:
    """Minimum total estimated intermediate size over bushy, cartesian-free plans."""
    rels = sorted(q.rel_ids, key=_id_key)
    n = len(rels)
    attrs_of = [set(q.rel(r).attrs) for r in rels]
    best: dict[int, _Entry] = {}
    for i, rid in enumerate(rels):
        frag = sub.fragments[rid]
        card = len(frag)
        kb = {a: min(tag_degree_bound(frag.tags[a]), card) for a in frag.schema.attrs}
        node = Leaf(rid, frag.schema.attrs, frag.name)
        best[1 << i] = _Entry(0, card, kb, node, node.text(), 1)

    mask_attrs = {}

    def attrs_for(mask):
        if mask not in mask_attrs:
            s = set()
            for i in range(n):
                if mask >> i & 1:
                    s |= attrs_of[i]
            mask_attrs[mask] = s
        return mask_attrs[mask]

    full = (1 << n) - 1
    for mask in sorted(range(1, full + 1), key=lambda m: bin(m).count("1")):
        if mask & (mask - 1) == 0:
            continue
        low = mask & -mask
        cand: Optional[_Entry] = None
        sub_mask = (mask - 1) & mask
        while sub_mask:
            if sub_mask & low:
                other = mask ^ sub_mask
                e1, e2 = best.get(sub_mask), best.get(other)
                if e1 is not None and e2 is not None and attrs_for(sub_mask) & attrs_for(other):
                    entry = _combine(e1, e2, sub)
                    if cand is None or (entry.cost, entry.text) < (cand.cost, cand.text):
                        cand = entry
            sub_mask = (sub_mask - 1) & mask
        if cand is not None:
            best[mask] = cand
    if full not in best:
        raise ValueError("query is not connected")
    return JoinPlan(best[full].node)


def _combine(e1: _Entry, e2: _Entry, sub: Subinstance) -> _Entry:
    # larger side on the left; equal sizes keep the side holding the smaller relation id
    if e2.size > e1.size:
        e1, e2 = e2, e1
    shared = [a for a in e1.node.schema if a in e2.node.schema]
    kb1 = min(e1.kb[a] for a in shared)
    kb2 = min(e2.kb[a] for a in shared)
    options = [(e1.card * e2.card, "CARDINALITY")]
    if isinstance(e2.node, Leaf):
        est = estimate_join_cost(e1.card, sub.fragments[e2.node.rel_id], shared)
        options.append((est.bound, est.basis))
    else:
        options.append((e1.card * kb2, "KEY_BOUND"))
    if isinstance(e1.node, Leaf):
        est = estimate_join_cost(e2.card, sub.fragments[e1.node.rel_id], shared)
        options.append((est.bound, est.basis))
    else:
        options.append((e2.card * kb1, "KEY_BOUND"))
    bound, basis = min(options, key=lambda t: t[0])
    kb = {}
    for a in set(e1.kb) | set(e2.kb):
        if a in e1.kb and a in e2.kb:
            v = min(e1.kb[a] * kb2, e2.kb[a] * kb1, e1.kb[a] * e2.kb[a])
        elif a in e1.kb:
            v = e1.kb[a] * kb2
        else:
            v = e2.kb[a] * kb1
        kb[a] = min(v, bound)
    node = Join(e1.node, e2.node, tuple(shared), CostEstimate(bound, basis))
    return _Entry(e1.cost + e2.cost + bound, bound, kb, node, node.text(), e1.size + e2.size)
