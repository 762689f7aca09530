"""Heavy/light splitting: co-splits, the split phase and split-set choice."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .query import JoinEdge, JoinGraph, QueryGraph, RelSchema, _id_key, build_join_graph, shortest_cycle_through
from .relation import Relation, max_degree
from .threshold import (
    SplitConstants,
    Threshold,
    choose_threshold,
    combined_degrees,
    combined_degree_sequence,
    degree_sequence,
    theory_threshold,
)

Instance = Mapping[str, Relation]

FULL, LIGHT, HEAVY = "FULL", "LIGHT", "HEAVY"


# -- per (relation, attribute) degree annotations ---------------------------

@dataclass(frozen=True)
class Light:
    """Every value of the attribute has degree <= bound in this fragment.

    For a co-split light fragment the bound holds for the combined
    (min over the two relations) degree, which is what the planner uses.
    ``via_heavy`` marks bounds inferred from a heavy split on the other
    attribute (at most ``bound`` heavy keys, tuples distinct).
    """

    bound: int
    via_heavy: bool = False


@dataclass(frozen=True)
class HeavyKeys:
    count: int
    max_degree: int


@dataclass(frozen=True)
class Unknown:
    max_degree: int


Tag = Light | HeavyKeys | Unknown


@dataclass(frozen=True)
class HeavyValueSet:
    attr: str
    values: np.ndarray

    def __len__(self):
        return int(len(self.values))


@dataclass(frozen=True)
class CoSplit:
    """Split of one or two relations on a shared attribute."""

    rels: tuple[str, ...]
    attr: str
    threshold: Threshold

    def __post_init__(self):
        if not 1 <= len(self.rels) <= 2:
            raise ValueError("a split covers one or two relations")

    @property
    def rel_a(self) -> str:
        return self.rels[0]

    @property
    def rel_b(self) -> Optional[str]:
        return self.rels[1] if len(self.rels) > 1 else None

    @property
    def tau(self):
        return self.threshold.tau

    def key(self):
        return (tuple(_id_key(r) for r in self.rels), self.attr)

    def __str__(self):
        return f"{':'.join(self.rels)}@{self.attr}"

    def to_json(self):
        return {"rels": list(self.rels), "attr": self.attr, "threshold": self.threshold.to_json()}


@dataclass(frozen=True)
class SplitSet:
    cosplits: tuple[CoSplit, ...] = ()

    def __post_init__(self):
        seen = set()
        for c in self.cosplits:
            for r in c.rels:
                if r in seen:
                    raise ValueError(f"{r} split twice; a split set must be an edge packing")
                seen.add(r)

    def __len__(self):
        return len(self.cosplits)

    def __iter__(self):
        return iter(self.cosplits)

    @property
    def cost(self) -> float:
        return max((c.tau for c in self.cosplits), default=0)

    def sort_key(self):
        return (self.cost, len(self.cosplits), sorted(c.key() for c in self.cosplits))

    def __str__(self):
        return "{" + ", ".join(str(c) for c in self.cosplits) + "}"


@dataclass
class Fragment:
    schema: RelSchema
    part: str
    data: np.ndarray
    tags: dict[str, Tag]

    @property
    def rel_id(self) -> str:
        return self.schema.rel_id

    @property
    def name(self) -> str:
        return self.rel_id if self.part == FULL else f"{self.rel_id}_{self.part[0]}"

    def __len__(self):
        return int(self.data.shape[0])


@dataclass
class Subinstance:
    fragments: dict[str, Fragment]
    cell: tuple[tuple[str, str], ...] = ()

    @property
    def label(self) -> str:
        if not self.cell:
            return "all"
        return ",".join(f"{s}={p}" for s, p in self.cell)

    @property
    def is_empty(self) -> bool:
        return any(len(f) == 0 for f in self.fragments.values())


def _heavy_mask(col: np.ndarray, heavy: np.ndarray) -> np.ndarray:
    if len(heavy) == 0:
        return np.zeros(len(col), dtype=bool)
    return np.isin(col, heavy, assume_unique=False)


def split_relation(rel: Relation, attr: int, tau) -> tuple[Relation, Relation, HeavyValueSet]:
    """Partition by the degree of each value of column ``attr``: > tau is heavy."""
    if not (tau >= 1):
        raise ValueError(f"threshold must be >= 1, got {tau}")
    vals, degs = rel.value_degrees(attr)
    heavy = vals[degs > tau] if math.isfinite(tau) else vals[:0]
    mask = _heavy_mask(rel.data[:, attr], heavy)
    return (
        Relation(rel.rel_id, rel.data[~mask]),
        Relation(rel.rel_id, rel.data[mask]),
        HeavyValueSet(str(attr), heavy),
    )


def co_split(rel_r: Relation, col_r: int, rel_t: Relation, col_t: int, tau):
    """Split two relations on a shared attribute using combined degrees.

    Returns ``[(R_L, T_L), (R_H, T_H)]`` plus the heavy value set; with an
    infinite threshold there is a single light fragment pair.
    """
    if not math.isfinite(tau):
        return [(rel_r, rel_t)], np.empty(0, dtype=np.int64)
    if tau < 1:
        raise ValueError(f"threshold must be >= 1, got {tau}")
    common, d = combined_degrees(rel_r, col_r, rel_t, col_t)
    heavy = common[d > tau]
    mr = _heavy_mask(rel_r.data[:, col_r], heavy)
    mt = _heavy_mask(rel_t.data[:, col_t], heavy)
    light = (Relation(rel_r.rel_id, rel_r.data[~mr]), Relation(rel_t.rel_id, rel_t.data[~mt]))
    heavy_pair = (Relation(rel_r.rel_id, rel_r.data[mr]), Relation(rel_t.rel_id, rel_t.data[mt]))
    return [light, heavy_pair], heavy


def heavy_values(q: QueryGraph, instance: Instance, cs: CoSplit) -> np.ndarray:
    cols = [(instance[r], q.rel(r).attrs.index(cs.attr)) for r in cs.rels]
    if not cs.threshold.finite:
        return np.empty(0, dtype=np.int64)
    if len(cols) == 1:
        vals, degs = cols[0][0].value_degrees(cols[0][1])
        return vals[degs > cs.tau]
    common, d = combined_degrees(cols[0][0], cols[0][1], cols[1][0], cols[1][1])
    return common[d > cs.tau]


def base_tags(q: QueryGraph, instance: Instance, rel_id: str) -> dict[str, Tag]:
    schema = q.rel(rel_id)
    rel = instance[rel_id]
    return {a: Unknown(max_degree(rel, i)) for i, a in enumerate(schema.attrs)}


def full_subinstance(q: QueryGraph, instance: Instance) -> Subinstance:
    frags = {
        r.rel_id: Fragment(r, FULL, instance[r.rel_id].data, base_tags(q, instance, r.rel_id))
        for r in q.relations
    }
    return Subinstance(frags)


def infer_adjacent_lightness(
    sub: Subinstance, heavy_cosplit: CoSplit, heavy_key_count: Optional[int] = None
) -> Subinstance:
    """On the heavy side of a split, each relation's other attribute becomes light.

    Tuples are distinct, so a value of the other attribute pairs with at most
    ``heavy_key_count`` distinct heavy keys (default: the fragment's HeavyKeys tag).
    """
    for r in heavy_cosplit.rels:
        if sub.fragments[r].part != HEAVY:
            return sub
    if heavy_key_count is None:
        heavy_key_count = max(sub.fragments[r].tags[heavy_cosplit.attr].count for r in heavy_cosplit.rels)
    for r in heavy_cosplit.rels:
        frag = sub.fragments[r]
        other = frag.schema.other(heavy_cosplit.attr)
        frag.tags[other] = Light(heavy_key_count, via_heavy=True)
    return sub


def split_phase(
    q: QueryGraph, instance: Instance, sigma: SplitSet | Sequence[CoSplit], prune: bool = False
) -> list[Subinstance]:
    """Partition the instance into 2^|sigma| cells, one per light/heavy choice.

    Cells come out in the order of the recursive formulation: the first
    split's light side (recursively split) before its heavy side.
    """
    sigma = tuple(sigma)
    if any(not cs.threshold.finite for cs in sigma):
        raise ValueError("skipped splits must be removed before the split phase")
    prepared = []
    for cs in sigma:
        heavy = heavy_values(q, instance, cs)
        masks = {}
        for r in cs.rels:
            col = q.rel(r).attrs.index(cs.attr)
            masks[r] = _heavy_mask(instance[r].data[:, col], heavy)
        prepared.append((cs, heavy, masks))

    out = []
    for choice in itertools.product((LIGHT, HEAVY), repeat=len(sigma)):
        frags = {}
        for r in q.relations:
            frags[r.rel_id] = Fragment(r, FULL, instance[r.rel_id].data, base_tags(q, instance, r.rel_id))
        sub = Subinstance(frags, tuple((str(cs), part[0]) for (cs, _, _), part in zip(prepared, choice)))
        for (cs, heavy, masks), part in zip(prepared, choice):
            for r in cs.rels:
                m = masks[r] if part == HEAVY else ~masks[r]
                frag = frags[r]
                frag.part = part
                frag.data = instance[r].data[m]
                if part == LIGHT:
                    frag.tags[cs.attr] = Light(int(cs.tau))
                else:
                    frag.tags[cs.attr] = HeavyKeys(len(heavy), frag.tags[cs.attr].max_degree)
            if part == HEAVY:
                infer_adjacent_lightness(sub, cs, len(heavy))
        if prune and sub.is_empty:
            continue
        out.append(sub)
    return out


def light_join_edges(sub: Subinstance, jg: JoinGraph) -> list[JoinEdge]:
    """Join-graph edges where at least one side is known light on the join attribute."""
    out = []
    for e in jg.edges:
        if any(isinstance(sub.fragments[r].tags[e.attr], Light) for r in e.rels):
            out.append(e)
    return out


# -- choosing the split set -------------------------------------------------

def enumerate_split_sets(
    jg: JoinGraph, q: QueryGraph, eligible: Optional[Iterable[JoinEdge]] = None
) -> list[tuple[JoinEdge, ...]]:
    """All maximal edge packings built by always taking an uncovered edge of
    the smallest cycle length among uncovered edges.

    Edges that lie on no cycle rank after every cyclic edge.
    """
    edges = list(jg.edges)
    if eligible is not None:
        allowed = set(eligible)
        edges = [e for e in edges if e in allowed]
    cycle = {}
    for e in edges:
        c = shortest_cycle_through(e, q)
        cycle[e] = math.inf if c is None else c

    results: set[frozenset[JoinEdge]] = set()
    visited: set[frozenset[JoinEdge]] = set()

    def rec(chosen: frozenset, covered: frozenset):
        if chosen in visited:
            return
        visited.add(chosen)
        uncovered = [e for e in edges if e.rel_a not in covered and e.rel_b not in covered]
        if not uncovered:
            results.add(chosen)
            return
        best = min(cycle[e] for e in uncovered)
        for e in uncovered:
            if cycle[e] == best:
                rec(chosen | {e}, covered | {e.rel_a, e.rel_b})

    rec(frozenset(), frozenset())
    key = lambda e: (_id_key(e.rel_a), _id_key(e.rel_b), e.attr)  # noqa: E731
    return sorted((tuple(sorted(s, key=key)) for s in results), key=lambda t: [key(e) for e in t])


def select_split_set(candidates: Sequence[SplitSet]) -> SplitSet:
    """Lowest max-threshold; ties go to fewer co-splits, then relation-id order."""
    if not candidates:
        raise ValueError("no candidate split sets")
    return min(candidates, key=SplitSet.sort_key)


def cosplit_threshold(
    q: QueryGraph, instance: Instance, edge: JoinEdge, consts: SplitConstants = SplitConstants()
) -> Threshold:
    ra, rb = q.rel(edge.rel_a), q.rel(edge.rel_b)
    seq = combined_degree_sequence(
        instance[edge.rel_a], ra.attrs.index(edge.attr), instance[edge.rel_b], rb.attrs.index(edge.attr)
    )
    return choose_threshold(seq, consts)


@dataclass
class SplitChoice:
    chosen: SplitSet
    candidates: list[SplitSet]
    edge_thresholds: dict[JoinEdge, Threshold] = field(default_factory=dict)


def choose_split_set(
    q: QueryGraph,
    instance: Instance,
    consts: SplitConstants = SplitConstants(),
    force_theory: bool = False,
) -> SplitChoice:
    jg = build_join_graph(q)
    if force_theory:
        n = max(instance[r].n for r in q.rel_ids)
        th = theory_threshold(max(n, 1))
        thresholds = {e: th for e in jg.edges}
    else:
        thresholds = {e: cosplit_threshold(q, instance, e, consts) for e in jg.edges}
    eligible = [e for e, t in thresholds.items() if t.finite]
    packings = enumerate_split_sets(jg, q, eligible)
    candidates = [
        SplitSet(tuple(CoSplit(e.rels, e.attr, thresholds[e]) for e in p)) for p in packings
    ]
    return SplitChoice(select_split_set(candidates), candidates, thresholds)


def parse_split_set(text: str, q: QueryGraph, instance: Instance,
                    consts: SplitConstants = SplitConstants(), force_theory: bool = False) -> SplitSet:
    """Parse ``R1:R2@a1,R3:R4@a3`` (or ``R1@a1`` for a single-relation split).

    Thresholds are computed as in automatic mode; splits whose threshold is
    skipped are dropped.
    """
    out = []
    n = max(instance[r].n for r in q.rel_ids)
    for item in filter(None, (s.strip() for s in text.split(","))):
        rels_part, _, attr = item.partition("@")
        rels = tuple(rels_part.split(":"))
        if not attr or not 1 <= len(rels) <= 2:
            raise ValueError(f"bad split spec {item!r}; expected REL:REL@ATTR")
        for r in rels:
            if attr not in q.rel(r).attrs:
                raise ValueError(f"{attr} is not an attribute of {r}")
        if force_theory:
            th = theory_threshold(max(n, 1))
        elif len(rels) == 2:
            th = cosplit_threshold(q, instance, JoinEdge(rels[0], rels[1], attr), consts)
        else:
            th = choose_threshold(degree_sequence(instance[rels[0]], q.rel(rels[0]).attrs.index(attr)), consts)
        if th.finite:
            out.append(CoSplit(rels, attr, th))
    return SplitSet(tuple(out))
