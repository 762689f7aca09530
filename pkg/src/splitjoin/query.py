"""Natural join queries over binary relations, viewed as graphs.

The query graph has one vertex per attribute and one edge per relation.
The join graph is its dual: one vertex per relation and one edge per
(pair of relations, shared attribute).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional


class QueryError(ValueError):
    pass


class SelfLoop(QueryError):
    pass


class Disconnected(QueryError):
    def __init__(self, components: list[list[str]]):
        self.components = components
        super().__init__(
            "query contains a cartesian product; evaluate each connected "
            f"subquery separately: {components}"
        )


class UnknownQuery(QueryError):
    pass


@dataclass(frozen=True)
class RelSchema:
    rel_id: str
    attrs: tuple[str, str]

    def __post_init__(self):
        if len(self.attrs) != 2:
            raise QueryError(f"{self.rel_id}: relations must be binary")
        if self.attrs[0] == self.attrs[1]:
            raise SelfLoop(f"{self.rel_id}({self.attrs[0]},{self.attrs[1]})")

    @property
    def first(self) -> str:
        return self.attrs[0]

    @property
    def second(self) -> str:
        return self.attrs[1]

    def other(self, attr: str) -> str:
        if attr == self.attrs[0]:
            return self.attrs[1]
        if attr == self.attrs[1]:
            return self.attrs[0]
        raise KeyError(f"{attr} not in {self.rel_id}")

    def __str__(self):
        return f"{self.rel_id}({self.attrs[0]},{self.attrs[1]})"


@dataclass(frozen=True)
class QueryGraph:
    relations: tuple[RelSchema, ...]
    attrs: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        seen: dict[str, None] = {}
        for r in self.relations:
            for a in r.attrs:
                seen.setdefault(a, None)
        object.__setattr__(self, "attrs", tuple(seen))

    @property
    def rel_ids(self) -> tuple[str, ...]:
        return tuple(r.rel_id for r in self.relations)

    def rel(self, rel_id: str) -> RelSchema:
        for r in self.relations:
            if r.rel_id == rel_id:
                return r
        raise KeyError(rel_id)

    def relations_with(self, attr: str) -> list[RelSchema]:
        return [r for r in self.relations if attr in r.attrs]

    def __str__(self):
        return " ⋈ ".join(str(r) for r in self.relations)


@dataclass(frozen=True)
class JoinEdge:
    rel_a: str
    rel_b: str
    attr: str

    @property
    def rels(self) -> tuple[str, str]:
        return (self.rel_a, self.rel_b)

    def __str__(self):
        return f"{self.rel_a}:{self.rel_b}@{self.attr}"


@dataclass(frozen=True)
class JoinGraph:
    nodes: tuple[str, ...]
    edges: tuple[JoinEdge, ...]

    def edge_pairs(self) -> set[frozenset[str]]:
        return {frozenset(e.rels) for e in self.edges}


def connected_components(relations: Iterable[RelSchema]) -> list[list[RelSchema]]:
    """Group relations into connected subqueries, preserving input order."""
    relations = list(relations)
    parent = list(range(len(relations)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[str, int] = {}
    for i, r in enumerate(relations):
        for a in r.attrs:
            if a in owner:
                parent[find(i)] = find(owner[a])
            else:
                owner[a] = i
    groups: dict[int, list[RelSchema]] = {}
    for i, r in enumerate(relations):
        groups.setdefault(find(i), []).append(r)
    return list(groups.values())


def build_query_graph(relations: Iterable[RelSchema]) -> QueryGraph:
    relations = list(relations)
    if not relations:
        raise QueryError("a query needs at least one relation")
    ids = [r.rel_id for r in relations]
    if len(set(ids)) != len(ids):
        raise QueryError(f"duplicate relation ids in {ids}")
    comps = connected_components(relations)
    if len(comps) > 1:
        raise Disconnected([[r.rel_id for r in c] for c in comps])
    return QueryGraph(tuple(relations))


def build_join_graph(q: QueryGraph) -> JoinGraph:
    # Relations are ordered by id so that the result does not depend on the
    # order in which the query listed them.
    rels = sorted(q.relations, key=lambda r: _id_key(r.rel_id))
    edges = []
    for i, r in enumerate(rels):
        for s in rels[i + 1:]:
            for a in r.attrs:
                if a in s.attrs:
                    edges.append(JoinEdge(r.rel_id, s.rel_id, a))
    return JoinGraph(tuple(r.rel_id for r in rels), tuple(edges))


def _id_key(rel_id: str):
    # R2 < R10
    head = rel_id.rstrip("0123456789")
    tail = rel_id[len(head):]
    return (head, int(tail) if tail else -1, rel_id)


def shortest_cycle_through(
    jg_edge: tuple[str, str] | JoinEdge, q: QueryGraph, attr: Optional[str] = None
) -> Optional[int]:
    """Length of the shortest query-graph cycle using both relations' edges.

    The two relations meet at a shared attribute ``v``; with other endpoints
    ``u`` and ``w`` the cycle is ``u - v - w`` closed by a shortest ``w -> u``
    path that avoids ``v``. Returns None when no such cycle exists.
    """
    if isinstance(jg_edge, JoinEdge):
        attr = jg_edge.attr
        jg_edge = jg_edge.rels
    ra, rb = q.rel(jg_edge[0]), q.rel(jg_edge[1])
    shared = [a for a in ra.attrs if a in rb.attrs]
    if not shared:
        raise QueryError(f"{ra.rel_id} and {rb.rel_id} do not join")
    if attr is not None:
        if attr not in shared:
            raise QueryError(f"{attr} is not shared by {ra.rel_id}, {rb.rel_id}")
        shared = [attr]
    if len(set(ra.attrs) & set(rb.attrs)) == 2:
        return 2
    best = None
    for v in shared:
        u, w = ra.other(v), rb.other(v)
        d = _bfs_distance(q, w, u, banned_attr=v, banned_rels={ra.rel_id, rb.rel_id})
        if d is not None and (best is None or d + 2 < best):
            best = d + 2
    return best


def _bfs_distance(q, src, dst, banned_attr, banned_rels) -> Optional[int]:
    adj: dict[str, list[str]] = {}
    for r in q.relations:
        if r.rel_id in banned_rels or banned_attr in r.attrs:
            continue
        a, b = r.attrs
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    dist = {src: 0}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        if x == dst:
            return dist[x]
        for y in adj.get(x, ()):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return None


def parse_query(text: str) -> QueryGraph:
    """Parse ``REL_ID ATTR1 ATTR2`` lines; ``#`` starts a comment."""
    rels = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise QueryError(f"line {lineno}: expected 'REL_ID ATTR1 ATTR2', got {line!r}")
        rels.append(RelSchema(parts[0], (parts[1], parts[2])))
    return build_query_graph(rels)


def parse_relations(text: str) -> list[RelSchema]:
    """Like parse_query but without the connectivity check."""
    rels = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise QueryError(f"line {lineno}: expected 'REL_ID ATTR1 ATTR2', got {line!r}")
        rels.append(RelSchema(parts[0], (parts[1], parts[2])))
    if not rels:
        raise QueryError("empty query")
    return rels


def format_query(q: QueryGraph) -> str:
    return "".join(f"{r.rel_id} {r.first} {r.second}\n" for r in q.relations)


# Attribute order inside each relation is fixed so that Q2 and Q3 differ on
# directed edge data. Relation names for Q2, Q5 and Q7 follow their usual
# published labelling rather than listing order.
_CATALOG: dict[str, list[tuple[str, str, str]]] = {
    "Q1": [("R1", "a1", "a2"), ("R2", "a2", "a3"), ("R3", "a3", "a1")],
    # R1(X,Y) R2(Y,W) R4(X,Z) R3(Z,W) with X,Y,Z,W = a1,a2,a3,a4
    "Q2": [("R1", "a1", "a2"), ("R4", "a1", "a3"), ("R3", "a3", "a4"), ("R2", "a2", "a4")],
    "Q3": [("R1", "a1", "a2"), ("R4", "a1", "a3"), ("R3", "a4", "a3"), ("R2", "a2", "a4")],
    "Q4": [("R2", "a1", "a2"), ("R1", "a1", "a3"), ("R3", "a3", "a4"), ("R4", "a2", "a4"),
           ("R5", "a2", "a3")],
    # R1(X,Y) R2(X,Z) R5(Z,Y) R3(Y,W) R4(W,Z) with X,Y,Z,W = a1,a3,a2,a4
    "Q5": [("R2", "a1", "a2"), ("R1", "a1", "a3"), ("R3", "a4", "a3"), ("R4", "a2", "a4"),
           ("R5", "a2", "a3")],
    "Q6": [("R1", "a1", "a2"), ("R2", "a1", "a3"), ("R3", "a3", "a4"), ("R4", "a2", "a4"),
           ("R5", "a2", "a3"), ("R6", "a1", "a4")],
    # two triangles (R1 R2 R3) and (R4 R5 R6) sharing a3
    "Q7": [("R1", "a1", "a2"), ("R2", "a1", "a3"), ("R4", "a3", "a4"), ("R5", "a4", "a5"),
           ("R3", "a2", "a3"), ("R6", "a3", "a5")],
    "Q8": [("R1", "a1", "a2"), ("R2", "a3", "a1"), ("R3", "a2", "a3"), ("R4", "a3", "a4"),
           ("R5", "a5", "a3"), ("R6", "a4", "a5"), ("R7", "a6", "a2"), ("R8", "a6", "a5")],
    "Q9": [("R1", "a1", "a2"), ("R2", "a2", "a4"), ("R3", "a1", "a3"), ("R4", "a3", "a4"),
           ("R5", "a4", "a5"), ("R6", "a5", "a6"), ("R7", "a4", "a6")],
    "Q10": [("R1", "a1", "a2"), ("R2", "a2", "a3"), ("R3", "a3", "a4"), ("R4", "a4", "a5"),
            ("R5", "a5", "a6"), ("R6", "a6", "a1")],
    "Q11": [("R1", "a1", "a2"), ("R2", "a2", "a3"), ("R3", "a3", "a4"), ("R4", "a4", "a5"),
            ("R5", "a5", "a1")],
}

CATALOG_NAMES = tuple(_CATALOG)


@dataclass(frozen=True)
class QueryCatalogEntry:
    name: str
    graph: QueryGraph


def catalog_query(name: str) -> QueryCatalogEntry:
    key = name.upper()
    if key not in _CATALOG:
        raise UnknownQuery(f"unknown query {name!r}; expected one of {', '.join(CATALOG_NAMES)}")
    rels = [RelSchema(r, (a, b)) for r, a, b in _CATALOG[key]]
    return QueryCatalogEntry(key, build_query_graph(rels))


def load_query(spec: str) -> QueryGraph:
    """Resolve a catalog name or a path to a query text file."""
    if spec.upper() in _CATALOG:
        return catalog_query(spec).graph
    path = Path(spec)
    if path.exists():
        return parse_query(path.read_text())
    raise UnknownQuery(f"unknown query {spec!r}")
