import numpy as np
import pytest

from splitjoin.datagen import identity, star_skew
from splitjoin.query import catalog_query


def bind(q, rel):
    """Same edge list under every relation name of q."""
    return {r: rel.renamed(r) for r in q.rel_ids}


@pytest.fixture
def triangle():
    return catalog_query("Q1").graph


@pytest.fixture
def star100(triangle):
    return bind(triangle, star_skew(100))


@pytest.fixture
def ident100(triangle):
    return bind(triangle, identity(100))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# 16-relation example: relation, its attributes, and the attribute it is light in
# (each relation points away from its light attribute)
TRACE_QUERY = [
    ("R1", "A", "B", "A"), ("R2", "B", "C", "B"), ("R3", "A", "C", "C"), ("R4", "C", "D", "C"),
    ("R5", "A", "D", "D"), ("R6", "D", "E", "E"), ("R7", "E", "K", "E"), ("R8", "B", "F", "F"),
    ("R9", "F", "G", "F"), ("R10", "G", "H", "G"), ("R11", "H", "I", "I"), ("R12", "H", "J", "H"),
    ("R13", "I", "K", "K"), ("R14", "J", "K", "J"), ("R15", "C", "I", "I"), ("R16", "B", "H", "H"),
]
TRACE_COLORS = {
    "red": {"R1", "R2", "R3", "R4", "R5"},
    "blue": {"R11", "R12", "R13", "R14", "R15", "R16"},
    "green": {"R8", "R9", "R10"},
    "orange": {"R6", "R7"},
}


def trace_graph():
    from splitjoin.planner import DirectedQueryGraph
    from splitjoin.query import RelSchema, build_query_graph

    q = build_query_graph([RelSchema(r, (a, b)) for r, a, b, _ in TRACE_QUERY])
    return DirectedQueryGraph(q, {r: light for r, _, _, light in TRACE_QUERY})


def color_of(rels):
    for name, members in TRACE_COLORS.items():
        if set(rels) == members:
            return name
    return None


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
