import pytest

from splitjoin.query import (
    CATALOG_NAMES,
    Disconnected,
    JoinEdge,
    RelSchema,
    SelfLoop,
    UnknownQuery,
    build_join_graph,
    build_query_graph,
    catalog_query,
    connected_components,
    format_query,
    load_query,
    parse_query,
    shortest_cycle_through,
)


def rels(*specs):
    return [RelSchema(r, (a, b)) for r, a, b in specs]


def test_triangle_graph():
    q = build_query_graph(rels(("R", "A", "B"), ("S", "B", "C"), ("T", "C", "A")))
    assert set(q.attrs) == {"A", "B", "C"}
    assert len(q.relations) == 3


def test_single_relation():
    q = build_query_graph(rels(("R", "A", "B")))
    assert q.attrs == ("A", "B")
    jg = build_join_graph(q)
    assert jg.nodes == ("R",) and jg.edges == ()


def test_disconnected_reports_components():
    with pytest.raises(Disconnected) as err:
        build_query_graph(rels(("R", "A", "B"), ("S", "C", "D")))
    assert err.value.components == [["R"], ["S"]]


def test_self_loop():
    with pytest.raises(SelfLoop):
        RelSchema("R", ("A", "A"))


def test_components_preserve_order():
    comps = connected_components(rels(("R", "A", "B"), ("S", "C", "D"), ("T", "B", "E")))
    assert [[r.rel_id for r in c] for c in comps] == [["R", "T"], ["S"]]


def test_triangle_join_graph():
    q = catalog_query("Q1").graph
    jg = build_join_graph(q)
    assert jg.edge_pairs() == {frozenset(p) for p in [("R1", "R2"), ("R2", "R3"), ("R1", "R3")]}


def test_q5_join_graph_edges():
    jg = build_join_graph(catalog_query("Q5").graph)
    expected = {("R1", "R2"), ("R1", "R5"), ("R1", "R3"), ("R2", "R5"),
                ("R2", "R4"), ("R3", "R4"), ("R3", "R5"), ("R4", "R5")}
    assert jg.edge_pairs() == {frozenset(p) for p in expected}


def test_join_graph_is_order_insensitive():
    q = catalog_query("Q6").graph
    shuffled = build_query_graph(list(reversed(q.relations)))
    assert build_join_graph(q) == build_join_graph(shuffled)
    assert build_join_graph(q) == build_join_graph(q)


def test_parallel_relations_give_two_edges():
    q = build_query_graph(rels(("R", "A", "B"), ("S", "A", "B")))
    jg = build_join_graph(q)
    assert sorted(e.attr for e in jg.edges) == ["A", "B"]


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_catalog_join_graph_connected(name):
    q = catalog_query(name).graph
    assert len(build_join_graph(q).edge_pairs()) >= len(q.relations) - 1


@pytest.mark.parametrize("name,n_attrs,n_rels", [
    ("Q1", 3, 3), ("Q2", 4, 4), ("Q3", 4, 4), ("Q4", 4, 5), ("Q5", 4, 5), ("Q6", 4, 6),
    ("Q7", 5, 6), ("Q8", 6, 8), ("Q9", 6, 7), ("Q10", 6, 6), ("Q11", 5, 5),
])
def test_catalog_shapes(name, n_attrs, n_rels):
    q = catalog_query(name).graph
    assert (len(q.attrs), len(q.relations)) == (n_attrs, n_rels)


def test_q6_is_four_clique():
    q = catalog_query("Q6").graph
    pairs = {frozenset(r.attrs) for r in q.relations}
    assert len(pairs) == 6 and len(q.attrs) == 4


def test_q2_q3_differ_only_in_orientation():
    q2, q3 = catalog_query("Q2").graph, catalog_query("Q3").graph
    assert q2.rel("R3").attrs == ("a3", "a4")
    assert q3.rel("R3").attrs == ("a4", "a3")
    assert {frozenset(r.attrs) for r in q2.relations} == {frozenset(r.attrs) for r in q3.relations}


def test_unknown_query():
    with pytest.raises(UnknownQuery):
        catalog_query("Q99")


@pytest.mark.parametrize("pair,attr,length", [
    (("R1", "R5"), "a3", 3),
    (("R1", "R3"), "a3", 4),
    (("R2", "R5"), "a2", 3),
    (("R3", "R4"), "a4", 3),
    (("R2", "R4"), "a2", 4),
])
def test_q5_cycle_lengths(pair, attr, length):
    q = catalog_query("Q5").graph
    assert shortest_cycle_through(JoinEdge(*pair, attr), q) == length


def test_triangle_edges_have_cycle_three():
    q = catalog_query("Q1").graph
    assert {shortest_cycle_through(e, q) for e in build_join_graph(q).edges} == {3}


def test_path_has_no_cycle():
    q = build_query_graph(rels(("R", "A", "B"), ("S", "B", "C"), ("T", "C", "D")))
    for e in build_join_graph(q).edges:
        assert shortest_cycle_through(e, q) is None


def test_parse_roundtrip(tmp_path):
    q = catalog_query("Q8").graph
    text = format_query(q)
    assert parse_query("# comment\n" + text) == q
    p = tmp_path / "q.txt"
    p.write_text(text)
    assert load_query(str(p)) == q
