import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splitjoin.datagen import identity, star_skew
from splitjoin.relation import (
    SUMMARY_CAP,
    EmptyRelation,
    ParseError,
    Relation,
    build_summary,
    degree,
    load_edge_list,
    max_degree,
    parse_edge_list,
    write_edge_list,
)


def test_dedup(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("1 2\n1 2\n2 3\n")
    assert load_edge_list(p).n == 2


def test_comment_skip(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("1 2\n#c\n3 4\n")
    assert load_edge_list(p).n == 2


def test_comma_separated():
    assert parse_edge_list("1,2\n3, 4\n").tuples == {(1, 2), (3, 4)}


def test_parse_error_has_line_number():
    with pytest.raises(ParseError) as err:
        parse_edge_list("1 2\n3 x\n")
    assert err.value.lineno == 2


def test_empty_file():
    with pytest.raises(EmptyRelation):
        parse_edge_list("# nothing\n")


def test_star_skew_size():
    assert star_skew(100).n == 199


def test_load_is_order_insensitive(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    a.write_text("1 2\n3 4\n5 6\n")
    b.write_text("5 6\n1 2\n3 4\n1 2\n")
    assert load_edge_list(a).tuples == load_edge_list(b).tuples
    assert load_edge_list(a) == load_edge_list(a)


def test_write_roundtrip(tmp_path):
    rel = star_skew(20)
    p = tmp_path / "s.txt"
    write_edge_list(rel, p)
    assert load_edge_list(p, rel_id="R") == rel


@pytest.mark.parametrize("rel,attr,value,expected", [
    (star_skew(100), "first", 1, 100),
    (star_skew(100), "first", 7, 1),
    (star_skew(100), "first", 1000, 0),
    (identity(100), "second", 42, 1),
])
def test_degree(rel, attr, value, expected):
    assert degree(rel, attr, value) == expected


def test_summary_star():
    s = build_summary(star_skew(100), "first")
    assert s.entries[0] == (1, 100)
    assert s.entries[1:] == [(v, 1) for v in range(2, 101)]
    assert not s.capped and s.total == 199


def test_summary_uniform():
    s = build_summary(identity(50), "first")
    assert len(s.entries) == 50 and {d for _, d in s.entries} == {1}


def test_summary_cap():
    rel = identity(150_000)
    s = build_summary(rel, "first")
    assert s.capped and len(s.entries) == SUMMARY_CAP
    assert s.total == rel.n and s.distinct == 150_000


def test_summary_csv():
    text = build_summary(star_skew(3), "second").to_csv()
    assert text.splitlines()[:2] == ["value,degree", "1,3"]


@pytest.mark.parametrize("rel,attr,expected", [
    (star_skew(100), "first", 100),
    (identity(100), "second", 1),
])
def test_max_degree(rel, attr, expected):
    assert max_degree(rel, attr) == expected


def test_max_degree_empty():
    assert max_degree(Relation.from_pairs("R", np.empty((0, 2), dtype=np.int64)), "first") == 0


pairs = st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=1, max_size=80)


@settings(max_examples=60, deadline=None)
@given(pairs)
def test_degrees_sum_to_n(ps):
    rel = Relation.from_pairs("R", ps)
    assert rel.n == len(set(ps))
    for attr in ("first", "second"):
        s = build_summary(rel, attr)
        assert sum(d for _, d in s.entries) == rel.n == s.total
        degs = [d for _, d in s.entries]
        assert degs == sorted(degs, reverse=True)
        for v, d in s.entries:
            assert degree(rel, attr, v) == d
