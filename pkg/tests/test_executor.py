import json

import numpy as np
import pytest

from splitjoin import kernels
from splitjoin.datagen import star_skew, zipf
from splitjoin.executor import (
    IntermediateTable,
    PartitionError,
    SchemaMismatch,
    check_agm,
    evaluate,
    execute_plan,
    hash_join,
    verify_disjoint_outputs,
    verify_partition,
)
from splitjoin.oracle import brute_force_eval, plan_intermediates_oracle
from splitjoin.planner import JoinPlan, Leaf, dp_optimize
from splitjoin.query import catalog_query
from splitjoin.relation import Relation
from splitjoin.split import CoSplit, choose_split_set, full_subinstance, split_phase
from splitjoin.threshold import Threshold

from conftest import bind


def T(schema, rows):
    return IntermediateTable(tuple(schema), np.array(rows, dtype=np.int64).reshape(-1, len(schema)))


def test_hash_join_trivial():
    out = hash_join(T("AB", [(1, 2)]), T("BC", [(2, 9)]), ["B"])
    assert out.schema == ("A", "B", "C") and out.as_set() == {(1, 2, 9)}


def test_hash_join_empty():
    out = hash_join(T("AB", [(1, 2)]), T("BC", []), ["B"])
    assert len(out) == 0 and out.schema == ("A", "B", "C")


def test_hash_join_schema_mismatch():
    with pytest.raises(SchemaMismatch):
        hash_join(T("AB", [(1, 2)]), T("CD", [(2, 9)]), ["B"])


def test_hash_join_multi_attribute():
    left = T("ABC", [(1, 2, 3), (1, 2, 4), (5, 2, 3)])
    right = T("CAD", [(3, 1, 7), (4, 5, 8), (3, 5, 9)])
    out = hash_join(left, right, ["A", "C"])
    assert out.as_set() == {(1, 2, 3, 7), (5, 2, 3, 9)}


def test_hash_join_star_count():
    r = star_skew(100)
    left = T(("A", "B"), r.data)
    right = T(("B", "C"), r.data)
    expected = sum(1 for a, b in r.data.tolist() for b2, c in r.data.tolist() if b == b2)
    assert len(hash_join(left, right, ["B"])) == expected == 10099


@pytest.mark.parametrize("backend", ["numpy", kernels.BACKEND])
def test_backends_agree(backend, triangle):
    inst = bind(triangle, zipf(400, seed=3, domain=60))
    ref, _ = evaluate(triangle, inst, "baseline", backend="numpy")
    got, _ = evaluate(triangle, inst, "split", backend=backend)
    assert got.as_set() == ref.as_set()


def test_star_plans_execute(triangle, star100):
    sigma = choose_split_set(triangle, star100).chosen
    light, heavy = split_phase(triangle, star100, sigma)
    _, _, mx_l = execute_plan(dp_optimize(light, triangle), light)
    _, _, mx_h = execute_plan(dp_optimize(heavy, triangle), heavy)
    assert (mx_h, mx_l) == (199, 99)


def test_leaf_plan(triangle, star100):
    sub = full_subinstance(triangle, star100)
    table, stats, mx = execute_plan(JoinPlan(Leaf("R1", ("a1", "a2"))), sub)
    assert stats == [] and mx == len(table) == 199


def test_star_baseline(triangle, star100):
    res, rep = evaluate(triangle, star100, "baseline")
    sub = full_subinstance(triangle, star100)
    plan = dp_optimize(sub, triangle)
    assert rep.max_intermediate == max(plan_intermediates_oracle(plan, sub)) >= 100**2 // 4
    assert rep.output_count == 298


def test_star_split(triangle, star100):
    res, rep = evaluate(triangle, star100, "split")
    assert rep.max_intermediate == 199 and rep.output_count == 298
    assert rep.subquery("R1:R2@a2=L").max_intermediate == 99
    assert rep.subquery("R1:R2@a2=H").max_intermediate == 199


@pytest.mark.parametrize("mode", ["baseline", "split", "theory"])
def test_identity_no_skew(mode, triangle, ident100):
    res, rep = evaluate(triangle, ident100, mode)
    assert rep.output_count == 100
    cards = [j.out_card for s in rep.subqueries for j in s.joins]
    assert cards and set(cards) == {100}


@pytest.mark.parametrize("mode", ["baseline", "split", "theory"])
def test_report_shape(mode, triangle, star100):
    _, rep = evaluate(triangle, star100, mode)
    d = json.loads(rep.to_json())
    for key in ("query", "mode", "split_set", "subqueries", "max_intermediate", "output_count", "timings"):
        assert key in d
    assert set(d["timings"]) >= {"stats_ms", "split_ms", "plan_ms", "exec_ms"}
    phases = sum(v for k, v in d["timings"].items() if k != "total_ms")
    assert phases <= d["timings"]["total_ms"] + 1e-6
    for s in d["subqueries"]:
        assert {"plan", "joins", "max_intermediate"} <= set(s)
        for j in s["joins"]:
            assert j["out_card"] <= d["max_intermediate"]
    if mode == "split":
        assert d["split_set"] == [{"rels": ["R1", "R2"], "attr": "a2", "threshold": {"tau": 2, "k": 2}}]


def test_threads_do_not_change_report():
    q = catalog_query("Q2").graph
    rng = np.random.default_rng(8)
    inst = {r: Relation.from_pairs(r, rng.zipf(1.5, size=(400, 2)) % 50) for r in q.rel_ids}
    r1, a = evaluate(q, inst, "theory", threads=1)
    r4, b = evaluate(q, inst, "theory", threads=4)
    assert r1.as_set() == r4.as_set()
    da, db = a.to_dict(), b.to_dict()
    da.pop("timings"), db.pop("timings")
    assert da == db


def test_unknown_mode(triangle, star100):
    with pytest.raises(ValueError):
        evaluate(triangle, star100, "fast")


def test_missing_relation(triangle, star100):
    del star100["R3"]
    with pytest.raises(KeyError):
        evaluate(triangle, star100)


def test_partition_check_catches_overlap(triangle, star100):
    subs = split_phase(triangle, star100, [CoSplit(("R1", "R2"), "a2", Threshold(2, 2))])
    subs[1].fragments["R1"].data = star100["R1"].data
    with pytest.raises(PartitionError):
        verify_partition(triangle, star100, subs)


def test_disjointness_check():
    with pytest.raises(PartitionError):
        verify_disjoint_outputs([T("AB", [(1, 2)]), T("AB", [(1, 2), (3, 4)])])


def test_agm_triangle(triangle, star100):
    _, rep = evaluate(triangle, star100, "theory")
    cert = check_agm(rep, triangle, 100, slack=3)
    assert cert.bound == pytest.approx(1000) and cert.limit == pytest.approx(3000)
    assert cert.satisfied and cert.rho == 1.5


def test_agm_q2_bound():
    q = catalog_query("Q2").graph
    inst = bind(q, star_skew(50))
    _, rep = evaluate(q, inst, "theory")
    cert = check_agm(rep, q, 99, slack=4)
    assert cert.bound == pytest.approx(99**2) and cert.satisfied


def _light_only(node):
    if isinstance(node, Leaf):
        return True
    return node.kind == "light" and _light_only(node.left) and _light_only(node.right)


@pytest.mark.parametrize("name", ["Q1", "Q2", "Q5", "Q11"])
def test_light_expansion_bound(name):
    q = catalog_query(name).graph
    rng = np.random.default_rng(11)
    inst = {r: Relation.from_pairs(r, rng.zipf(1.4, size=(600, 2)) % 80) for r in q.rel_ids}
    n = max(rel.n for rel in inst.values())
    tau = int(np.ceil(np.sqrt(n)))
    _, rep = evaluate(q, inst, "theory")
    from splitjoin.planner import light_join_order, orient_all

    oriented = {s.label: (g, s) for g, s in orient_all(q, inst, tau)}
    for sq in rep.subqueries:
        g, s = oriented[sq.label]
        plan = light_join_order(g, (), {r: f.name for r, f in s.fragments.items()})
        assert plan.text() == sq.plan
        for node, stat in zip(plan.joins(), sq.joins):
            if _light_only(node):
                assert stat.out_card <= n * tau ** (len(node.schema) - 2)


@pytest.mark.parametrize("name", ["Q1", "Q3", "Q4", "Q7", "Q9"])
def test_modes_agree_with_oracle(name):
    q = catalog_query(name).graph
    rng = np.random.default_rng(len(name) * 7)
    for _ in range(3):
        inst = {r: Relation.from_pairs(r, rng.zipf(1.5, size=(120, 2)) % 25) for r in q.rel_ids}
        truth = brute_force_eval(q, inst)
        for mode in ("baseline", "split", "theory"):
            res, _ = evaluate(q, inst, mode)
            assert res.as_set() == truth and len(res) == len(truth)
