import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from splitjoin.datagen import star_skew
from splitjoin.executor import execute_plan
from splitjoin.planner import JoinPlan, Leaf, make_join
from splitjoin.query import CATALOG_NAMES, RelSchema, build_query_graph, catalog_query
from splitjoin.relation import Relation
from splitjoin.oracle import (
    TooLarge,
    brute_force_eval,
    min_fractional_edge_cover,
    plan_intermediates_oracle,
)
from splitjoin.split import choose_split_set, full_subinstance, split_phase

from conftest import bind


def test_brute_force_star(triangle, star100):
    assert len(brute_force_eval(triangle, star100)) == 298


def test_brute_force_identity(triangle, ident100):
    assert brute_force_eval(triangle, ident100) == {(i, i, i) for i in range(1, 101)}


def test_brute_force_empty_relation(triangle):
    inst = bind(triangle, star_skew(5))
    inst["R2"] = Relation.from_pairs("R2", np.empty((0, 2), dtype=np.int64))
    assert brute_force_eval(triangle, inst) == set()


def test_brute_force_guard(triangle):
    inst = bind(triangle, star_skew(300))
    with pytest.raises(TooLarge):
        brute_force_eval(triangle, inst, limit=1000)


@pytest.mark.parametrize("name,rho", [
    ("Q1", Fraction(3, 2)), ("Q2", 2), ("Q11", Fraction(5, 2)), ("Q10", 3), ("Q6", 2),
])
def test_rho(name, rho):
    assert min_fractional_edge_cover(catalog_query(name).graph).total == rho


def test_rho_single_relation():
    q = build_query_graph([RelSchema("R", ("A", "B"))])
    assert min_fractional_edge_cover(q).total == 1


def lp_rho(q):
    attrs = list(q.attrs)
    A = np.zeros((len(attrs), len(q.relations)))
    for j, r in enumerate(q.relations):
        for a in r.attrs:
            A[attrs.index(a), j] = 1
    res = linprog(np.ones(len(q.relations)), A_ub=-A, b_ub=-np.ones(len(attrs)), bounds=(0, 1))
    return res.fun


def random_connected_query(rng, n_attrs, n_rels):
    attrs = [f"x{i}" for i in range(n_attrs)]
    pairs = set()
    for i in range(1, n_attrs):  # spanning tree
        pairs.add((attrs[rng.randrange(i)], attrs[i]))
    all_pairs = [p for p in itertools.combinations(attrs, 2) if p not in pairs]
    rng.shuffle(all_pairs)
    pairs |= set(all_pairs[: max(0, n_rels - len(pairs))])
    return build_query_graph([RelSchema(f"R{k}", p) for k, p in enumerate(sorted(pairs))])


@pytest.mark.parametrize("seed", range(12))
def test_rho_matches_lp_on_random_graphs(seed):
    rng = random.Random(seed)
    q = random_connected_query(rng, rng.randint(3, 7), rng.randint(3, 10))
    cover = min_fractional_edge_cover(q)
    assert cover.covers(q)
    assert float(cover.total) == pytest.approx(lp_rho(q), abs=1e-7)


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_rho_matches_lp_on_catalog(name):
    q = catalog_query(name).graph
    rho = min_fractional_edge_cover(q).total
    assert float(rho) == pytest.approx(lp_rho(q), abs=1e-7)
    assert rho >= Fraction(len(q.attrs), 2)


def test_rho_relabel_invariant():
    q = catalog_query("Q9").graph
    ren = {a: f"z{i}" for i, a in enumerate(reversed(q.attrs))}
    q2 = build_query_graph([RelSchema(f"S{k}", (ren[r.attrs[1]], ren[r.attrs[0]]))
                            for k, r in enumerate(reversed(q.relations))])
    assert min_fractional_edge_cover(q).total == min_fractional_edge_cover(q2).total


def test_leaf_plan_oracle(triangle, star100):
    sub = full_subinstance(triangle, star100)
    assert plan_intermediates_oracle(JoinPlan(Leaf("R1", ("a1", "a2"))), sub) == []


def test_star_heavy_plan(triangle, star100):
    sigma = choose_split_set(triangle, star100).chosen
    _, heavy = split_phase(triangle, star100, sigma)
    from splitjoin.planner import dp_optimize

    plan = dp_optimize(heavy, triangle)
    cards = plan_intermediates_oracle(plan, heavy)
    _, stats, mx = execute_plan(plan, heavy)
    assert cards == [s.out_card for s in stats]
    assert cards[0] == 199 and mx == 199


def random_plan(q, rng):
    nodes = [Leaf(r.rel_id, r.attrs) for r in q.relations]
    while len(nodes) > 1:
        pairs = [(i, j) for i in range(len(nodes)) for j in range(len(nodes))
                 if i != j and set(nodes[i].schema) & set(nodes[j].schema)]
        i, j = rng.choice(pairs)
        joined = make_join(nodes[i], nodes[j])
        nodes = [n for k, n in enumerate(nodes) if k not in (i, j)] + [joined]
    return JoinPlan(nodes[0])


@pytest.mark.parametrize("seed", range(50))
def test_executor_matches_oracle_on_random_plans(seed):
    rng = random.Random(seed)
    name = rng.choice(CATALOG_NAMES)
    q = catalog_query(name).graph
    nrng = np.random.default_rng(seed)
    inst = {r: Relation.from_pairs(r, nrng.integers(0, 8, size=(int(nrng.integers(5, 40)), 2)))
            for r in q.rel_ids}
    sub = full_subinstance(q, inst)
    plan = random_plan(q, rng)
    _, stats, _ = execute_plan(plan, sub)
    assert [s.out_card for s in stats] == plan_intermediates_oracle(plan, sub)
