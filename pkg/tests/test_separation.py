from fractions import Fraction
from itertools import combinations

import pytest

from conftest import INSTANCES, sample_points
from qmatch.core import GeneralGraph, QPoint, QProblem, vertex_set
from qmatch.inequalities import Kind, StdLin, Up, build
from qmatch.separation import (
    BaseConstraintViolation,
    brute_force_down,
    brute_force_up,
    build_down_gadget,
    build_up_gadget,
    cut_value,
    gomory_hu,
    min_odd_cut,
    separate_blossom,
    separate_down,
    separate_exact,
    separate_up,
)

H = Fraction(1, 2)


def cycle(k):
    nodes = [f"c{i}" for i in range(k)]
    return GeneralGraph(nodes, [(nodes[i], nodes[(i + 1) % k]) for i in range(k)])


def brute_min_cut(g, cap, s, t):
    rest = [v for v in g.nodes if v not in (s, t)]
    best = None
    for k in range(len(rest) + 1):
        for extra in combinations(rest, k):
            v = cut_value(g, cap, {s, *extra})
            best = v if best is None else min(best, v)
    return best


def test_gomory_hu_small():
    g = GeneralGraph(["a", "b"], [("a", "b")])
    t = gomory_hu(g, {("a", "b"): Fraction(5, 3)})
    assert [w for _, _, w in t.edges()] == [Fraction(5, 3)]
    tri = GeneralGraph(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])
    t = gomory_hu(tri, {e: 1 for e in tri.edges})
    assert all(t.min_cut(s, r) == 2 for s, r in combinations("abc", 2))
    path = GeneralGraph(["a", "b", "c"], [("a", "b"), ("b", "c")])
    t = gomory_hu(path, {("a", "b"): 1, ("b", "c"): 2})
    assert t.min_cut("a", "c") == 1


def test_gomory_hu_all_pairs(rng):
    nodes = [f"v{i}" for i in range(6)]
    edges = [(a, b) for a, b in combinations(nodes, 2) if rng.random() < 0.6]
    g = GeneralGraph(nodes, edges)
    cap = {e: Fraction(rng.randint(0, 6), rng.randint(1, 3)) for e in g.edges}
    t = gomory_hu(g, cap)
    for s, r in combinations(nodes, 2):
        assert t.min_cut(s, r) == brute_min_cut(g, cap, s, r)


def test_min_odd_cut():
    k2 = GeneralGraph(["a", "b"], [("a", "b")])
    S, val = min_odd_cut(k2, {("a", "b"): Fraction(1, 3)}, ["a", "b"])
    assert val == Fraction(1, 3)
    c4 = cycle(4)
    S, val = min_odd_cut(c4, {e: 1 for e in c4.edges}, list(c4.nodes))
    assert val == 2 and len(S) % 2 == 1
    with pytest.raises(ValueError):
        min_odd_cut(c4, {e: 1 for e in c4.edges}, [])


def test_blossom_separation():
    tri = cycle(3)
    S, viol = separate_blossom(tri, {e: H for e in tri.edges})
    assert set(S) == set(tri.nodes) and viol == H
    c5 = cycle(5)
    S, viol = separate_blossom(c5, {e: H for e in c5.edges})
    assert set(S) == set(c5.nodes) and viol == H
    p = QProblem(3, 3)
    g = p.graph()
    for M in [frozenset(), frozenset({(1, 1), (2, 2), (3, 3)}), frozenset({(1, 2)})]:
        assert separate_blossom(g, {p.ends(e): (1 if e in M else 0) for e in p.edges}) is None


def test_down_gadget_values(k22):
    g = build_down_gadget(k22, QPoint({k22.e1: 1, k22.e2: 1}, 1))
    assert g.xbar[("u1", "w1")] == 0 and g.xbar[g.e_u] == 1 and g.xbar[g.e_w] == 1
    g = build_down_gadget(k22, QPoint({k22.e1: 1}, 0))
    assert g.xbar[g.e_u] == 0 and g.xbar[("u1", "w1")] == 1
    g = build_down_gadget(k22, QPoint({k22.e1: H, k22.e2: H}, H))
    assert g.xbar[("u1", "w1")] == 0 and g.xbar[g.e_u] == H
    with pytest.raises(BaseConstraintViolation, match="point violates base constraints"):
        build_down_gadget(k22, QPoint({k22.e1: H}, 1))


def test_up_gadget_values(k22):
    g = build_up_gadget(k22, QPoint({k22.e1: 1, k22.e2: 1}, 1))
    assert g.xbar[("u1", "w1")] == H and g.xbar[g.ab] == 0
    assert all(g.xbar[e] == H for e in [("u1", "a"), ("w1", "b"), ("u2", "b"), ("w2", "a")])
    g = build_up_gadget(k22, QPoint({}, 0))
    assert g.xbar[g.ab] == 1
    assert all(g.xbar[e] == 0 for e in [("u1", "a"), ("w1", "b"), ("u2", "b"), ("w2", "a")])
    q = Fraction(3, 4)
    with pytest.raises(BaseConstraintViolation, match="x_e1\\+x_e2-y<=1|x_e1 \\+ x_e2 - y <= 1"):
        build_up_gadget(k22, QPoint({k22.e1: q, k22.e2: q}, Fraction(1, 4)))


def test_down_examples(k32):
    pt = QPoint({k32.e1: H, k32.e2: H, (3, 1): H, (3, 2): H}, H)
    inst, viol = separate_down(k32, pt)
    assert inst.kind is Kind.DOWN and inst.S == {"w1", "w2", "u3"} and viol == H
    assert separate_down(k32, QPoint({k32.e1: 1, k32.e2: 1}, 1)) is None
    inst, viol = separate_down(k32, QPoint({k32.e1: Fraction(1, 4), k32.e2: 1}, H))
    assert inst == StdLin(1) and viol == Fraction(1, 4)


def test_up_examples(k22):
    q = Fraction(3, 4)
    pt = QPoint({k22.e1: q, k22.e2: q, (1, 2): Fraction(1, 4), (2, 1): Fraction(1, 4)}, Fraction(1, 4))
    inst, viol = separate_up(k22, pt)
    assert inst in (Up({"u1", "w2"}), Up({"u2", "w1"})) and viol == H
    assert separate_up(k22, QPoint({k22.e1: 1}, 0)) is None
    inst, viol = separate_up(k22, QPoint({k22.e1: 1, k22.e2: 1}, 0))
    assert inst == Up({"u1", "w2"}) and viol == 1


def test_exact_oracle(k22, k32):
    pt = QPoint({k32.e1: H, k32.e2: H, (3, 1): H, (3, 2): H}, H)
    assert separate_exact(k32, pt)[0].kind is Kind.DOWN
    q = Fraction(3, 4)
    pt = QPoint({k22.e1: q, k22.e2: q, (1, 2): Fraction(1, 4), (2, 1): Fraction(1, 4)}, Fraction(1, 4))
    assert separate_exact(k22, pt)[0].kind is Kind.UP
    assert separate_exact(k22, QPoint({}, 0)) is None


@pytest.mark.parametrize("m,n", INSTANCES)
def test_vertices_inside(m, n):
    p = QProblem(m, n)
    for v in vertex_set(p, "down"):
        assert separate_down(p, v) is None
    for v in vertex_set(p, "up"):
        assert separate_up(p, v) is None


@pytest.mark.parametrize("m,n", INSTANCES)
def test_oracles_match_brute_force(m, n, rng):
    p = QProblem(m, n)
    family_hits = {"down": 0, "up": 0}
    for pt in sample_points(p, rng, 120):
        for name, oracle, brute in (("down", separate_down, brute_force_down), ("up", separate_up, brute_force_up)):
            got, ref = oracle(p, pt), brute(p, pt)
            assert (got is None) == (ref is None), (name, pt)
            if got is None:
                continue
            assert got[1] == ref[1], (name, pt)
            assert build(got[0], p).violation(pt) == got[1]
            if got[0].kind in (Kind.DOWN, Kind.UP):
                family_hits[name] += 1
    if (m, n) != (2, 2):
        assert family_hits["down"] > 0
    assert family_hits["up"] > 0
