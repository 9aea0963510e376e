from fractions import Fraction

import pytest

from qmatch.core import QProblem, vertex_set
from qmatch.exactlp import (
    EQ,
    GE,
    LE,
    HPolytope,
    Row,
    UnboundedPolytope,
    affine_rank,
    feasibility_combination,
    lp_solve,
    verify_certificate,
    vertex_enumeration,
)
from qmatch.inequalities import Degree, NonNeg, build
from qmatch.verify import description


def box(*names):
    rows = []
    for v in names:
        rows += [Row({v: -1}, LE, 0), Row({v: 1}, LE, 1)]
    return HPolytope(names, rows)


def test_lp_bound():
    h = box("x")
    res = lp_solve({"x": 1}, h)
    assert res.status == "optimal" and res.value == 1
    assert verify_certificate(h, res, {"x": 1}, "max")


def test_lp_matching_polytope_k22():
    p = QProblem(2, 2)
    rows = [build(NonNeg(e), p).to_row() for e in p.edges] + [build(Degree(v), p).to_row() for v in p.nodes]
    h = HPolytope(p.edges, rows)
    obj = {e: 1 for e in p.edges}
    res = lp_solve(obj, h)
    assert res.value == 2
    assert sorted(v for v in res.x.values()) == [0, 0, 1, 1]
    assert verify_certificate(h, res, obj, "max")


def test_lp_infeasible_certificate():
    h = HPolytope(("x",), [Row({"x": 1}, LE, 0), Row({"x": 1}, GE, 1)])
    res = lp_solve({"x": 1}, h)
    assert res.status == "infeasible"
    assert verify_certificate(h, res)


def test_lp_unbounded_and_min():
    h = HPolytope(("x", "z"), [Row({"x": -1}, LE, 0), Row({"z": 1}, LE, 3), Row({"x": 1, "z": -1}, GE, -2)])
    assert lp_solve({"x": 1}, h).status == "unbounded"
    res = lp_solve({"x": 1, "z": 1}, h, sense="min")
    assert res.status == "unbounded"
    res = lp_solve({"x": 1}, h, sense="min")
    assert res.value == 0
    assert verify_certificate(h, res, {"x": 1}, "min")


@pytest.mark.parametrize("variant", ["exact", "down", "up"])
def test_lp_matches_vertex_max(variant, rng):
    p = QProblem(3, 2)
    h = description(p, variant)
    verts = vertex_enumeration(h)
    for _ in range(10):
        obj = {v: Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for v in h.variables}
        res = lp_solve(obj, h)
        best = max(sum(obj[k] * x for k, x in zip(h.variables, v)) for v in verts)
        assert res.value == best
        assert verify_certificate(h, res, obj, "max")


def test_combination_cases():
    gens = [(0, 0), (2, 0), (0, 2)]
    comb, sep = feasibility_combination((0, 0), gens)
    assert sep is None and comb.weights == {0: 1}
    comb, _ = feasibility_combination((1, 0), gens)
    assert comb.weights == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    comb, sep = feasibility_combination((2, 2), gens)
    assert comb is None
    assert all(sep.value(g) >= 0 for g in gens) and sep.value((2, 2)) < 0


def test_combination_with_rays():
    comb, _ = feasibility_combination((5, 1), [(0, 0), (1, 1)], rays=[(1, 0)])
    assert comb is not None and comb.ray_weights == {0: 4}


def test_vertex_enumeration_small():
    assert len(vertex_enumeration(box("a", "b"))) == 4
    simplex = HPolytope(("a", "b", "c"), [Row({"a": -1}, LE, 0), Row({"b": -1}, LE, 0),
                                          Row({"c": -1}, LE, 0), Row({"a": 1, "b": 1, "c": 1}, LE, 1)])
    assert len(vertex_enumeration(simplex)) == 4
    line = HPolytope(("a", "b"), [Row({"a": 1, "b": 1}, EQ, 1), Row({"a": -1}, LE, 0), Row({"b": -1}, LE, 0)])
    assert vertex_enumeration(line) == [(0, 1), (1, 0)]


def test_vertex_enumeration_unbounded():
    h = HPolytope(("a",), [Row({"a": -1}, LE, 0)])
    with pytest.raises(UnboundedPolytope):
        vertex_enumeration(h)


def test_vertex_enumeration_matches_exact_vertices():
    p = QProblem(2, 2)
    verts = vertex_enumeration(description(p, "exact"))
    assert verts == sorted(v.vector(p.edges) for v in vertex_set(p, "exact"))
    assert len(verts) == 7


def test_vertices_are_tight_and_distinct():
    p = QProblem(3, 2)
    h = description(p, "up")
    verts = vertex_enumeration(h)
    assert len(set(verts)) == len(verts)
    dim = len(h.variables)
    for v in verts:
        pt = dict(zip(h.variables, v))
        assert h.contains(pt)
        tight = [[r.coef.get(k, 0) for k in h.variables] for r in h.rows if r.lhs(pt) == r.rhs]
        assert affine_rank([[0] * dim] + tight) == dim


def test_affine_rank():
    assert affine_rank([(1, 2)]) == 0
    assert affine_rank([(0, 0), (1, 1), (2, 2)]) == 1
    # the empty matching, every single edge, and two points with y = 1
    p = QProblem(2, 2)
    pts = [(0, 0, 0, 0, 0)]
    for k in range(4):
        v = [0] * 5
        v[k] = 1
        pts.append(tuple(v))
    pts.append((1, 0, 0, 1, 1))
    assert len(pts) == len(p.edges) + 2
    assert affine_rank(pts) == 5
