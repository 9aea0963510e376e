from fractions import Fraction

import pytest

from qmatch.bmatching import (
    BMatchingProblem,
    bmatching_families,
    enumerate_bmatchings,
    redundant_inequalities,
    project_split,
    project_subdivision,
    split_nodes_lift,
    subdivide_edges_lift,
    verify_bmatching_description,
)
from qmatch.core import InvalidInstance, QPoint, QProblem, vertex_set
from qmatch.inequalities import Kind, build, enumerate_family

H = Fraction(1, 2)


def bp(m, n, b=None, c=None):
    return BMatchingProblem.complete(QProblem(m, n), b or {}, c)


def caps(p, default=1, **over):
    c = {e: default for e in p.edges}
    for k, v in over.items():
        c[tuple(int(t) for t in k[1:].split("_"))] = v
    return c


def random_point(p, rng, top=2):
    x = {e: Fraction(rng.randint(0, 4 * top), 4) for e in p.edges}
    if p.capacitated:
        x = {e: min(v, p.c[e]) for e, v in x.items()}
    return QPoint(x, Fraction(rng.randint(0, 4), 4))


def test_invariants():
    with pytest.raises(InvalidInstance, match="endpoint with b = 1"):
        bp(2, 2, {"u1": 2, "w1": 2})
    q = QProblem(2, 2)
    with pytest.raises(InvalidInstance, match="capacity 1"):
        BMatchingProblem.complete(q, {}, {e: 2 for e in q.edges})
    with pytest.raises(InvalidInstance):
        bp(2, 2, {"u1": 0})


def test_enumeration():
    for m, n in [(2, 2), (3, 2)]:
        p = bp(m, n)
        assert set(enumerate_bmatchings(p)) == set(vertex_set(QProblem(m, n), "exact"))
    q = QProblem(2, 2)
    p = BMatchingProblem.complete(q, {v: 2 for v in q.nodes}, {e: 1 for e in q.edges})
    pts = enumerate_bmatchings(p)
    assert len(pts) == 16
    p = bp(3, 2, {"u3": 2})
    assert all(pt[(3, 1)] <= 1 for pt in enumerate_bmatchings(p))


def test_split_examples(rng):
    p = bp(2, 2)
    pt = random_point(p, rng, 1)
    lift = split_nodes_lift(p, pt)
    by_ends = {lift.problem.ends(e): v for e, v in lift.point.x.items()}
    assert by_ends == {p.ends(e): pt[e] for e in p.edges}
    assert project_split(lift) == pt

    p = bp(3, 2, {"u3": 2})
    lift = split_nodes_lift(p, QPoint({(3, 1): 1}, 0))
    vals = {e: v for e, v in lift.point.x.items() if v}
    assert vals == {(("u3", 1), "w1"): H, (("u3", 2), "w1"): H}
    with pytest.raises(InvalidInstance, match="all four special nodes"):
        split_nodes_lift(bp(2, 2, {"u1": 2}), QPoint({}, 0))


def test_split_degree_and_roundtrip(rng):
    p = bp(3, 3, {"u3": 2, "w3": 2})
    ok = 0
    for k in range(50):
        pt = random_point(p, rng, 1)
        if k % 2:
            # scale into the degree bounds so the lifted degrees are exercised
            pt = QPoint({e: v / 3 for e, v in pt.x.items()}, pt.y)
        lift = split_nodes_lift(p, pt)
        assert project_split(lift) == pt
        if all(sum(pt[e] for e in p.incident(v)) <= p.b[v] for v in p.nodes):
            ok += 1
            lp = lift.problem
            assert all(sum(lift.point[e] for e in lp.incident(v)) <= 1 for v in lp.nodes)
    assert ok > 0


def test_split_integral_and_y():
    p = bp(3, 3, {"u3": 2, "w3": 2})
    lift = split_nodes_lift(p, QPoint({}, 0))
    lp = lift.problem
    M = {lp.e1: 1, lp.e2: 1, (("u3", 1), ("w3", 2)): 1, (("u3", 2), ("w3", 1)): 1}
    proj = project_split(lift, QPoint(M, 1))
    assert proj == QPoint({p.e1: 1, p.e2: 1, (3, 3): 2}, 1)
    assert all(v.denominator == 1 for v in proj.x.values())
    # the lifted special edges are present exactly when both originals are 1
    assert lp.ends(lp.e1) == p.ends(p.e1) and lp.ends(lp.e2) == p.ends(p.e2)


def test_subdivision_examples():
    q = QProblem(2, 2)
    p = BMatchingProblem.complete(q, {}, caps(q))
    lift = subdivide_edges_lift(p, QPoint({(1, 2): 1}, 0))
    assert [lift.point[e] for e in lift.paths[(1, 2)]] == [1, 0, 1]
    p = BMatchingProblem.complete(q, {"u1": 3, "w2": 3}, caps(q, e1_2=3))
    lift = subdivide_edges_lift(p, QPoint({(1, 2): Fraction(3, 2)}, 0))
    assert [lift.point[e] for e in lift.paths[(1, 2)]] == [Fraction(3, 2)] * 3
    lp = lift.problem
    for e, (first, middle, last) in lift.paths.items():
        ue, we = lp.ends(first)[1], lp.ends(middle)[0]
        assert lift.point[first] + lift.point[middle] == p.c[e] == lp.b[ue]
        assert lift.point[middle] + lift.point[last] == p.c[e] == lp.b[we]
    with pytest.raises(ValueError, match="exceeds its capacity"):
        subdivide_edges_lift(p, QPoint({(1, 2): 4}, 0))


def test_subdivision_roundtrip(rng):
    q = QProblem(3, 2)
    p = BMatchingProblem.complete(q, {"u3": 2, "w1": 2}, caps(q, e3_1=2))
    for _ in range(50):
        pt = random_point(p, rng, 2)
        assert project_subdivision(subdivide_edges_lift(p, pt)) == pt


def test_subdivision_integral_and_y():
    q = QProblem(2, 2)
    p = BMatchingProblem.complete(q, {}, caps(q))
    lift = subdivide_edges_lift(p, QPoint({q.e1: 1, q.e2: 1}, 1))
    lp = lift.problem
    assert lp.e1 == lift.paths[q.e1][0] and lp.e2 == lift.paths[q.e2][0]
    proj = project_subdivision(lift)
    assert proj == QPoint({q.e1: 1, q.e2: 1}, 1)
    assert all(v.denominator == 1 for v in lift.point.x.values())


def test_families_unit_b():
    for m, n in [(2, 2), (3, 2), (3, 3)]:
        q = QProblem(m, n)
        p = BMatchingProblem.complete(q)
        downs = {i.S for i in bmatching_families(p) if i.kind is Kind.B_DOWN}
        assert all(len(S) % 2 == 1 for S in downs)
        for inst in enumerate_family(q, "D_tilde"):
            assert inst.S in downs
            a = build(inst, q)
            b = build(next(i for i in bmatching_families(p) if i.kind is Kind.B_DOWN and i.S == inst.S), p)
            assert (a.xcoef, a.ycoef, a.rhs) == (b.xcoef, b.ycoef, b.rhs)


def test_parity_filter_and_empty_f():
    q = QProblem(2, 2)
    p = BMatchingProblem.complete(q)
    for inst in bmatching_families(p):
        bS = sum(p.b[v] for v in inst.S)
        assert (inst.kind is Kind.B_DOWN) == (bS % 2 == 1)
    pc = BMatchingProblem.complete(q, {}, caps(q))
    plain = {(i.kind.value[-2:], i.S) for i in bmatching_families(p)}
    capped = {(i.kind.value[-2:], i.S) for i in bmatching_families(pc) if not i.F}
    assert plain == capped
    for inst in bmatching_families(pc):
        if not inst.F:
            assert build(inst, pc).xcoef == build(
                next(i for i in bmatching_families(p) if i.S == inst.S and i.kind.value[-2:] == inst.kind.value[-2:]), p
            ).xcoef


SMALL = [
    ("unit K22", lambda: bp(2, 2)),
    ("K22 endpoint rule", lambda: bp(2, 2, {"u1": 2, "w2": 2})),
    ("K32 b(u3)=2", lambda: bp(3, 2, {"u3": 2})),
    ("K22 capacitated", lambda: BMatchingProblem.complete(
        QProblem(2, 2), {"u1": 2, "w2": 2}, caps(QProblem(2, 2), e1_2=2))),
    ("K32 capacitated", lambda: BMatchingProblem.complete(
        QProblem(3, 2), {"u3": 2, "w1": 2}, caps(QProblem(3, 2), e3_1=2))),
]


@pytest.mark.parametrize("name,make", SMALL, ids=[s[0] for s in SMALL])
def test_description_reports(name, make):
    p = make()
    r = verify_bmatching_description(p)
    assert not r.validity_failures and not r.bad_pair_failures
    assert r.complete, r.lines()
    assert not r.redundant_invalid and not r.redundant_new_facets
    assert r.ok


def test_unit_b_matches_plain_vertices():
    q = QProblem(2, 2)
    r = verify_bmatching_description(BMatchingProblem.complete(q))
    assert sorted(r.h_vertices) == sorted(v.vector(q.edges) for v in vertex_set(q, "exact"))


def test_capacitated_needs_endpoint_rule():
    # both endpoints of each special edge at b = 2: x_e1 + x_e2 - y <= 1 is missed
    q = QProblem(2, 2)
    p = BMatchingProblem.complete(q, {v: 2 for v in q.nodes}, caps(q))
    assert not p.endpoint_rule
    r = verify_bmatching_description(p)
    assert not r.validity_failures
    assert not r.complete
    extra = set(r.h_vertices) - set(r.extreme_points)
    assert extra == {(1, 0, 0, 1, 0)}


def test_parity_filtered_instances_redundant(rng):
    q = QProblem(2, 2)
    p = BMatchingProblem.complete(q, {"u1": 2, "w2": 2}, caps(q, e1_2=2))
    kept = [build(i, p) for i in bmatching_families(p)]
    from qmatch.bmatching import description_instances

    kept += [build(i, p) for i in description_instances(p, 0, 0)]
    filtered = [build(i, p) for i in bmatching_families(p, parity=False)]
    pts = enumerate_bmatchings(p)
    assert all(q_.violation(pt) <= 0 for q_ in filtered for pt in pts)
    accepted = 0
    while accepted < 200:
        pt = random_point(p, rng, 2)
        if all(k.violation(pt) <= 0 for k in kept):
            accepted += 1
            assert all(f.violation(pt) <= 0 for f in filtered)


def test_redundant_rows_valid():
    p = bp(3, 2, {"u3": 2})
    pts = enumerate_bmatchings(p)
    for ineq in redundant_inequalities(p):
        assert all(ineq.violation(pt) <= 0 for pt in pts)
