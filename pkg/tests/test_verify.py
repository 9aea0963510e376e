from fractions import Fraction

import pytest

from conftest import INSTANCES
from qmatch.core import QProblem
from qmatch.inequalities import Degree, Kind, NonNeg, StdLin, YLower, YUpper
from qmatch.verify import (
    check_completeness,
    check_facet,
    check_monotonization_identity,
    check_validity,
    description_instances,
    facet_table,
    polytope_dim,
    segment_counterexample,
)


@pytest.mark.parametrize("m,n,variant", [(2, 2, "exact"), (3, 2, "down"), (2, 3, "up"), (3, 3, "exact")])
def test_validity(m, n, variant):
    assert check_validity(QProblem(m, n), variant).ok


def test_validity_negative_control(k22):
    inst = description_instances(k22, "exact")[-1]
    rep = check_validity(k22, "exact", {inst: -1})
    assert not rep.ok
    bad, witness, amount = rep.violations[0]
    assert bad == inst and amount > 0


def test_facet_examples(k22):
    assert not check_facet(k22, YUpper, "down").facet
    assert check_facet(k22, YUpper, "up").facet
    assert not check_facet(k22, NonNeg(k22.e1), "exact").facet
    assert check_facet(k22, NonNeg(k22.e1), "up").facet
    p = QProblem(3, 3)
    assert all(check_facet(p, Degree(v), "exact").facet for v in p.nodes)


def test_facet_reasons(k22):
    v = check_facet(k22, YUpper, "down")
    assert v.reason.startswith("face of dimension")
    assert check_facet(k22, StdLin(1), "up").reason == "invalid"


@pytest.mark.parametrize("m,n", INSTANCES)
def test_full_dimension(m, n):
    p = QProblem(m, n)
    for variant in ("exact", "down", "up"):
        assert polytope_dim(p, variant) == len(p.edges) + 1


def expected_facet(p, inst, variant):
    k = {v: len(p.incident(v)) for v in p.nodes}
    if inst.kind is Kind.NONNEG:
        return variant == "up" or inst.edge not in (p.e1, p.e2)
    if inst.kind is Kind.DEGREE:
        if variant == "up":
            return True
        if variant == "down":
            return k[inst.node] >= 3 or inst.node in p.special
        return k[inst.node] >= 3
    if inst.kind is Kind.Y_LOWER:
        return True
    if inst.kind is Kind.Y_UPPER:
        return variant == "up"
    return True  # linearization, down and up sets


@pytest.mark.parametrize("m,n", INSTANCES)
def test_facet_matrix(m, n):
    p = QProblem(m, n)
    for variant in ("exact", "down", "up"):
        for verdict in facet_table(p, variant):
            assert verdict.facet == expected_facet(p, verdict.instance, variant), verdict.line(p)


@pytest.mark.parametrize("m,n", INSTANCES)
def test_completeness_all_variants(m, n):
    p = QProblem(m, n)
    variants = ["exact", "down", "up"]
    if m == n:
        variants += ["perfect_exact", "perfect_down", "perfect_up"]
    for variant in variants:
        rep = check_completeness(p, variant)
        assert rep.ok, rep.lines()


def test_completeness_counts():
    assert len(check_completeness(QProblem(2, 2), "exact").found) == 7
    assert len(check_completeness(QProblem(3, 3), "perfect_exact").found) == 6


def test_completeness_negative_controls():
    rep = check_completeness(QProblem(2, 2), "exact", [Kind.UP])
    assert not rep.ok
    # the down system stays integral; the spurious vertex is (chi{e1,e2}, 0)
    assert rep.extra == [(1, 0, 0, 1, 0)]
    rep = check_completeness(QProblem(3, 2), "exact", [Kind.DOWN])
    assert rep.fractional
    h = Fraction(1, 2)
    assert (h, 0, 0, h, h, h, h) in rep.fractional


@pytest.mark.parametrize("m,n", [(2, 2), (3, 2)])
def test_monotonization(m, n):
    rep = check_monotonization_identity(QProblem(m, n))
    assert rep.instance_ok and rep.single_ok and rep.joint_strictly_larger and rep.ok


def test_segment():
    single, joint = segment_counterexample()
    assert single == [(0, 0), (1, 1)]
    assert joint == [(0, 0), (0, 1), (1, 0), (1, 1)]
