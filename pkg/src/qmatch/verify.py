"""Instance-level machine checks: validity, facets, completeness, monotonization."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .core import VARIANTS, QProblem, vertex_set
from .exactlp import LE, HPolytope, Row, affine_rank, feasibility_combination, vertex_enumeration
from .inequalities import (
    Degree,
    FamilyInstance,
    Kind,
    NonNeg,
    PerfectDegree,
    StdLin,
    YLower,
    YUpper,
    build,
    enumerate_family,
)


def _base_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    return variant.replace("perfect_", "")


def description_instances(p: QProblem, variant: str) -> list:
    """Family instances of the linear description of ``variant`` on ``p``."""
    base = _base_variant(variant)
    perfect = variant.startswith("perfect_")
    out = [NonNeg(e) for e in p.edges]
    out += [(PerfectDegree if perfect else Degree)(v) for v in p.nodes]
    out += [YLower, YUpper]
    if base in ("down", "exact"):
        out += [StdLin(1), StdLin(2)]
        out += enumerate_family(p, "D")
    if base in ("up", "exact"):
        out += enumerate_family(p, "U")
    return out


def variables(p: QProblem) -> tuple:
    return tuple(p.edges) + ("y",)


def description(p: QProblem, variant: str, drop: Iterable = ()) -> HPolytope:
    """H-system over the edge variables plus ``"y"``; rows are tagged with their instance.

    ``drop`` lists kinds (``Kind`` members) to leave out, for negative controls.
    """
    drop = set(drop)
    insts = [i for i in description_instances(p, variant) if i.kind not in drop]
    return HPolytope(variables(p), [build(i, p).to_row() for i in insts], insts)


def vertex_vectors(p: QProblem, variant: str) -> list:
    return sorted(pt.vector(p.edges) for pt in vertex_set(p, variant))


# -- validity ------------------------------------------------------------------------

@dataclass
class ValidityReport:
    variant: str
    vertices: int
    inequalities: int
    violations: list = field(default_factory=list)  # (instance, vertex point, amount)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self, p=None) -> list:
        head = f"validity [{self.variant}]: {'pass' if self.ok else 'FAIL'} " \
               f"({self.inequalities} inequalities x {self.vertices} vertices)"
        out = [head]
        for inst, pt, amount in self.violations:
            out.append(f"  {inst.describe(p)} violated by {amount} at {pt!r}")
        return out


def check_validity(p: QProblem, variant: str, rhs_shift: Mapping | None = None) -> ValidityReport:
    """Every vertex of ``variant`` against every description row.

    ``rhs_shift`` maps instances to a rhs offset (a corrupted system for
    negative controls).  Only the first witness per instance is kept.
    """
    rhs_shift = dict(rhs_shift or {})
    verts = vertex_set(p, variant)
    insts = description_instances(p, variant)
    extra = set(rhs_shift) - set(insts)
    if extra:
        raise ValueError(f"shifted instances not in the description: {sorted(i.describe(p) for i in extra)}")
    report = ValidityReport(variant, len(verts), len(insts))
    for inst in insts:
        ineq = build(inst, p)
        if inst in rhs_shift:
            ineq = ineq.shifted(rhs_shift[inst])
        for pt in verts:
            v = ineq.violation(pt)
            if v > 0:
                report.violations.append((inst, pt, v))
                break
    return report


# -- facets -------------------------------------------------------------------------

@dataclass
class FacetVerdict:
    instance: FamilyInstance
    variant: str
    facet: bool
    dim: int
    tight_rank: int
    tight: int
    reason: str = ""

    def line(self, p=None) -> str:
        word = "facet" if self.facet else f"not_facet({self.reason})"
        return f"{self.instance.describe(p)} on {self.variant}: {word}"


def polytope_dim(p: QProblem, variant: str) -> int:
    return affine_rank(vertex_vectors(p, variant))


def check_facet(p: QProblem, inst: FamilyInstance, variant: str, dim: int | None = None) -> FacetVerdict:
    """Facet test by the affine rank of the tight vertices."""
    verts = vertex_set(p, variant)
    if dim is None:
        dim = polytope_dim(p, variant)
    ineq = build(inst, p)
    bad = [pt for pt in verts if ineq.violation(pt) > 0]
    if bad:
        return FacetVerdict(inst, variant, False, dim, -1, 0, "invalid")
    tight = [pt.vector(p.edges) for pt in verts if ineq.lhs(pt) == ineq.rhs]
    if not tight:
        return FacetVerdict(inst, variant, False, dim, -1, 0, "no tight vertex")
    r = affine_rank(tight)
    if r == dim:
        return FacetVerdict(inst, variant, False, dim, r, len(tight), "implied equation")
    if r == dim - 1:
        return FacetVerdict(inst, variant, True, dim, r, len(tight))
    return FacetVerdict(inst, variant, False, dim, r, len(tight), f"face of dimension {r} < {dim - 1}")


def facet_table(p: QProblem, variant: str) -> list:
    dim = polytope_dim(p, variant)
    return [check_facet(p, inst, variant, dim) for inst in description_instances(p, variant)]


# -- completeness -----------------------------------------------------------------

@dataclass
class CompletenessReport:
    variant: str
    expected: list
    found: list
    dropped: tuple = ()

    @property
    def missing(self) -> list:
        got = set(self.found)
        return [v for v in self.expected if v not in got]

    @property
    def extra(self) -> list:
        want = set(self.expected)
        return [v for v in self.found if v not in want]

    @property
    def ok(self) -> bool:
        return self.found == self.expected

    @property
    def fractional(self) -> list:
        return [v for v in self.extra if any(c.denominator != 1 for c in v)]

    def lines(self) -> list:
        tag = f" without {','.join(k.value for k in self.dropped)}" if self.dropped else ""
        out = [f"completeness [{self.variant}{tag}]: {'pass' if self.ok else 'FAIL'} "
               f"({len(self.found)} description vertices, {len(self.expected)} expected)"]
        for v in self.extra:
            out.append("  extra vertex " + " ".join(str(c) for c in v))
        for v in self.missing:
            out.append("  missing vertex " + " ".join(str(c) for c in v))
        return out


def check_completeness(p: QProblem, variant: str, drop_families: Iterable = ()) -> CompletenessReport:
    """Vertices of the description against the enumerated vertex set."""
    drop = tuple(Kind(k) if isinstance(k, str) else k for k in drop_families)
    h = description(p, variant, drop)
    return CompletenessReport(variant, vertex_vectors(p, variant), vertex_enumeration(h), drop)


# -- monotonization ------------------------------------------------------------------

@dataclass
class MonotonizationReport:
    instance_ok: bool
    intersection_vertices: int
    exact_vertices: int
    single_ok: bool
    joint_strictly_larger: bool
    joint_vertices: list

    @property
    def ok(self) -> bool:
        return self.instance_ok and self.single_ok and self.joint_strictly_larger

    def lines(self) -> list:
        return [
            f"down/up intersection equals exact polytope: {'pass' if self.instance_ok else 'FAIL'} "
            f"({self.intersection_vertices} vs {self.exact_vertices} vertices)",
            f"segment, one variable monotonized: intersection equals segment: {'pass' if self.single_ok else 'FAIL'}",
            f"segment, both variables monotonized: intersection strictly larger: "
            f"{'pass' if self.joint_strictly_larger else 'FAIL'} ({len(self.joint_vertices)} vertices)",
        ]


def _in_cone_sum(z, gens, rays) -> bool:
    comb, _ = feasibility_combination(z, gens, rays)
    return comb is not None


def _segment_check(rays_up, rays_down, h_up, h_down):
    """Vertices of ``h_up`` and ``h_down`` intersected, after checking both systems
    against the V-descriptions ``conv(gens) + cone(rays)``."""
    gens = [(0, 0), (1, 1)]
    for h, rays in ((h_up, rays_up), (h_down, rays_down)):
        for r in h.rows:
            for g in gens:
                if not r.holds({"z1": Fraction(g[0]), "z2": Fraction(g[1])}):
                    raise AssertionError("hand-derived row cuts off a generator")
            for d in rays:
                if sum(c * d[i] for i, c in enumerate(r.coef.get(v, 0) for v in ("z1", "z2"))) > 0:
                    raise AssertionError("hand-derived row cuts off a ray")
    both = HPolytope(("z1", "z2"), h_up.rows + h_down.rows)
    verts = vertex_enumeration(both)
    for v in verts:
        if not (_in_cone_sum(v, gens, rays_up) and _in_cone_sum(v, gens, rays_down)):
            raise AssertionError(f"vertex {v} lies outside a monotonization")
    return verts


def segment_counterexample() -> tuple:
    """Monotonize ``conv{(0,0),(1,1)}`` in one and in both coordinates.

    Returns the intersection vertices for the single-variable and the
    two-variable case.
    """
    def H(*rows):
        return HPolytope(("z1", "z2"), [Row(dict(zip(("z1", "z2"), a)), LE, b) for a, b in rows])

    # first coordinate only: the segment plus/minus multiples of e1
    single = _segment_check(
        [(1, 0)], [(-1, 0)],
        H(((0, -1), 0), ((0, 1), 1), ((-1, 1), 0)),
        H(((0, -1), 0), ((0, 1), 1), ((1, -1), 0)),
    )
    # both coordinates: the nonnegative orthant and (1,1) minus it
    joint = _segment_check(
        [(1, 0), (0, 1)], [(-1, 0), (0, -1)],
        H(((-1, 0), 0), ((0, -1), 0)),
        H(((1, 0), 1), ((0, 1), 1)),
    )
    return single, joint


def check_monotonization_identity(p: QProblem) -> MonotonizationReport:
    """Down and up systems together cut out exactly the exact polytope."""
    down = description(p, "down")
    up = description(p, "up")
    both = HPolytope(down.variables, down.rows + up.rows, down.tags + up.tags)
    found = vertex_enumeration(both)
    expected = vertex_vectors(p, "exact")
    single, joint = segment_counterexample()
    segment = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))]
    return MonotonizationReport(
        found == expected, len(found), len(expected),
        sorted(single) == segment,
        len(joint) > 2 and all(v in joint for v in segment),
        joint,
    )
