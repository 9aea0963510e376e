"""b-matching and capacitated b-matching versions of the one-term polytope.

Includes the two reductions to plain matchings: splitting every node into
``b_v`` copies, and replacing every capacitated edge by a 3-path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Mapping

from .core import (
    ZERO,
    EnumerationTooLarge,
    InvalidInstance,
    QPoint,
    QProblem,
    enum_guard,
)
from .exactlp import HPolytope, affine_rank, feasibility_combination, vertex_enumeration
from .inequalities import (
    BDegree,
    BDown,
    BUp,
    Capacity,
    CapBDown,
    CapBUp,
    FamilyInstance,
    Kind,
    LinearInequality,
    NonNeg,
    StdLin,
    YLower,
    YUpper,
    build,
    in_cut_family,
)

BPoint = QPoint


@dataclass(frozen=True, eq=False)
class BMatchingProblem:
    """Bipartite graph with node bounds ``b``, optional capacities ``c`` and two special edges.

    ``edge_ends`` maps an edge id to its (U-side, W-side) endpoints.
    """

    nodes: tuple
    edge_ends: Mapping
    e1: object
    e2: object
    b: Mapping
    c: Mapping | None = None
    base: QProblem | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edge_ends", dict(self.edge_ends))
        object.__setattr__(self, "b", {v: int(self.b.get(v, 1)) for v in self.nodes})
        if self.c is not None:
            object.__setattr__(self, "c", {e: int(self.c.get(e, 1)) for e in self.edge_ends})
        if any(v < 1 for v in self.b.values()):
            raise InvalidInstance("node bounds b must be positive integers")
        for e in (self.e1, self.e2):
            if e not in self.edge_ends:
                raise InvalidInstance(f"special edge {e!r} not in graph")
        if set(self.ends(self.e1)) & set(self.ends(self.e2)):
            raise InvalidInstance("special edges must be node-disjoint")
        if self.c is None:
            for e in (self.e1, self.e2):
                if all(self.b[v] != 1 for v in self.ends(e)):
                    raise InvalidInstance(f"special edge {e!r} needs an endpoint with b = 1")
        else:
            if any(v < 1 for v in self.c.values()):
                raise InvalidInstance("capacities must be positive integers")
            if self.c[self.e1] != 1 or self.c[self.e2] != 1:
                raise InvalidInstance("special edges must have capacity 1")

    @classmethod
    def complete(cls, p: QProblem, b: Mapping | None = None, c: Mapping | None = None) -> "BMatchingProblem":
        return cls(p.nodes, {e: p.ends(e) for e in p.edges}, p.e1, p.e2, dict(b or {}),
                   None if c is None else dict(c), p)

    @property
    def capacitated(self) -> bool:
        return self.c is not None

    @property
    def endpoint_rule(self) -> bool:
        """Each special edge has an endpoint with ``b = 1``."""
        return all(any(self.b[v] == 1 for v in self.ends(e)) for e in (self.e1, self.e2))

    @cached_property
    def edges(self) -> tuple:
        return tuple(self.edge_ends)

    @cached_property
    def special(self) -> frozenset:
        return frozenset(self.ends(self.e1) + self.ends(self.e2))

    def ends(self, e) -> tuple:
        return tuple(self.edge_ends[e])

    def induced(self, S) -> list:
        S = set(S)
        return [e for e, (a, b) in self.edge_ends.items() if a in S and b in S]

    def cut(self, S) -> list:
        S = set(S)
        return [e for e, (a, b) in self.edge_ends.items() if (a in S) != (b in S)]

    def incident(self, v) -> list:
        return [e for e, ends in self.edge_ends.items() if v in ends]

    def display_order(self, nodes) -> tuple:
        idx = {v: i for i, v in enumerate(self.nodes)}
        return tuple(sorted(nodes, key=lambda v: (v not in self.special, idx[v])))

    def edge_bound(self, e) -> int:
        a, b = self.ends(e)
        bound = min(self.b[a], self.b[b])
        if self.c is not None:
            bound = min(bound, self.c[e])
        return bound


def forced_y(p: BMatchingProblem, x: Mapping) -> int:
    return 1 if x.get(p.e1, 0) == 1 and x.get(p.e2, 0) == 1 else 0


def enumerate_bmatchings(p: BMatchingProblem, guard: int | None = None, max_points: int = 200000) -> list:
    """Every integer (capacitated) b-matching paired with its forced ``y``."""
    limit = enum_guard() if guard is None else guard
    edges = p.edges
    if len(edges) > limit:
        raise EnumerationTooLarge(f"instance too large for enumeration: {len(edges)} edges > guard {limit}")
    ends = [p.ends(e) for e in edges]
    bounds = [p.edge_bound(e) for e in edges]
    load = {v: 0 for v in p.nodes}
    out = []
    x = [0] * len(edges)

    def rec(k):
        if k == len(edges):
            if len(out) >= max_points:
                raise EnumerationTooLarge("b-matching enumeration exceeded point guard")
            vals = dict(zip(edges, x))
            out.append(QPoint(vals, forced_y(p, vals)))
            return
        a, b = ends[k]
        top = min(bounds[k], p.b[a] - load[a], p.b[b] - load[b])
        for v in range(top + 1):
            x[k] = v
            load[a] += v
            load[b] += v
            rec(k + 1)
            load[a] -= v
            load[b] -= v
        x[k] = 0

    rec(0)
    return out


# -- node splitting --------------------------------------------------------------

@dataclass(frozen=True)
class SplitLift:
    original: BMatchingProblem
    problem: BMatchingProblem  # b = 1 everywhere
    point: QPoint
    copies: dict  # original node -> tuple of copy ids
    origin: dict  # copy id -> original node

    def to_qproblem(self):
        """Complete-bipartite view of the split instance when the original is complete."""
        if self.original.base is None:
            raise InvalidInstance("split graph is complete bipartite only for complete originals")
        base = self.original.base
        ucopies = [c for u in base.U for c in self.copies[u]]
        wcopies = [c for w in base.W for c in self.copies[w]]
        ui = {c: i + 1 for i, c in enumerate(ucopies)}
        wi = {c: j + 1 for j, c in enumerate(wcopies)}
        a1, b1 = self.problem.ends(self.problem.e1)
        a2, b2 = self.problem.ends(self.problem.e2)
        q = QProblem(len(ucopies), len(wcopies), (ui[a1], wi[b1]), (ui[a2], wi[b2]))
        x = {(ui[a], wi[b]): v for e, v in self.point.x.items() for a, b in [self.problem.ends(e)]}
        return q, QPoint.of(q, x, self.point.y), {(ui[a], wi[b]): e for e, (a, b) in self.problem.edge_ends.items()}


def split_nodes_lift(p: BMatchingProblem, pt: QPoint) -> SplitLift:
    """Split every non-special node ``v`` into ``b_v`` copies ``(v, k)``; values ``x_e / (b_u b_w)``."""
    if p.capacitated:
        raise InvalidInstance("node splitting applies to uncapacitated instances")
    for v in p.special:
        if p.b[v] != 1:
            raise InvalidInstance(f"special node {v!r} has b = {p.b[v]}; splitting needs b = 1 on all four special nodes")
    for e in p.edges:
        if pt[e] < 0:
            raise ValueError(f"negative value on edge {e!r}")
    copies = {}
    for v in p.nodes:
        copies[v] = (v,) if v in p.special else tuple((v, k) for k in range(1, p.b[v] + 1))
    origin = {c: v for v, cs in copies.items() for c in cs}
    nodes = tuple(c for v in p.nodes for c in copies[v])
    ends, x = {}, {}
    for e in p.edges:
        a, b = p.ends(e)
        share = pt[e] / (p.b[a] * p.b[b])
        for ca in copies[a]:
            for cb in copies[b]:
                ends[(ca, cb)] = (ca, cb)
                x[(ca, cb)] = share
    a1, b1 = p.ends(p.e1)
    a2, b2 = p.ends(p.e2)
    lifted = BMatchingProblem(nodes, ends, (a1, b1), (a2, b2), {v: 1 for v in nodes})
    return SplitLift(p, lifted, QPoint(x, pt.y), copies, origin)


def project_split(lift: SplitLift, point: QPoint | None = None) -> QPoint:
    point = lift.point if point is None else point
    p = lift.original
    x = {e: ZERO for e in p.edges}
    index = {p.ends(e): e for e in p.edges}
    for e, v in point.x.items():
        a, b = lift.problem.ends(e)
        x[index[(lift.origin[a], lift.origin[b])]] += v
    return QPoint(x, point.y)


# -- 3-path subdivision -------------------------------------------------------------

@dataclass(frozen=True)
class SubdivisionLift:
    original: BMatchingProblem
    problem: BMatchingProblem
    point: QPoint
    paths: dict  # original edge -> (first, middle, last) lifted edge ids


def subdivide_edges_lift(p: BMatchingProblem, pt: QPoint) -> SubdivisionLift:
    """Replace every edge ``{u,w}`` by ``u-(u,e)-(w,e)-w`` with values ``(x, c - x, x)``."""
    if not p.capacitated:
        raise InvalidInstance("subdivision applies to capacitated instances")
    for e in p.edges:
        if pt[e] < 0:
            raise ValueError(f"negative value on edge {e!r}")
        if pt[e] > p.c[e]:
            raise ValueError(f"value {pt[e]} on edge {e!r} exceeds its capacity {p.c[e]}")
    nodes = list(p.nodes)
    b = dict(p.b)
    ends, x, paths = {}, {}, {}
    for e in p.edges:
        u, w = p.ends(e)
        ue, we = (u, e), (w, e)
        nodes += [ue, we]
        b[ue] = b[we] = p.c[e]
        first, middle, last = (u, ue), (we, ue), (we, w)
        # keep (U-side, W-side) orientation: (w,e) sits on the U side, (u,e) on the W side
        ends[first], ends[middle], ends[last] = (u, ue), (we, ue), (we, w)
        x[first], x[middle], x[last] = pt[e], p.c[e] - pt[e], pt[e]
        paths[e] = (first, middle, last)
    lifted = BMatchingProblem(tuple(nodes), ends, paths[p.e1][0], paths[p.e2][0], b)
    return SubdivisionLift(p, lifted, QPoint(x, pt.y), paths)


def project_subdivision(lift: SubdivisionLift, point: QPoint | None = None) -> QPoint:
    point = lift.point if point is None else point
    return QPoint({e: point[path[0]] for e, path in lift.paths.items()}, point.y)


# -- families and descriptions ------------------------------------------------------

def cut_sets(p: BMatchingProblem, max_s: int | None = None):
    nodes = p.nodes
    top = len(nodes) if max_s is None else min(max_s, len(nodes))
    for k in range(1, top + 1):
        for S in combinations(nodes, k):
            if in_cut_family(p, S):
                yield frozenset(S)


def _subsets_of(items, max_f):
    items = tuple(items)
    top = len(items) if max_f is None else min(max_f, len(items))
    for k in range(top + 1):
        yield from combinations(items, k)


def bmatching_families(p: BMatchingProblem, max_s: int | None = None, max_f: int | None = None,
                       parity: bool = True) -> list:
    """Down/up instances over sets cut by both special edges.

    With ``parity=False`` the parity filter is skipped (every instance is still
    valid, just redundant).
    """
    out = []
    for S in cut_sets(p, max_s):
        bS = sum(p.b[v] for v in S)
        if not p.capacitated:
            if not parity or bS % 2 == 1:
                out.append(BDown(S))
            if not parity or bS % 2 == 0:
                out.append(BUp(S))
            continue
        free = sorted(set(p.cut(S)) - {p.e1, p.e2}, key=p.edges.index)
        for F in _subsets_of(free, max_f):
            total = bS + sum(p.c[e] for e in F)
            if not parity or total % 2 == 1:
                out.append(CapBDown(S, F))
            if not parity or total % 2 == 0:
                out.append(CapBUp(S, F))
    return out


def description_instances(p: BMatchingProblem, max_s=None, max_f=None) -> list:
    out = [NonNeg(e) for e in p.edges] + [YLower, YUpper, StdLin(1), StdLin(2)]
    out += [BDegree(v) for v in p.nodes]
    if p.capacitated:
        out += [Capacity(e) for e in p.edges]
    return out + bmatching_families(p, max_s, max_f)


def bdescription(p: BMatchingProblem, max_s=None, max_f=None) -> HPolytope:
    insts = description_instances(p, max_s, max_f)
    rows = [build(i, p).to_row() for i in insts]
    return HPolytope(tuple(p.edges) + ("y",), rows, tuple(insts))


def redundant_inequalities(p: BMatchingProblem) -> list:
    """The four redundant inequalities for sets cut by exactly one special edge."""
    out = []
    for k in range(1, len(p.nodes) + 1):
        for S in combinations(p.nodes, k):
            Sset = set(S)
            cut = [(a in Sset) != (b in Sset) for a, b in (p.ends(p.e1), p.ends(p.e2))]
            if cut[0] == cut[1]:
                continue
            i, j = (1, 2) if cut[1] else (2, 1)
            ei, ej = (p.e1, p.e2) if i == 1 else (p.e2, p.e1)
            bS = sum(p.b[v] for v in S)
            inner = {e: Fraction(1) for e in p.induced(S)}

            def plus(extra):
                acc = dict(inner)
                for e, c in extra.items():
                    acc[e] = acc.get(e, ZERO) + c
                return acc

            tag = lambda n: FamilyInstance(Kind.DERIVED, S=frozenset(S), index=n, label=f"R{n}")
            out.append(LinearInequality(plus({ei: -1}), 1, bS // 2, "<=", tag(1)))
            out.append(LinearInequality(plus({ej: 1}), -1, (bS + 1) // 2, "<=", tag(2)))
            out.append(LinearInequality(dict(inner), 1, (bS + 1) // 2, "<=", tag(3)))
            out.append(LinearInequality(plus({p.e1: 1, p.e2: 1}), -1, (bS + 2) // 2, "<=", tag(4)))
    return out


@dataclass
class BMatchingReport:
    ok: bool
    points: int
    validity_failures: list = field(default_factory=list)
    bad_pair_failures: list = field(default_factory=list)
    h_vertices: list = field(default_factory=list)
    extreme_points: list = field(default_factory=list)
    complete: bool = False
    redundant_invalid: list = field(default_factory=list)
    redundant_new_facets: list = field(default_factory=list)
    redundant_facets_matching_description: int = 0
    endpoint_rule: bool = True

    def lines(self) -> list:
        note = [] if self.endpoint_rule else [
            "note: a special edge has no endpoint with b = 1; the description is not expected to be complete"]
        return note + [
            f"integer points: {self.points}",
            f"validity: {'pass' if not self.validity_failures else 'FAIL ' + str(len(self.validity_failures))}",
            f"x_e1 + x_e2 - 2y <= 1: {'pass' if not self.bad_pair_failures else 'FAIL'}",
            f"completeness: {'pass' if self.complete else 'FAIL'} "
            f"({len(self.h_vertices)} description vertices, {len(self.extreme_points)} integer extreme points)",
            f"redundant inequalities valid: {'pass' if not self.redundant_invalid else 'FAIL'}; "
            f"new facets: {len(self.redundant_new_facets)}",
        ]


def _vec(pt: QPoint, edges) -> tuple:
    return pt.vector(edges)


def extreme_points(points: list) -> list:
    """Points of the list not in the convex hull of the others."""
    vecs = sorted(set(points))
    out = []
    for i, v in enumerate(vecs):
        others = vecs[:i] + vecs[i + 1:]
        if not others:
            out.append(v)
            continue
        comb, _ = feasibility_combination(v, others)
        if comb is None:
            out.append(v)
    return out


def verify_bmatching_description(p: BMatchingProblem, max_s=None, max_f=None, guard=None) -> BMatchingReport:
    edges = p.edges
    pts = enumerate_bmatchings(p, guard)
    vecs = [_vec(q, edges) for q in pts]
    validity = []
    for inst in bmatching_families(p, max_s, max_f, parity=False) + description_instances(p, 0, 0):
        ineq = build(inst, p)
        for q in pts:
            if ineq.violation(q) > 0:
                validity.append((inst, q))
                break
    bad_pair = [q for q in pts if q[p.e1] + q[p.e2] - 2 * q.y > 1]

    h = bdescription(p, max_s, max_f)
    hv = vertex_enumeration(h)
    ext = extreme_points(vecs)
    complete = sorted(hv) == sorted(ext)

    invalid, new_facets, matched = [], [], 0
    if not p.capacitated:
        dim = affine_rank(hv)
        desc_faces = set()
        for inst in h.tags:
            ineq = build(inst, p)
            tight = frozenset(k for k, v in enumerate(hv) if _lhs_vec(ineq, v, edges) == ineq.rhs)
            if affine_rank([hv[k] for k in tight]) == dim - 1:
                desc_faces.add(tight)
        for ineq in redundant_inequalities(p):
            if any(ineq.violation(q) > 0 for q in pts):
                invalid.append(ineq)
                continue
            tight = frozenset(k for k, v in enumerate(hv) if _lhs_vec(ineq, v, edges) == ineq.rhs)
            if tight and affine_rank([hv[k] for k in tight]) == dim - 1:
                if tight in desc_faces:
                    matched += 1
                else:
                    new_facets.append(ineq)
    ok = not validity and not bad_pair and complete and not invalid and not new_facets
    return BMatchingReport(ok, len(pts), validity, bad_pair, hv, ext, complete, invalid, new_facets, matched,
                           p.endpoint_rule)


def _lhs_vec(ineq: LinearInequality, vec: tuple, edges) -> Fraction:
    pos = {e: i for i, e in enumerate(edges)}
    total = ineq.ycoef * vec[-1]
    for e, c in ineq.xcoef.items():
        total += c * vec[pos[e]]
    return total
