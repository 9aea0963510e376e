"""Constructive convex decompositions on tight faces of the down and up polytopes.

Both pipelines lift the point into a gadget graph, write the lifted vector as
an integer multiset of matchings, normalise the multiset with exchange steps
along symmetric-difference components, and map every matching back.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Mapping

from .core import (
    ZERO,
    ConvexCombination,
    GeneralGraph,
    QMatchError,
    QPoint,
    QProblem,
    enumerate_matchings,
    y_of,
)
from .exactlp import EQ, HPolytope, Row, feasibility_combination, lp_solve
from .inequalities import Kind, StdLin, build, enumerate_family
from .separation import (
    build_down_gadget,
    build_up_gadget,
    down_base,
    separate_blossom,
    separate_down,
    separate_up,
    up_base,
)


class DecompositionError(QMatchError, ValueError):
    pass


class HypothesisError(DecompositionError):
    pass


@dataclass
class MatchingCombination:
    """``xbar = sum(weight * chi(M))`` plus its integer multiset view ``k * xbar``."""

    terms: list  # (frozenset matching, Fraction weight)
    k: int
    multiset: list = field(default_factory=list)  # [matching, count]

    def weighted_sum(self, edges) -> dict:
        acc = {e: ZERO for e in edges}
        for m, w in self.terms:
            for e in m:
                acc[e] += w
        return acc


def _fractional_matching_violation(g: GeneralGraph, xbar: Mapping):
    for e in g.edges:
        if xbar.get(e, ZERO) < 0:
            return f"nonnegativity of edge {e}", -xbar[e]
    for v in g.nodes:
        d = sum((xbar.get(e, ZERO) for e in g.incidence[v]), ZERO)
        if d > 1:
            return f"degree bound at {v}", d - 1
    hit = separate_blossom(g, xbar)
    if hit:
        S, viol = hit
        return f"blossom inequality for S={{{','.join(g.label(v) for v in sorted(S, key=g.index.get))}}}", viol
    return None


def decompose_matching(g: GeneralGraph, xbar: Mapping, guard: int | None = None) -> MatchingCombination:
    """Exact convex combination of matchings of ``g`` with weighted sum ``xbar``."""
    bad = _fractional_matching_violation(g, xbar)
    if bad:
        raise DecompositionError(f"not in the matching polytope: violates {bad[0]} by {bad[1]}")
    support = [e for e in g.edges if xbar.get(e, ZERO) > 0]
    sub = GeneralGraph(g.nodes, support)
    matchings = enumerate_matchings(sub, guard)
    target = [Fraction(xbar[e]) for e in support]
    gens = [[1 if e in m else 0 for e in support] for m in matchings]
    comb, sep = feasibility_combination(target, gens)
    if comb is None:  # cannot happen for points passing the membership check
        raise DecompositionError("exact LP found no combination")
    terms = [(matchings[i], w) for i, w in sorted(comb.weights.items())]
    k = 1
    for _, w in terms:
        k = lcm(k, w.denominator)
    multiset = [[m, int(w * k)] for m, w in terms]
    return MatchingCombination(terms, k, multiset)


def multiset_sum(multiset, edges=None) -> dict:
    acc: dict = {}
    for m, c in multiset:
        for e in m:
            acc[e] = acc.get(e, 0) + c
    if edges is not None:
        for e in edges:
            acc.setdefault(e, 0)
    return acc


def _component(edges: frozenset, start) -> frozenset:
    """Connected component (as an edge set) of ``edges`` containing edge ``start``."""
    by_node: dict = {}
    for e in edges:
        for v in e:
            by_node.setdefault(v, []).append(e)
    seen = {start}
    stack = [start]
    while stack:
        e = stack.pop()
        for v in e:
            for f in by_node[v]:
                if f not in seen:
                    seen.add(f)
                    stack.append(f)
    return frozenset(seen)


def _merge(multiset) -> list:
    acc: dict = {}
    order = []
    for m, c in multiset:
        if c <= 0:
            continue
        if m not in acc:
            order.append(m)
            acc[m] = 0
        acc[m] += c
    return [[m, acc[m]] for m in order]


def _exchange(multiset, select_a, select_b, anchor, log):
    ms = _merge(multiset)
    while True:
        ia = next((i for i, (m, c) in enumerate(ms) if select_a(m)), None)
        ib = next((i for i, (m, c) in enumerate(ms) if select_b(m)), None)
        if ia is None or ib is None:
            return ms
        Ma, ca = ms[ia]
        Mb, cb = ms[ib]
        t = min(ca, cb)
        C = _component(Ma ^ Mb, anchor)
        newa, newb = Ma ^ C, Mb ^ C
        before = multiset_sum(ms)
        ms[ia][1] -= t
        ms[ib][1] -= t
        ms.append([newa, t])
        ms.append([newb, t])
        ms = _merge(ms)
        if log is not None:
            after = multiset_sum(ms)
            log.append({"pair": (Ma, Mb), "component": C, "copies": t,
                        "preserved": {e: v for e, v in before.items() if v} == {e: v for e, v in after.items() if v}})


def surgery_down(multiset, e_u, e_w, log: list | None = None) -> list:
    """Exchange along the ``e_u`` component until every matching holds both or neither of ``e_u, e_w``."""
    return _exchange(
        multiset,
        lambda m: e_u in m and e_w not in m,
        lambda m: e_w in m and e_u not in m,
        e_u,
        log,
    )


def surgery_up(multiset, gadget, log: list | None = None) -> list:
    """Exchange along the ``{u2,b}`` component until no matching uses ``{u1,a},{u2,b}``
    together or ``{w1,b},{w2,a}`` together."""
    u1a, u2b, w1b, w2a = _apex_edges(gadget)
    for m, _ in multiset:
        if not _matches_apexes(m):
            raise HypothesisError("a gadget matching leaves a or b exposed; the point is not tight for any up set")
    return _exchange(
        multiset,
        lambda m: u1a in m and u2b in m,
        lambda m: w1b in m and w2a in m,
        u2b,
        log,
    )


def _apex_edges(gadget):
    (c1,) = [e for e in gadget.C1 if "a" in e and "b" not in e]
    (d1,) = [e for e in gadget.C1 if "b" in e and "a" not in e]
    (c2,) = [e for e in gadget.C2 if "b" in e and "a" not in e]
    (d2,) = [e for e in gadget.C2 if "a" in e and "b" not in e]
    return c1, c2, d1, d2  # u1a, u2b, w1b, w2a


def _matches_apexes(m) -> bool:
    covered = {v for e in m for v in e}
    return "a" in covered and "b" in covered


def _to_host(p: QProblem, m) -> frozenset:
    out = []
    for a, b in m:
        if a in ("a", "b") or b in ("a", "b"):
            raise DecompositionError(f"gadget edge {(a, b)} left in a host matching")
        if a[0] == b[0]:
            raise DecompositionError(f"gadget edge {(a, b)} left in a host matching")
        out.append(p.edge_between(a, b))
    return frozenset(out)


def _check_result(p: QProblem, pt: QPoint, comb: ConvexCombination) -> None:
    if comb.point(p) != pt:
        raise AssertionError("decomposition does not reproduce the input point")
    for m, y, _ in comb.terms:
        if y != y_of(m, p):
            raise AssertionError(f"term {sorted(m)} with y={y} is not a vertex of the exact polytope")


def _require_inside(p, pt, base, oracle, name):
    for inst in base:
        v = build(inst, p).violation(pt)
        if v > 0:
            raise HypothesisError(f"point violates {inst.describe(p)} by {v}")
    hit = oracle(p, pt)
    if hit:
        raise HypothesisError(f"point is outside the {name} polytope: {hit[0].describe(p)} violated by {hit[1]}")


def tight_down_certificates(p: QProblem, pt: QPoint) -> list:
    out = [StdLin(i) for i, e in ((1, p.e1), (2, p.e2)) if pt[e] == pt.y]
    out += [inst for inst in enumerate_family(p, "D") if build(inst, p).violation(pt) == 0]
    return out


def tight_up_certificates(p: QProblem, pt: QPoint) -> list:
    return [inst for inst in enumerate_family(p, "U") if build(inst, p).violation(pt) == 0]


def lemma_down_decompose(p: QProblem, pt: QPoint, trace: dict | None = None,
                         guard: int | None = None) -> ConvexCombination:
    """Decompose a point of the down polytope that is tight for a linearization or down inequality."""
    _require_inside(p, pt, down_base(p), separate_down, "down")
    tight = tight_down_certificates(p, pt)
    if not tight:
        raise HypothesisError("no tight certificate supplied: no y <= x_ei and no down inequality is tight")
    gad = build_down_gadget(p, pt)
    mc = decompose_matching(gad.graph, gad.xbar, guard)
    log: list = []
    ms = surgery_down(mc.multiset, gad.e_u, gad.e_w, log)
    g = gad.graph
    ge1, ge2 = g.edge(*p.ends(p.e1)), g.edge(*p.ends(p.e2))
    C = frozenset((ge1, ge2, gad.e_u, gad.e_w))
    weighted = []
    for m, c in ms:
        if gad.e_u in m:
            weighted.append((_to_host(p, m ^ C), 1, Fraction(c, mc.k)))
        else:
            weighted.append((_to_host(p, m), 0, Fraction(c, mc.k)))
    comb = ConvexCombination.collect(weighted)
    _check_result(p, pt, comb)
    checks = _down_claim_checks(p, g, tight, ms, ge1, ge2)
    if trace is not None:
        trace.update(k=mc.k, gadget=gad, initial=mc.multiset, multiset=ms, steps=log,
                     tight=tight, claims=checks)
    return comb


def _down_claim_checks(p, g, tight, ms, ge1, ge2) -> dict:
    out = {}
    for inst in tight:
        if inst.kind is Kind.STDLIN:
            e = ge1 if inst.index == 1 else ge2
            out[inst] = all(e not in m for m, _ in ms)
        else:
            cut = set(g.cut(inst.S))
            out[inst] = all(len(cut & m) <= 1 for m, _ in ms)
    return out


def lemma_up_decompose(p: QProblem, pt: QPoint, trace: dict | None = None,
                       guard: int | None = None) -> ConvexCombination:
    """Decompose a point of the up polytope that is tight for some up inequality."""
    _require_inside(p, pt, up_base(p), separate_up, "up")
    tight = tight_up_certificates(p, pt)
    if not tight:
        raise HypothesisError("no tight certificate supplied: no up inequality is tight")
    gad = build_up_gadget(p, pt)
    g = gad.graph
    mc = decompose_matching(g, gad.xbar, guard)
    ge1, ge2 = g.edge(*p.ends(p.e1)), g.edge(*p.ends(p.e2))
    for m, _ in mc.multiset:
        if not _matches_apexes(m) or len(m & {ge1, ge2, gad.ab}) > 1:
            raise HypothesisError(f"gadget matching {sorted(m)} breaks the tight-cut structure")
    log: list = []
    ms = surgery_up(mc.multiset, gad, log)
    u1a, u2b, w1b, w2a = _apex_edges(gad)
    weighted = []
    for m, c in ms:
        if u1a in m and w1b in m:
            mt = m ^ gad.C1
        elif u2b in m and w2a in m:
            mt = m ^ gad.C2
        elif gad.ab in m:
            mt = m
        else:
            raise AssertionError("exchange left a matching outside the three classes")
        if gad.ab not in mt:
            raise AssertionError("lifted matching misses the apex edge")
        y = 1 if (ge2 in m or ge1 in m) else 0
        weighted.append((_to_host(p, mt - {gad.ab}), y, Fraction(c, mc.k)))
    comb = ConvexCombination.collect(weighted)
    _check_result(p, pt, comb)
    if trace is not None:
        trace.update(k=mc.k, gadget=gad, initial=mc.multiset, multiset=ms, steps=log, tight=tight,
                     claims={"apexes_matched": True})
    return comb


def tight_face_point(p: QProblem, lemma: str, rng, certificate=None, pieces: int = 3):
    """Random point of the down or up polytope on the face of a tight certificate.

    Several LP optima over the face (random integer objectives) are mixed with
    random positive weights.  Returns ``(point, certificate)``.
    """
    from .verify import description

    if lemma not in ("down", "up"):
        raise ValueError("lemma must be 'down' or 'up'")
    if certificate is None:
        pool = tight_pool(p, lemma)
        certificate = pool[rng.randrange(len(pool))]
    h = description(p, lemma)
    row = build(certificate, p).to_row()
    face = HPolytope(h.variables, h.rows + (Row(row.coef, EQ, row.rhs),))
    opts = []
    for _ in range(pieces):
        obj = {v: rng.randint(-5, 5) for v in h.variables}
        res = lp_solve(obj, face, certify=False)
        if res.status != "optimal":
            raise DecompositionError(f"face of {certificate.describe(p)} is empty")
        opts.append(res.x)
    raw = [Fraction(rng.randint(1, 6)) for _ in opts]
    total = sum(raw)
    x = {e: sum((w / total * o[e] for w, o in zip(raw, opts)), ZERO) for e in p.edges}
    y = sum((w / total * o["y"] for w, o in zip(raw, opts)), ZERO)
    return QPoint(x, y), certificate


def tight_pool(p: QProblem, lemma: str) -> list:
    if lemma == "down":
        return [StdLin(1), StdLin(2)] + enumerate_family(p, "D")
    return enumerate_family(p, "U")
