"""Exact separation for the down, up and exact polytopes.

Both oracles reduce to blossom separation in an auxiliary nonbipartite graph,
which in turn is a minimum T-odd cut problem solved on a Gomory-Hu tree.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .core import ONE, ZERO, GeneralGraph, QMatchError, QPoint, QProblem
from .inequalities import (
    Degree,
    Down,
    NonNeg,
    StdLin,
    Up,
    YLower,
    YUpper,
    build,
    in_D_tilde,
    in_U_tilde,
    set_key,
)


class BaseConstraintViolation(QMatchError, ValueError):
    pass


APEX = "__apex__"


# -- gadgets -------------------------------------------------------------------

@dataclass(frozen=True)
class DownGadget:
    graph: GeneralGraph
    xbar: dict
    e_u: tuple
    e_w: tuple


@dataclass(frozen=True)
class UpGadget:
    graph: GeneralGraph
    xtilde: dict
    xbar: dict
    ab: tuple
    C1: frozenset
    C2: frozenset


def _host_edges(p: QProblem) -> dict:
    """Bipartite edge id -> gadget edge id (a node-name pair)."""
    return {e: p.ends(e) for e in p.edges}


def build_down_gadget(p: QProblem, pt: QPoint) -> DownGadget:
    e_u, e_w = (p.u1, p.u2), (p.w1, p.w2)
    g = GeneralGraph(p.nodes, tuple(p.ends(e) for e in p.edges) + (e_u, e_w))
    emap = _host_edges(p)
    xbar = {}
    for e in p.edges:
        xbar[g.edge(*emap[e])] = pt[e]
    for e in (p.e1, p.e2):
        xbar[g.edge(*emap[e])] = pt[e] - pt.y
    xbar[g.edge(*e_u)] = pt.y
    xbar[g.edge(*e_w)] = pt.y
    neg = sorted((str(e) for e, v in xbar.items() if v < 0))
    if neg:
        raise BaseConstraintViolation(f"point violates base constraints: negative gadget values on {neg}")
    return DownGadget(g, xbar, g.edge(*e_u), g.edge(*e_w))


def build_up_gadget(p: QProblem, pt: QPoint) -> UpGadget:
    a, b = "a", "b"
    extra = ((a, b), (p.u1, a), (p.u2, b), (p.w1, b), (p.w2, a))
    g = GeneralGraph(p.nodes + (a, b), tuple(p.ends(e) for e in p.edges) + extra)
    emap = _host_edges(p)
    x1, x2, y = pt[p.e1], pt[p.e2], pt.y
    xt, xb = {}, {}
    for e in p.edges:
        ge = g.edge(*emap[e])
        xt[ge] = xb[ge] = pt[e]
    for e in (p.e1, p.e2):
        xb[g.edge(*emap[e])] = y / 2
    ab = g.edge(a, b)
    xt[ab] = ONE
    xb[ab] = 1 - x1 - x2 + y
    for (s, t), val in (((p.u1, a), x1), ((p.w1, b), x1), ((p.u2, b), x2), ((p.w2, a), x2)):
        ge = g.edge(s, t)
        xt[ge] = ZERO
        xb[ge] = val - y / 2
    problems = []
    if xb[ab] < 0:
        problems.append("x_e1 + x_e2 - y <= 1 fails (the up inequality for {u1,w2} is violated)")
    if x1 - y / 2 < 0 or x2 - y / 2 < 0:
        problems.append("y <= 2 x_ei fails (y exceeds twice a special-edge value)")
    if y < 0:
        problems.append("y >= 0 fails")
    neg = [str(e) for e, v in xb.items() if v < 0]
    if neg or problems:
        detail = "; ".join(problems) if problems else f"negative gadget values on {sorted(neg)}"
        raise BaseConstraintViolation(f"point violates base constraints: {detail}")
    C1 = frozenset((g.edge(p.u1, a), ab, g.edge(b, p.w1), g.edge(*emap[p.e1])))
    C2 = frozenset((g.edge(p.u2, b), ab, g.edge(a, p.w2), g.edge(*emap[p.e2])))
    return UpGadget(g, xt, xb, ab, C1, C2)


# -- max flow and Gomory-Hu ----------------------------------------------------

def _adjacency(nodes: Iterable, cap: Mapping) -> dict:
    adj = {v: {} for v in nodes}
    for (a, b), c in cap.items():
        if c:
            adj[a][b] = adj[a].get(b, ZERO) + c
            adj[b][a] = adj[b].get(a, ZERO) + c
    return adj


def max_flow(adj: dict, s, t) -> tuple:
    """Edmonds-Karp on an undirected capacity map.  Returns (value, source side)."""
    residual = {v: dict(nb) for v, nb in adj.items()}
    value = ZERO
    while True:
        parent = {s: None}
        q = deque([s])
        while q and t not in parent:
            v = q.popleft()
            for w, c in residual[v].items():
                if c > 0 and w not in parent:
                    parent[w] = v
                    q.append(w)
        if t not in parent:
            break
        path = []
        w = t
        while parent[w] is not None:
            path.append((parent[w], w))
            w = parent[w]
        push = min(residual[v][w] for v, w in path)
        for v, w in path:
            residual[v][w] -= push
            residual[w][v] = residual[w].get(v, ZERO) + push
        value += push
    side = frozenset(parent)
    return value, side


@dataclass(frozen=True)
class GomoryHuTree:
    nodes: tuple
    parent: dict  # node -> parent (root maps to None)
    value: dict   # node -> value of the tree edge (node, parent)

    def edges(self) -> list:
        return [(v, self.parent[v], self.value[v]) for v in self.nodes if self.parent[v] is not None]

    def side(self, v) -> frozenset:
        """Component containing ``v`` after deleting the tree edge (v, parent[v])."""
        children = {}
        for w in self.nodes:
            pw = self.parent[w]
            if pw is not None:
                children.setdefault(pw, []).append(w)
        out, stack = set(), [v]
        while stack:
            w = stack.pop()
            out.add(w)
            stack.extend(children.get(w, ()))
        return frozenset(out)

    def min_cut(self, s, t) -> Fraction:
        def path_to_root(v):
            seq = [v]
            while self.parent[seq[-1]] is not None:
                seq.append(self.parent[seq[-1]])
            return seq

        ps, pt_ = path_to_root(s), path_to_root(t)
        common = set(ps) & set(pt_)
        vals = [self.value[v] for v in ps if v not in common]
        vals += [self.value[v] for v in pt_ if v not in common]
        return min(vals)


def gomory_hu(g: GeneralGraph, cap: Mapping) -> GomoryHuTree:
    """Gusfield's construction with exact max-flows."""
    if any(c < 0 for c in cap.values()):
        raise ValueError("capacities must be nonnegative")
    nodes = tuple(g.nodes)
    adj = _adjacency(nodes, {e: Fraction(c) for e, c in cap.items()})
    parent = {v: nodes[0] for v in nodes}
    parent[nodes[0]] = None
    value = {nodes[0]: None}
    for s in nodes[1:]:
        t = parent[s]
        f, side = max_flow(adj, s, t)
        value[s] = f
        for w in nodes:
            if w != s and w in side and parent[w] == t:
                parent[w] = s
        if parent[t] is not None and parent[t] in side:
            parent[s] = parent[t]
            parent[t] = s
            value[s] = value[t]
            value[t] = f
    return GomoryHuTree(nodes, parent, value)


def cut_value(g: GeneralGraph, cap: Mapping, S) -> Fraction:
    S = set(S)
    return sum((cap.get(e, ZERO) for e in g.edges if (e[0] in S) != (e[1] in S)), ZERO)


def odd_cut_candidates(g: GeneralGraph, cap: Mapping, T) -> list:
    """All T-odd fundamental cuts of a Gomory-Hu tree as (value, side) pairs."""
    T = frozenset(T)
    if not T:
        raise ValueError("T must be nonempty")
    if len(T) % 2:
        raise ValueError("|T| must be even")
    tree = gomory_hu(g, cap)
    out = []
    for v, _, _ in tree.edges():
        side = tree.side(v)
        if len(side & T) % 2 == 1:
            out.append((cut_value(g, cap, side), side))
    return out


def min_odd_cut(g: GeneralGraph, cap: Mapping, T) -> tuple:
    cands = odd_cut_candidates(g, cap, T)
    idx = g.index
    best = min(cands, key=lambda c: (c[0], tuple(sorted(idx[v] for v in c[1]))))
    return best[1], best[0]


# -- blossom separation --------------------------------------------------------

def _check_fractional_matching(g: GeneralGraph, xbar: Mapping) -> None:
    for e, v in xbar.items():
        if v < 0:
            raise ValueError(f"negative value on edge {e!r}")
    for v in g.nodes:
        if sum((xbar.get(e, ZERO) for e in g.incidence[v]), ZERO) > 1:
            raise ValueError(f"degree bound violated at node {v!r}")


def blossom_candidates(g: GeneralGraph, xbar: Mapping) -> list:
    """Violated odd sets surfaced by the apex reduction, as (violation, S).

    Each node ``v`` is joined to an apex with capacity ``1 - xbar(delta(v))``;
    for an apex-free odd set ``S`` the cut equals ``|S| - 2 xbar(E[S])``, so the
    blossom violation is ``(1 - cut) / 2``.
    """
    _check_fractional_matching(g, xbar)
    nodes = tuple(g.nodes)
    slack_edges = tuple((v, APEX) for v in nodes)
    aug = GeneralGraph(nodes + (APEX,), tuple(g.edges) + slack_edges)
    cap = {}
    for e in g.edges:
        cap[e] = Fraction(xbar.get(e, ZERO))
    for v in nodes:
        cap[aug.edge(v, APEX)] = 1 - sum((xbar.get(e, ZERO) for e in g.incidence[v]), ZERO)
    T = set(nodes)
    if len(nodes) % 2:
        T.add(APEX)
    out = {}
    for value, side in odd_cut_candidates(aug, cap, T):
        S = side if APEX not in side else frozenset(aug.nodes) - side
        if value < 1:
            out[S] = (1 - value) / 2
    return [(viol, S) for S, viol in out.items()]


def _blossom_violation(g: GeneralGraph, xbar: Mapping, S) -> Fraction:
    inner = sum((xbar.get(e, ZERO) for e in g.induced(S)), ZERO)
    return inner - Fraction(len(S) - 1, 2)


def separate_blossom(g: GeneralGraph, xbar: Mapping, accept=None):
    """Most violated blossom ``(S, violation)`` or ``None``.

    ``accept`` optionally filters candidate sets; ties go to the
    lexicographically smallest node-position tuple.
    """
    idx = g.index
    best = None
    for viol, S in blossom_candidates(g, xbar):
        assert viol == _blossom_violation(g, xbar, S)
        if accept is not None and not accept(S):
            continue
        key = (-viol, tuple(sorted(idx[v] for v in S)))
        if best is None or key < best[0]:
            best = (key, S, viol)
    if best is None:
        return None
    return best[1], best[2]


# -- oracles -------------------------------------------------------------------

def _most_violated(p, pt, instances):
    best = None
    for inst in instances:
        ineq = build(inst, p)
        v = ineq.violation(pt)
        if v > 0 and (best is None or v > best[1]):
            best = (inst, v)
    return best


def down_base(p: QProblem) -> list:
    return ([NonNeg(e) for e in p.edges] + [Degree(v) for v in p.nodes]
            + [YLower, YUpper, StdLin(1), StdLin(2)])


def up_base(p: QProblem) -> list:
    return ([NonNeg(e) for e in p.edges] + [Degree(v) for v in p.nodes]
            + [YLower, YUpper, Up((p.u1, p.w2))])


def separate_down(p: QProblem, pt: QPoint):
    """Violated inequality of the down description with its violation, or ``None``.

    The base system is checked first; only when it holds is the gadget built,
    and then the returned set is the most violated relaxed down set.
    """
    hit = _most_violated(p, pt, down_base(p))
    if hit:
        return hit
    gad = build_down_gadget(p, pt)
    g = gad.graph

    def one_gadget_edge(S):
        return (gad.e_u[0] in S and gad.e_u[1] in S) != (gad.e_w[0] in S and gad.e_w[1] in S)

    res = separate_blossom(g, gad.xbar, accept=one_gadget_edge)
    if res is None:
        return None
    S, viol = res
    if not in_D_tilde(p, S):
        raise AssertionError(f"gadget set {sorted(S)} does not map to a down set")
    inst = Down(S)
    assert build(inst, p).violation(pt) == viol
    return inst, viol


def separate_up(p: QProblem, pt: QPoint):
    """Violated inequality of the up description with its violation, or ``None``."""
    hit = _most_violated(p, pt, up_base(p))
    if hit:
        return hit
    if pt.y > pt[p.e1] or pt.y > pt[p.e2]:
        # Had some up inequality been tight or violated, y <= x_ei would follow
        # from the base system; so every up inequality holds strictly here.
        return None
    gad = build_up_gadget(p, pt)
    g = gad.graph

    def one_apex(S):
        return ("a" in S) != ("b" in S)

    res = separate_blossom(g, gad.xbar, accept=one_apex)
    if res is None:
        return None
    Sbar, viol = res
    S = frozenset(Sbar) - {"a", "b"}
    if not in_U_tilde(p, S):
        raise AssertionError(f"gadget set {sorted(Sbar)} does not map to an up set")
    inst = Up(S)
    assert build(inst, p).violation(pt) == viol
    return inst, viol


def separate_exact(p: QProblem, pt: QPoint):
    hit = separate_down(p, pt)
    if hit:
        return hit
    return separate_up(p, pt)


def brute_force_down(p: QProblem, pt: QPoint):
    """Reference answer by enumerating every relaxed down set."""
    from .inequalities import enumerate_family

    hit = _most_violated(p, pt, down_base(p))
    if hit:
        return hit
    return _best_set(p, pt, enumerate_family(p, "D_tilde"))


def brute_force_up(p: QProblem, pt: QPoint):
    from .inequalities import enumerate_family

    hit = _most_violated(p, pt, up_base(p))
    if hit:
        return hit
    return _best_set(p, pt, enumerate_family(p, "U_tilde"))


def _best_set(p, pt, instances):
    best = None
    for inst in instances:
        v = build(inst, p).violation(pt)
        if v > 0:
            key = (-v, set_key(p, inst.S))
            if best is None or key < best[0]:
                best = (key, inst, v)
    return None if best is None else (best[1], best[2])
