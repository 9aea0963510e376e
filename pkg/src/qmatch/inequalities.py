"""Inequality families for the one-term matching polytopes and their b-matching versions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping

from .core import ONE, ZERO, QMatchError, format_rational


class InvalidFamily(QMatchError, ValueError):
    pass


class Kind(enum.Enum):
    NONNEG = "NonNeg"
    DEGREE = "Degree"
    PERFECT_DEGREE = "PerfectDegree"
    Y_LOWER = "YLower"
    Y_UPPER = "YUpper"
    STDLIN = "StdLin"
    DOWN = "Down"
    UP = "Up"
    BLOSSOM = "Blossom"
    B_DEGREE = "BDegree"
    CAPACITY = "Capacity"
    B_DOWN = "BDown"
    B_UP = "BUp"
    CAP_B_DOWN = "CapBDown"
    CAP_B_UP = "CapBUp"
    DERIVED = "Derived"


@dataclass(frozen=True)
class FamilyInstance:
    kind: Kind
    S: frozenset | None = None
    F: frozenset | None = None
    edge: tuple | None = None
    node: str | None = None
    index: int | None = None
    label: str = field(default="", compare=False)

    def describe(self, p=None) -> str:
        k = self.kind.value
        if self.S is not None:
            nodes = p.display_order(self.S) if p is not None and hasattr(p, "display_order") else sorted(map(str, self.S))
            text = f"{k}({{{','.join(map(str, nodes))}}}"
            if self.F:
                text += f"; F={sorted(self.F)}"
            return text + ")"
        if self.edge is not None:
            return f"{k}({self.edge})"
        if self.node is not None:
            return f"{k}({self.node})"
        if self.index is not None:
            return f"{k}({self.index})"
        return self.label or k


def NonNeg(e) -> FamilyInstance:
    return FamilyInstance(Kind.NONNEG, edge=tuple(e) if isinstance(e, list) else e)


def Degree(v) -> FamilyInstance:
    return FamilyInstance(Kind.DEGREE, node=v)


def PerfectDegree(v) -> FamilyInstance:
    return FamilyInstance(Kind.PERFECT_DEGREE, node=v)


YLower = FamilyInstance(Kind.Y_LOWER)
YUpper = FamilyInstance(Kind.Y_UPPER)


def StdLin(i: int) -> FamilyInstance:
    if i not in (1, 2):
        raise InvalidFamily("StdLin index must be 1 or 2")
    return FamilyInstance(Kind.STDLIN, index=i)


def Down(S) -> FamilyInstance:
    return FamilyInstance(Kind.DOWN, S=frozenset(S))


def Up(S) -> FamilyInstance:
    return FamilyInstance(Kind.UP, S=frozenset(S))


def Blossom(S) -> FamilyInstance:
    return FamilyInstance(Kind.BLOSSOM, S=frozenset(S))


def BDegree(v) -> FamilyInstance:
    return FamilyInstance(Kind.B_DEGREE, node=v)


def Capacity(e) -> FamilyInstance:
    return FamilyInstance(Kind.CAPACITY, edge=e)


def BDown(S) -> FamilyInstance:
    return FamilyInstance(Kind.B_DOWN, S=frozenset(S))


def BUp(S) -> FamilyInstance:
    return FamilyInstance(Kind.B_UP, S=frozenset(S))


def CapBDown(S, F=()) -> FamilyInstance:
    return FamilyInstance(Kind.CAP_B_DOWN, S=frozenset(S), F=frozenset(F))


def CapBUp(S, F=()) -> FamilyInstance:
    return FamilyInstance(Kind.CAP_B_UP, S=frozenset(S), F=frozenset(F))


@dataclass(frozen=True)
class LinearInequality:
    xcoef: Mapping
    ycoef: Fraction
    rhs: Fraction
    sense: str = "<="
    tag: FamilyInstance | None = None

    def __post_init__(self):
        if self.sense not in ("<=", "="):
            raise ValueError(f"sense must be '<=' or '=', got {self.sense!r}")
        object.__setattr__(self, "xcoef", {e: Fraction(c) for e, c in self.xcoef.items() if c})
        object.__setattr__(self, "ycoef", Fraction(self.ycoef))
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def lhs(self, pt) -> Fraction:
        total = self.ycoef * pt.y
        for e, c in self.xcoef.items():
            total += c * pt[e]
        return total

    def violation(self, pt) -> Fraction:
        d = self.lhs(pt) - self.rhs
        return abs(d) if self.sense == "=" else d

    def shifted(self, delta) -> "LinearInequality":
        return LinearInequality(self.xcoef, self.ycoef, self.rhs + Fraction(delta), self.sense, self.tag)

    def to_row(self):
        from .exactlp import Row

        coef = dict(self.xcoef)
        if self.ycoef:
            coef["y"] = self.ycoef
        return Row(coef, self.sense, self.rhs)

    def render(self, p=None) -> str:
        parts = []
        order = {e: k for k, e in enumerate(p.edges)} if p is not None else {}
        for e, c in sorted(self.xcoef.items(), key=lambda kv: (order.get(kv[0], 0), str(kv[0]))):
            name = f"x({','.join(map(str, p.ends(e)))})" if p is not None else f"x{e}"
            parts.append(_term(c, name))
        if self.ycoef:
            parts.append(_term(self.ycoef, "y"))
        body = " ".join(parts).lstrip("+ ") or "0"
        return f"{body} {self.sense} {format_rational(self.rhs)}"


def _term(c: Fraction, name: str) -> str:
    if c == 1:
        return f"+ {name}"
    if c == -1:
        return f"- {name}"
    sign = "+" if c > 0 else "-"
    return f"{sign} {format_rational(abs(c))}*{name}"


def violation(ineq: LinearInequality, pt) -> Fraction:
    """``lhs - rhs``: positive means violated, zero tight, negative slack."""
    return ineq.violation(pt)


# -- node-set membership -----------------------------------------------------

def _sides(p, S):
    su = sum(1 for v in S if str(v).startswith("u"))
    return su, len(S) - su


def _special_pattern(p, S) -> frozenset:
    return frozenset(S) & p.special


def down_tilde_rule(p, S) -> str | None:
    """``None`` if ``S`` is in the relaxed down family, else the violated rule."""
    if len(S) % 2 == 0:
        return "Down(S) requires |S| odd"
    pat = _special_pattern(p, S)
    if pat not in (frozenset((p.u1, p.u2)), frozenset((p.w1, p.w2))):
        return "Down(S) requires S to meet the special nodes in exactly {u1,u2} or {w1,w2}"
    return None


def up_tilde_rule(p, S) -> str | None:
    if len(S) % 2 == 1:
        return "Up(S) requires |S| even"
    pat = _special_pattern(p, S)
    if pat not in (frozenset((p.u1, p.w2)), frozenset((p.u2, p.w1))):
        return "Up(S) requires S to meet the special nodes in exactly {u1,w2} or {u2,w1}"
    return None


def in_D_tilde(p, S) -> bool:
    return down_tilde_rule(p, S) is None


def in_U_tilde(p, S) -> bool:
    return up_tilde_rule(p, S) is None


def in_D(p, S) -> bool:
    if not in_D_tilde(p, S):
        return False
    su, sw = _sides(p, S)
    if p.u1 in S:
        return su == sw + 1
    return sw == su + 1


def in_U(p, S) -> bool:
    if not in_U_tilde(p, S):
        return False
    su, sw = _sides(p, S)
    return su == sw


def in_cut_family(p, S) -> bool:
    """Both special edges cross ``S``."""
    S = set(S)
    return all((a in S) != (b in S) for a, b in (p.ends(p.e1), p.ends(p.e2)))


# -- construction --------------------------------------------------------------

def _sum(edges, coef=ONE) -> dict:
    return {e: coef for e in edges}


def _add(acc: dict, edges, coef=ONE) -> dict:
    for e in edges:
        acc[e] = acc.get(e, ZERO) + coef
    return acc


def _incident(p, v):
    if hasattr(p, "incident"):
        return p.incident(v)
    return [e for e in p.edges if v in p.ends(e)]


def _check_nodes(p, S):
    unknown = set(S) - set(p.nodes)
    if unknown:
        raise InvalidFamily(f"unknown nodes {sorted(map(str, unknown))}")


def build(inst: FamilyInstance, p) -> LinearInequality:
    """Coefficient vector of ``inst`` on ``p`` (a QProblem or BMatchingProblem)."""
    k = inst.kind
    if k is Kind.NONNEG:
        if inst.edge not in set(p.edges):
            raise InvalidFamily(f"unknown edge {inst.edge!r}")
        return LinearInequality({inst.edge: -1}, 0, 0, "<=", inst)
    if k in (Kind.DEGREE, Kind.PERFECT_DEGREE, Kind.B_DEGREE):
        _check_nodes(p, [inst.node])
        rhs = p.b[inst.node] if k is Kind.B_DEGREE else 1
        sense = "=" if k is Kind.PERFECT_DEGREE else "<="
        return LinearInequality(_sum(_incident(p, inst.node)), 0, rhs, sense, inst)
    if k is Kind.Y_LOWER:
        return LinearInequality({}, -1, 0, "<=", inst)
    if k is Kind.Y_UPPER:
        return LinearInequality({}, 1, 1, "<=", inst)
    if k is Kind.STDLIN:
        e = p.e1 if inst.index == 1 else p.e2
        return LinearInequality({e: -1}, 1, 0, "<=", inst)
    if k is Kind.CAPACITY:
        if p.c is None:
            raise InvalidFamily("Capacity needs a capacitated problem")
        return LinearInequality({inst.edge: 1}, 0, p.c[inst.edge], "<=", inst)

    S = inst.S
    _check_nodes(p, S)
    inner = _sum(p.induced(S))
    if k is Kind.BLOSSOM:
        if len(S) % 2 == 0:
            raise InvalidFamily("Blossom(S) requires |S| odd")
        return LinearInequality(inner, 0, Fraction(len(S) - 1, 2), "<=", inst)
    if k is Kind.DOWN:
        rule = down_tilde_rule(p, S)
        if rule:
            raise InvalidFamily(rule)
        return LinearInequality(inner, 1, Fraction(len(S) - 1, 2), "<=", inst)
    if k is Kind.UP:
        rule = up_tilde_rule(p, S)
        if rule:
            raise InvalidFamily(rule)
        _add(inner, (p.e1, p.e2))
        return LinearInequality(inner, -1, Fraction(len(S), 2), "<=", inst)

    # b-matching families over sets cut by both special edges
    if not in_cut_family(p, S):
        raise InvalidFamily(f"{k.value}(S) requires both special edges in the cut of S")
    bS = sum(p.b[v] for v in S)
    F = inst.F or frozenset()
    if F:
        allowed = set(p.cut(S)) - {p.e1, p.e2}
        bad = set(F) - allowed
        if bad:
            raise InvalidFamily(f"F must lie in the cut of S minus the special edges; offending {sorted(bad)}")
        if p.c is None:
            raise InvalidFamily("F requires capacities")
    cF = sum(p.c[e] for e in F) if F else 0
    _add(inner, F)
    if k in (Kind.B_DOWN, Kind.CAP_B_DOWN):
        return LinearInequality(inner, 1, (bS + cF) // 2, "<=", inst)
    if k in (Kind.B_UP, Kind.CAP_B_UP):
        _add(inner, (p.e1, p.e2))
        return LinearInequality(inner, -1, (bS + cF + 1) // 2, "<=", inst)
    raise InvalidFamily(f"cannot build {k}")


# -- enumeration ---------------------------------------------------------------

def _subsets(p, max_size):
    nodes = tuple(p.nodes)
    limit = len(nodes) if max_size is None else min(max_size, len(nodes))
    for size in range(1, limit + 1):
        yield from combinations(nodes, size)


FAMILIES = ("D", "U", "D_tilde", "U_tilde", "blossom")


def enumerate_family(p, family: str, max_size: int | None = None) -> list:
    """Every qualifying node set once, ordered by the sorted tuple of node positions."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    pred, make = {
        "D": (in_D, Down),
        "U": (in_U, Up),
        "D_tilde": (in_D_tilde, Down),
        "U_tilde": (in_U_tilde, Up),
        "blossom": (lambda q, S: len(S) % 2 == 1 and len(S) >= 3, Blossom),
    }[family]
    found = [S for S in _subsets(p, max_size) if pred(p, S)]
    idx = {v: i for i, v in enumerate(p.nodes)}
    found.sort(key=lambda S: tuple(sorted(idx[v] for v in S)))
    return [make(S) for S in found]


def set_key(p, S) -> tuple:
    idx = {v: i for i, v in enumerate(p.nodes)}
    return tuple(sorted(idx[v] for v in S))


def base_instances(p, variant: str = "down") -> list:
    """The explicit non-set families: bounds, degrees and the standard linearization."""
    out = [NonNeg(e) for e in p.edges]
    out += [Degree(v) for v in p.nodes]
    out += [YLower, YUpper]
    if variant in ("down", "exact"):
        out += [StdLin(1), StdLin(2)]
    return out


def derived_up_inequalities(p, pt, include_d: bool = False) -> list:
    """Consequences of the base system plus ``Up({u1,w2})``.

    (a) ``x_e1 + x_e2 - y <= 1``; (b) ``x(E[S]) + x_ei - y/2 <= |S|/2`` for even
    ``S`` cut by ``e_i``; (c) every relaxed up inequality.  The pair (d)
    ``y <= x_ei`` only follows when some up inequality is tight or violated, so
    it is returned only with ``include_d``.
    """
    out = []

    def emit(xc, yc, rhs, label):
        ineq = LinearInequality(xc, yc, rhs, "<=", FamilyInstance(Kind.DERIVED, label=label))
        out.append((ineq, ineq.violation(pt)))

    emit({p.e1: 1, p.e2: 1}, -1, 1, "(a)")
    for S in _subsets(p, None):
        if len(S) % 2:
            continue
        for i, e in ((1, p.e1), (2, p.e2)):
            a, b = p.ends(e)
            if (a in S) != (b in S):
                xc = _add(_sum(p.induced(S)), (e,))
                emit(xc, Fraction(-1, 2), Fraction(len(S), 2), f"(b) i={i} S={set_key(p, S)}")
    for inst in enumerate_family(p, "U_tilde"):
        ineq = build(inst, p)
        out.append((ineq, ineq.violation(pt)))
    if include_d:
        emit({p.e1: -1}, 1, 0, "(d) i=1")
        emit({p.e2: -1}, 1, 0, "(d) i=2")
    return out
