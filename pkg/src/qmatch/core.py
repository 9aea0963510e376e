"""Exact-rational primitives: graphs, matchings, points and vertex sets.

Everything downstream works over :class:`fractions.Fraction`; floats are
rejected at the boundaries.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb, factorial
from typing import Hashable, Iterable, Iterator, Mapping

Rational = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)

Node = Hashable
Matching = frozenset

DEFAULT_ENUM_GUARD = 24
_guard_override: int | None = None

VARIANTS = ("exact", "down", "up", "perfect_exact", "perfect_down", "perfect_up")


class QMatchError(Exception):
    """Base class for all library errors."""


class EnumerationTooLarge(QMatchError):
    pass


class InvalidInstance(QMatchError, ValueError):
    pass


def set_enum_guard(limit: int | None) -> None:
    """Override the enumeration guard for the whole process (``None`` resets)."""
    global _guard_override
    _guard_override = limit


def enum_guard() -> int:
    if _guard_override is not None:
        return _guard_override
    env = os.environ.get("QMATCH_ENUM_GUARD")
    if env:
        return int(env)
    return DEFAULT_ENUM_GUARD


def to_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings; floats are refused."""
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            den_i = int(den)
            if den_i == 0:
                raise ValueError(f"zero denominator in {value!r}")
            return Fraction(int(num), den_i)
        return Fraction(int(text))
    raise TypeError(f"refusing non-exact value {value!r}")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class GeneralGraph:
    """Simple undirected graph.  Edge ids are node pairs ordered by node position."""

    nodes: tuple
    edges: tuple
    labels: Mapping | None = field(default=None, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        index = {v: i for i, v in enumerate(nodes)}
        if len(index) != len(nodes):
            raise InvalidInstance("duplicate node ids")
        canon = []
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise InvalidInstance(f"loop at {a!r}")
            if a not in index or b not in index:
                raise InvalidInstance(f"edge {(a, b)!r} has an unknown endpoint")
            e = (a, b) if index[a] < index[b] else (b, a)
            if e in seen:
                raise InvalidInstance(f"parallel edge {e!r}")
            seen.add(e)
            canon.append(e)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(canon))

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def incidence(self) -> dict:
        inc = {v: [] for v in self.nodes}
        for e in self.edges:
            inc[e[0]].append(e)
            inc[e[1]].append(e)
        return {v: tuple(es) for v, es in inc.items()}

    def ends(self, e):
        return e

    def edge(self, a, b):
        e = (a, b) if self.index[a] < self.index[b] else (b, a)
        if e not in self.edge_set:
            raise KeyError(f"no edge between {a!r} and {b!r}")
        return e

    def induced(self, nodes: Iterable) -> list:
        s = set(nodes)
        return [e for e in self.edges if e[0] in s and e[1] in s]

    def cut(self, nodes: Iterable) -> list:
        s = set(nodes)
        return [e for e in self.edges if (e[0] in s) != (e[1] in s)]

    def label(self, v) -> str:
        if self.labels and v in self.labels:
            return str(self.labels[v])
        return str(v)


@dataclass(frozen=True)
class QProblem:
    """Complete bipartite ``K_{m,n}`` with the two distinguished disjoint edges.

    Nodes are named ``u1..um`` and ``w1..wn``; edge ids are 1-based index pairs
    ``(i, j)`` meaning ``{u_i, w_j}``.
    """

    m: int
    n: int
    e1: tuple = (1, 1)
    e2: tuple = (2, 2)

    def __post_init__(self):
        if self.m < 2 or self.n < 2:
            raise InvalidInstance("need m, n >= 2")
        e1, e2 = tuple(self.e1), tuple(self.e2)
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)
        for i, j in (e1, e2):
            if not (1 <= i <= self.m and 1 <= j <= self.n):
                raise InvalidInstance(f"special edge ({i},{j}) outside K_{self.m},{self.n}")
        if e1[0] == e2[0] or e1[1] == e2[1]:
            raise InvalidInstance("special edges e1 and e2 must be node-disjoint")

    @cached_property
    def U(self) -> tuple:
        return tuple(f"u{i}" for i in range(1, self.m + 1))

    @cached_property
    def W(self) -> tuple:
        return tuple(f"w{j}" for j in range(1, self.n + 1))

    @cached_property
    def nodes(self) -> tuple:
        return self.U + self.W

    @cached_property
    def node_index(self) -> dict:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def edges(self) -> tuple:
        return tuple((i, j) for i in range(1, self.m + 1) for j in range(1, self.n + 1))

    @property
    def u1(self) -> str:
        return f"u{self.e1[0]}"

    @property
    def w1(self) -> str:
        return f"w{self.e1[1]}"

    @property
    def u2(self) -> str:
        return f"u{self.e2[0]}"

    @property
    def w2(self) -> str:
        return f"w{self.e2[1]}"

    @cached_property
    def special(self) -> frozenset:
        return frozenset((self.u1, self.w1, self.u2, self.w2))

    def ends(self, e) -> tuple:
        return (f"u{e[0]}", f"w{e[1]}")

    def edge_between(self, a: str, b: str) -> tuple:
        if a.startswith("w"):
            a, b = b, a
        return (int(a[1:]), int(b[1:]))

    def graph(self) -> GeneralGraph:
        return GeneralGraph(self.nodes, tuple(self.ends(e) for e in self.edges))

    def induced(self, nodes: Iterable) -> list:
        s = set(nodes)
        return [e for e in self.edges if f"u{e[0]}" in s and f"w{e[1]}" in s]

    def cut(self, nodes: Iterable) -> list:
        s = set(nodes)
        return [e for e in self.edges if (f"u{e[0]}" in s) != (f"w{e[1]}" in s)]

    def incident(self, v: str) -> list:
        k = int(v[1:])
        if v.startswith("u"):
            return [(k, j) for j in range(1, self.n + 1)]
        return [(i, k) for i in range(1, self.m + 1)]

    def sort_nodes(self, nodes: Iterable) -> tuple:
        return tuple(sorted(nodes, key=self.node_index.__getitem__))

    def display_order(self, nodes: Iterable) -> tuple:
        """Special nodes first (u before w), then the rest in index order."""
        idx = self.node_index
        return tuple(sorted(nodes, key=lambda v: (v not in self.special, idx[v])))


@dataclass(frozen=True, eq=False)
class QPoint:
    """Exact point ``(x, y)``; ``x`` maps edge ids to rationals, missing means 0."""

    x: Mapping
    y: Fraction = ZERO

    def __post_init__(self):
        object.__setattr__(self, "x", {e: to_rational(v) for e, v in self.x.items()})
        object.__setattr__(self, "y", to_rational(self.y))

    @classmethod
    def of(cls, host, values: Mapping | None = None, y=0) -> "QPoint":
        values = dict(values or {})
        unknown = set(values) - set(host.edges)
        if unknown:
            raise KeyError(f"edges not in host graph: {sorted(map(str, unknown))}")
        return cls({e: values.get(e, 0) for e in host.edges}, y)

    def __getitem__(self, e) -> Fraction:
        return self.x.get(e, ZERO)

    def _key(self) -> frozenset:
        return frozenset((e, v) for e, v in self.x.items() if v)

    def __eq__(self, other):
        if not isinstance(other, QPoint):
            return NotImplemented
        return self.y == other.y and self._key() == other._key()

    def __hash__(self):
        return hash((self.y, self._key()))

    def vector(self, edges: Iterable) -> tuple:
        return tuple(self[e] for e in edges) + (self.y,)

    @classmethod
    def from_vector(cls, edges: Iterable, vec) -> "QPoint":
        edges = tuple(edges)
        return cls(dict(zip(edges, vec[: len(edges)])), vec[len(edges)])

    def __repr__(self):
        xs = ", ".join(f"{e}: {format_rational(v)}" for e, v in self.x.items() if v)
        return f"QPoint({{{xs}}}, y={format_rational(self.y)})"


@dataclass(frozen=True)
class ConvexCombination:
    """Terms ``(matching, y, multiplier)`` with positive multipliers summing to 1."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((frozenset(m), int(y), Fraction(lam)) for m, y, lam in self.terms)
        if any(lam <= 0 for _, _, lam in terms):
            raise ValueError("multipliers must be positive")
        if sum((lam for _, _, lam in terms), ZERO) != 1:
            raise ValueError("multipliers must sum to 1")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def collect(cls, weighted: Iterable) -> "ConvexCombination":
        acc: dict = {}
        for m, y, lam in weighted:
            key = (frozenset(m), int(y))
            acc[key] = acc.get(key, ZERO) + Fraction(lam)
        items = sorted(acc.items(), key=lambda kv: (kv[0][1], sorted(kv[0][0])))
        return cls(tuple((m, y, lam) for (m, y), lam in items if lam))

    def point(self, host) -> QPoint:
        x = {e: ZERO for e in host.edges}
        y = ZERO
        for m, yv, lam in self.terms:
            for e in m:
                x[e] += lam
            y += lam * yv
        return QPoint(x, y)

    def __len__(self):
        return len(self.terms)


def is_matching(edges: Iterable, host) -> bool:
    seen = set()
    for e in edges:
        for v in host.ends(e):
            if v in seen:
                return False
            seen.add(v)
    return True


def enumerate_matchings(g, guard: int | None = None) -> list:
    """All matchings of ``g`` (``GeneralGraph`` or ``QProblem``), empty one included.

    Output is ordered by size, then by edge positions.
    """
    limit = enum_guard() if guard is None else guard
    edges = tuple(g.edges)
    if len(edges) > limit:
        raise EnumerationTooLarge(
            f"instance too large for enumeration: {len(edges)} edges > guard {limit}"
        )
    ends = [g.ends(e) for e in edges]
    found: list = []

    def grow(start: int, used: frozenset, chosen: tuple):
        found.append(chosen)
        for k in range(start, len(edges)):
            a, b = ends[k]
            if a in used or b in used:
                continue
            grow(k + 1, used | {a, b}, chosen + (k,))

    grow(0, frozenset(), ())
    found.sort(key=lambda ks: (len(ks), ks))
    return [frozenset(edges[k] for k in ks) for ks in found]


def count_bipartite_matchings(m: int, n: int) -> int:
    return sum(comb(m, k) * comb(n, k) * factorial(k) for k in range(min(m, n) + 1))


def chi(matching: Iterable, g) -> dict:
    """0/1 characteristic vector of ``matching`` over the edges of ``g``."""
    members = set(matching)
    unknown = members - set(g.edges)
    if unknown:
        raise KeyError(f"edges outside the graph: {sorted(map(str, unknown))}")
    return {e: (1 if e in members else 0) for e in g.edges}


def y_of(matching: Iterable, p) -> int:
    members = set(matching)
    return 1 if (p.e1 in members and p.e2 in members) else 0


def is_perfect(matching: frozenset, host) -> bool:
    return 2 * len(matching) == len(host.nodes)


def vertex_set(p: QProblem, variant: str = "exact", guard: int | None = None) -> list:
    """All 0/1 vertices ``(chi(M), y)`` of the chosen polytope, deduplicated."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    perfect = variant.startswith("perfect_")
    base = variant.removeprefix("perfect_")
    if perfect and p.m != p.n:
        raise InvalidInstance(f"perfect variant needs m == n, got K_{p.m},{p.n}")
    out: list = []
    for m in enumerate_matchings(p, guard):
        if perfect and not is_perfect(m, p):
            continue
        forced = y_of(m, p)
        if base == "exact":
            ys = (forced,)
        elif base == "down":
            ys = (0, 1) if forced else (0,)
        else:
            ys = (0, 1) if not forced else (1,)
        x = chi(m, p)
        out.extend(QPoint(x, y) for y in ys)
    return out


def iter_subsets(items: tuple, sizes: Iterable[int] | None = None) -> Iterator[tuple]:
    from itertools import combinations

    sizes = range(len(items) + 1) if sizes is None else sizes
    for k in sizes:
        yield from combinations(items, k)
