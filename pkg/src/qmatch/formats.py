"""Line-oriented text formats for problems and points.

Problem file::

    bipartite 3 2
    special u1 w1 u2 w2
    b u3=2            # optional
    cap e(u3,w1)=2    # optional

Point file: one ``e(u,w)=p/q`` per line plus ``y=p/q``; omitted edges are 0.
Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .bmatching import BMatchingProblem
from .core import QMatchError, QPoint, QProblem, format_rational, to_rational


class ParseError(QMatchError, ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = ""):
        where = f"{source}:" if source else ""
        where += f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


_NODE = re.compile(r"^([uw])([1-9]\d*)$")
_EDGE = re.compile(r"^e\(\s*(u[1-9]\d*)\s*,\s*(w[1-9]\d*)\s*\)$")
_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


@dataclass(frozen=True)
class ProblemSpec:
    """A parsed problem file: the base instance plus optional bounds and capacities."""

    problem: QProblem
    b: dict | None = None
    cap: dict | None = None

    def bmatching(self) -> BMatchingProblem:
        return BMatchingProblem.complete(self.problem, self.b or {}, self.cap)

    @property
    def is_bmatching(self) -> bool:
        return self.b is not None or self.cap is not None


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def parse_rational(token: str, line: int | None = None, source: str = "") -> Fraction:
    token = token.strip()
    if not _RATIONAL.match(token):
        raise ParseError(f"malformed rational {token!r}", line, source)
    try:
        return to_rational(token)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ParseError(f"malformed rational {token!r}: {exc}", line, source) from None


def _int(token: str, line: int, source: str) -> int:
    if not re.fullmatch(r"\d+", token):
        raise ParseError(f"expected a positive integer, got {token!r}", line, source)
    return int(token)


def _node(token: str, line: int, source: str) -> tuple:
    m = _NODE.match(token)
    if not m:
        raise ParseError(f"bad node name {token!r}", line, source)
    return m.group(1), int(m.group(2))


def _edge(token: str, p: QProblem | None, line: int, source: str) -> tuple:
    m = _EDGE.match(token.strip())
    if not m:
        raise ParseError(f"bad edge {token!r}; expected e(u<i>,w<j>)", line, source)
    e = (int(m.group(1)[1:]), int(m.group(2)[1:]))
    if p is not None and e not in set(p.edges):
        raise ParseError(f"edge {token.strip()} not in K_{p.m},{p.n}", line, source)
    return e


def _assignments(rest: str, line: int, source: str) -> list:
    out = []
    for tok in re.findall(r"e\([^)]*\)=\S+|\S+", rest):
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", line, source)
        k, v = tok.rsplit("=", 1)
        out.append((k, v))
    return out


def parse_problem(text: str, source: str = "") -> ProblemSpec:
    size = special = None
    b = cap = None
    pending = []
    for no, line in _lines(text):
        word, _, rest = line.partition(" ")
        if word == "bipartite":
            if size is not None:
                raise ParseError("duplicate 'bipartite' line", no, source)
            parts = rest.split()
            if len(parts) != 2:
                raise ParseError("expected 'bipartite m n'", no, source)
            size = (_int(parts[0], no, source), _int(parts[1], no, source))
            if min(size) < 2:
                raise ParseError("need m, n >= 2 for two disjoint special edges", no, source)
        elif word == "special":
            parts = rest.split()
            if len(parts) != 4:
                raise ParseError("expected 'special u<i> w<j> u<k> w<l>'", no, source)
            nodes = [_node(t, no, source) for t in parts]
            if [s for s, _ in nodes] != ["u", "w", "u", "w"]:
                raise ParseError("special edges must be given as u w u w", no, source)
            special = ((nodes[0][1], nodes[1][1]), (nodes[2][1], nodes[3][1]), no)
        elif word in ("b", "cap"):
            pending.append((word, rest, no))
        else:
            raise ParseError(f"unknown directive {word!r}", no, source)
    if size is None:
        raise ParseError("missing 'bipartite m n' line", None, source)
    e1, e2, no = special if special else ((1, 1), (2, 2), None)
    try:
        p = QProblem(size[0], size[1], e1, e2)
    except ValueError as exc:
        raise ParseError(str(exc), no, source) from None
    for word, rest, no in pending:
        if word == "b":
            b = dict(b or {})
            for k, v in _assignments(rest, no, source):
                _node(k, no, source)
                if k not in p.node_index:
                    raise ParseError(f"node {k} not in K_{p.m},{p.n}", no, source)
                b[k] = _int(v, no, source)
                if b[k] < 1:
                    raise ParseError(f"b at {k} must be positive", no, source)
        else:
            cap = dict(cap or {})
            for k, v in _assignments(rest, no, source):
                e = _edge(k, p, no, source)
                cap[e] = _int(v, no, source)
                if cap[e] < 1:
                    raise ParseError(f"capacity of {k} must be positive", no, source)
    if cap is not None:
        cap = {e: cap.get(e, 1) for e in p.edges}
    spec = ProblemSpec(p, b, cap)
    if spec.is_bmatching:
        try:
            spec.bmatching()
        except ValueError as exc:
            raise ParseError(str(exc), None, source) from None
    return spec


def parse_point(text: str, p: QProblem, source: str = "") -> QPoint:
    x, y, seen = {}, None, set()
    for no, line in _lines(text):
        if "=" not in line:
            raise ParseError(f"expected 'e(u,w)=p/q' or 'y=p/q', got {line!r}", no, source)
        key, value = (s.strip() for s in line.rsplit("=", 1))
        val = parse_rational(value, no, source)
        if key == "y":
            if y is not None:
                raise ParseError("duplicate y", no, source)
            y = val
            continue
        e = _edge(key, p, no, source)
        if e in seen:
            raise ParseError(f"duplicate edge {key}", no, source)
        seen.add(e)
        x[e] = val
    return QPoint.of(p, x, y if y is not None else 0)


def edge_name(e) -> str:
    return f"e(u{e[0]},w{e[1]})"


def write_problem(spec: ProblemSpec | QProblem) -> str:
    if isinstance(spec, QProblem):
        spec = ProblemSpec(spec)
    p = spec.problem
    out = [f"bipartite {p.m} {p.n}",
           f"special u{p.e1[0]} w{p.e1[1]} u{p.e2[0]} w{p.e2[1]}"]
    if spec.b is not None:
        items = [f"{v}={spec.b[v]}" for v in p.nodes if v in spec.b]
        out.append("b " + " ".join(items) if items else "b")
    if spec.cap is not None:
        out.append("cap " + " ".join(f"{edge_name(e)}={spec.cap[e]}" for e in p.edges if e in spec.cap))
    return "\n".join(out) + "\n"


def write_point(pt: QPoint, p: QProblem) -> str:
    out = [f"{edge_name(e)}={format_rational(pt[e])}" for e in p.edges if pt[e]]
    out.append(f"y={format_rational(pt.y)}")
    return "\n".join(out) + "\n"
