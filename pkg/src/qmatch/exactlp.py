"""Exact rational LP (two-phase simplex, Bland's rule) and double description.

Variables are arbitrary hashable names.  A variable is treated as
sign-constrained when some row is exactly ``-v <= 0`` (or ``v >= 0``); such
rows are absorbed into the variable bounds, every other variable is free.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Hashable, Iterable, Mapping, Sequence

from .core import ZERO, EnumerationTooLarge, QMatchError

LE, EQ, GE = "<=", "=", ">="


class UnboundedPolytope(QMatchError):
    pass


@dataclass(frozen=True)
class Row:
    coef: Mapping
    sense: str
    rhs: Fraction

    def __post_init__(self):
        if self.sense not in (LE, EQ, GE):
            raise ValueError(f"bad sense {self.sense!r}")
        object.__setattr__(self, "coef", {k: Fraction(v) for k, v in self.coef.items() if v})
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def lhs(self, point: Mapping) -> Fraction:
        return sum((c * point.get(k, ZERO) for k, c in self.coef.items()), ZERO)

    def holds(self, point: Mapping) -> bool:
        v = self.lhs(point)
        if self.sense == LE:
            return v <= self.rhs
        if self.sense == GE:
            return v >= self.rhs
        return v == self.rhs


@dataclass(frozen=True)
class HPolytope:
    variables: tuple
    rows: tuple
    tags: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", tuple(self.rows))
        names = set(self.variables)
        for r in self.rows:
            extra = set(r.coef) - names
            if extra:
                raise ValueError(f"row uses unknown variables {sorted(map(str, extra))}")

    def contains(self, point: Mapping) -> bool:
        return all(r.holds(point) for r in self.rows)

    def without(self, predicate) -> "HPolytope":
        keep = [i for i, t in enumerate(self.tags) if not predicate(t)]
        return HPolytope(self.variables, [self.rows[i] for i in keep], [self.tags[i] for i in keep])


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: dict | None = None
    value: Fraction | None = None
    certificate: dict | None = None


def _nonneg_row(r: Row):
    if len(r.coef) != 1 or r.rhs != 0:
        return None
    (v, c), = r.coef.items()
    if (r.sense == LE and c < 0) or (r.sense == GE and c > 0):
        return v
    return None


class _Tableau:
    """Dense tableau for ``A z = b, z >= 0`` with an artificial per row."""

    def __init__(self, A: list, b: list):
        self.m = len(A)
        self.n = len(A[0]) if A else 0
        self.T = []
        for i in range(self.m):
            row = list(A[i]) + [Fraction(int(i == k)) for k in range(self.m)] + [b[i]]
            self.T.append(row)
        self.basis = [self.n + i for i in range(self.m)]

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        piv = T[r][c]
        if piv != 1:
            T[r] = [v / piv for v in T[r]]
        pr = T[r]
        for i in range(self.m):
            if i != r:
                f = T[i][c]
                if f:
                    Ti = T[i]
                    T[i] = [a - f * b for a, b in zip(Ti, pr)]
        self.basis[r] = c

    def reduced(self, cost: list) -> list:
        """Reduced costs ``c_j - c_B B^-1 A_j`` for every column (incl. artificials)."""
        ncols = self.n + self.m
        red = list(cost[:ncols])
        for i, bv in enumerate(self.basis):
            cb = cost[bv]
            if cb:
                Ti = self.T[i]
                for j in range(ncols):
                    if Ti[j]:
                        red[j] -= cb * Ti[j]
        return red

    def run(self, cost: list, allowed: int):
        """Maximise ``cost . z`` using columns ``< allowed``; Bland's rule."""
        while True:
            red = self.reduced(cost)
            enter = next((j for j in range(allowed) if red[j] > 0), None)
            if enter is None:
                return "optimal", red
            best = None
            for i in range(self.m):
                a = self.T[i][enter]
                if a > 0:
                    ratio = self.T[i][-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded", enter
            self.pivot(best[1], enter)


def _standardize(h: HPolytope, nonneg: set):
    """Map to ``A z = b`` with ``b >= 0``.  Returns column metadata and row signs."""
    columns = []  # (kind, payload): ("pos", var) | ("neg", var) | ("slack", row)
    for v in h.variables:
        columns.append(("pos", v))
        if v not in nonneg:
            columns.append(("neg", v))
    rows = []
    for k, r in enumerate(h.rows):
        if r.sense == GE:
            coef = {v: -c for v, c in r.coef.items()}
            rows.append((k, coef, LE, -r.rhs, -1))
        else:
            rows.append((k, dict(r.coef), r.sense, r.rhs, 1))
    for idx, (k, coef, sense, rhs, _) in enumerate(rows):
        if sense == LE:
            columns.append(("slack", idx))
    col_of_slack = {p: j for j, (kind, p) in enumerate(columns) if kind == "slack"}
    A, b, sigma = [], [], []
    for idx, (k, coef, sense, rhs, flip) in enumerate(rows):
        line = [ZERO] * len(columns)
        for j, (kind, p) in enumerate(columns):
            if kind == "pos":
                line[j] = coef.get(p, ZERO)
            elif kind == "neg":
                line[j] = -coef.get(p, ZERO)
        if sense == LE:
            line[col_of_slack[idx]] = Fraction(1)
        s = 1
        if rhs < 0:
            line = [-v for v in line]
            rhs = -rhs
            s = -1
        A.append(line)
        b.append(rhs)
        sigma.append(s)
    return columns, A, b, sigma, [r[0] for r in rows]


def _split(h: HPolytope, nonneg: Iterable | None):
    if nonneg is None:
        detected = set()
        kept = []
        for r in h.rows:
            v = _nonneg_row(r)
            if v is not None:
                detected.add(v)
            else:
                kept.append(r)
        return HPolytope(h.variables, kept), detected, len(h.rows) - len(kept)
    return h, set(nonneg), 0


def lp_solve(objective: Mapping, h: HPolytope, sense: str = "max", nonneg=None,
             certify: bool = True) -> LPResult:
    """Optimise a linear objective over ``h`` exactly.

    Certificates are keyed by row position after bound rows have been absorbed
    (``nonneg=None``) and refer to the rows in ``<=`` form (``>=`` rows
    negated).  ``optimal`` carries dual multipliers, ``infeasible`` Farkas
    multipliers normalised to ``y.b = -1``, ``unbounded`` a ray.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    sgn = 1 if sense == "max" else -1
    core_h, nn, _ = _split(h, nonneg)
    columns, A, b, sigma, origin = _standardize(core_h, nn)
    m, n = len(A), len(columns)
    tab = _Tableau(A, b)

    # phase 1: maximise -sum(artificials)
    cost1 = [ZERO] * n + [Fraction(-1)] * m
    tab.run(cost1, n)
    red1 = tab.reduced(cost1)
    phase1 = sum((cost1[bv] * tab.T[i][-1] for i, bv in enumerate(tab.basis)), ZERO)
    if phase1 < 0:
        cert = None
        if certify:
            ydual = [-(red1[n + i] + 1) for i in range(m)]  # c_B B^-1 for phase 1
            y = [sigma[i] * ydual[i] for i in range(m)]
            cert = _farkas_from(core_h, origin, y, nn)
        return LPResult("infeasible", certificate=cert)

    # drive remaining artificials out where possible
    for i in range(m):
        if tab.basis[i] >= n:
            for j in range(n):
                if tab.T[i][j] != 0:
                    tab.pivot(i, j)
                    break

    col_cost = []
    for kind, p in columns:
        if kind == "pos":
            col_cost.append(sgn * Fraction(objective.get(p, 0)))
        elif kind == "neg":
            col_cost.append(-sgn * Fraction(objective.get(p, 0)))
        else:
            col_cost.append(ZERO)
    cost2 = col_cost + [ZERO] * m
    status, info = tab.run(cost2, n)

    z = [ZERO] * (n + m)
    for i, bv in enumerate(tab.basis):
        z[bv] = tab.T[i][-1]
    x = {v: ZERO for v in h.variables}
    for j, (kind, p) in enumerate(columns):
        if kind == "pos":
            x[p] += z[j]
        elif kind == "neg":
            x[p] -= z[j]
    if status == "unbounded":
        enter = info
        d = [ZERO] * (n + m)
        d[enter] = Fraction(1)
        for i, bv in enumerate(tab.basis):
            d[bv] = -tab.T[i][enter]
        ray = {v: ZERO for v in h.variables}
        for j, (kind, p) in enumerate(columns):
            if kind == "pos":
                ray[p] += d[j]
            elif kind == "neg":
                ray[p] -= d[j]
        return LPResult("unbounded", x=x, certificate={"ray": ray})

    value = sum((Fraction(objective.get(v, 0)) * x[v] for v in h.variables), ZERO)
    cert = None
    if certify:
        red = info
        ydual = [-red[n + i] for i in range(m)]
        y = [sigma[i] * ydual[i] for i in range(m)]
        cert = _dual_from(core_h, origin, y, objective, nn, sense)
    return LPResult("optimal", x=x, value=value, certificate=cert)


def _dual_from(core_h, origin, y, objective, nn, sense) -> dict:
    rows = {origin[i]: y[i] for i in range(len(y))}
    # reduced cost on sign-constrained variables, must be <= 0
    reduced = {}
    for v in nn:
        s = sum((rows[k] * _le_coef(core_h.rows[k]).get(v, ZERO) for k in rows), ZERO)
        reduced[v] = (1 if sense == "max" else -1) * Fraction(objective.get(v, 0)) - s
    return {"kind": "dual", "rows": rows, "bounds": reduced, "sense": sense}


def _farkas_from(core_h, origin, y, nn) -> dict:
    rows = {origin[i]: y[i] for i in range(len(y))}
    total = sum((rows[k] * _le_rhs(core_h.rows[k]) for k in rows), ZERO)
    if total:
        rows = {k: v / -total for k, v in rows.items()}
    return {"kind": "farkas", "rows": rows}


def _le_rhs(r: Row) -> Fraction:
    return -r.rhs if r.sense == GE else r.rhs


def _le_coef(r: Row) -> dict:
    return {v: -c for v, c in r.coef.items()} if r.sense == GE else r.coef


def verify_certificate(h: HPolytope, result: LPResult, objective: Mapping | None = None,
                       sense: str = "max", nonneg=None) -> bool:
    """Independently re-check a certificate produced by :func:`lp_solve`."""
    core_h, nn, _ = _split(h, nonneg)
    cert = result.certificate
    if cert is None:
        return False
    if result.status == "infeasible":
        y = cert["rows"]
        for k, v in y.items():
            if core_h.rows[k].sense != EQ and v < 0:
                return False
        for var in core_h.variables:
            s = sum((y[k] * _le_coef(core_h.rows[k]).get(var, ZERO) for k in y), ZERO)
            if var in nn:
                if s < 0:
                    return False
            elif s != 0:
                return False
        return sum((y[k] * _le_rhs(core_h.rows[k]) for k in y), ZERO) < 0
    if result.status == "unbounded":
        ray = cert["ray"]
        if not h.contains(result.x):
            return False
        for r in h.rows:
            s = sum((c * ray.get(v, ZERO) for v, c in r.coef.items()), ZERO)
            if (r.sense == LE and s > 0) or (r.sense == GE and s < 0) or (r.sense == EQ and s != 0):
                return False
        gain = sum((Fraction(objective.get(v, 0)) * ray[v] for v in ray), ZERO)
        return gain > 0 if sense == "max" else gain < 0
    # optimal: y dual feasible and b^T y == value
    if not h.contains(result.x):
        return False
    sgn = 1 if sense == "max" else -1
    y = cert["rows"]
    for k, v in y.items():
        if core_h.rows[k].sense != EQ and v < 0:
            return False
    for var in core_h.variables:
        s = sum((y[k] * _le_coef(core_h.rows[k]).get(var, ZERO) for k in y), ZERO)
        c = sgn * Fraction(objective.get(var, 0))
        if var in nn:
            if s < c:
                return False
        elif s != c:
            return False
    bound = sum((y[k] * _le_rhs(core_h.rows[k]) for k in y), ZERO)
    return bound == sgn * result.value


@dataclass
class Combination:
    weights: dict  # generator index -> positive Fraction
    ray_weights: dict = field(default_factory=dict)


@dataclass
class Separator:
    """Hyperplane ``a.z + beta >= 0`` on every generator, ``< 0`` at the target."""

    a: tuple
    beta: Fraction

    def value(self, z: Sequence) -> Fraction:
        return sum((ai * Fraction(zi) for ai, zi in zip(self.a, z)), ZERO) + self.beta


def feasibility_combination(target: Sequence, generators: Sequence[Sequence], rays=None):
    """Write ``target`` as a convex combination of ``generators`` (plus conic ``rays``).

    Returns ``(Combination, None)`` on success, ``(None, Separator)`` otherwise.
    A basic solution is returned, so at most ``dim + 1`` weights are nonzero.
    """
    rays = list(rays or [])
    d = len(target)
    lam = [("g", i) for i in range(len(generators))] + [("r", i) for i in range(len(rays))]
    rows = []
    for c in range(d):
        coef = {("g", i): Fraction(g[c]) for i, g in enumerate(generators)}
        coef.update({("r", i): Fraction(r[c]) for i, r in enumerate(rays)})
        rows.append(Row(coef, EQ, Fraction(target[c])))
    rows.append(Row({("g", i): 1 for i in range(len(generators))}, EQ, 1))
    h = HPolytope(lam, rows)
    res = lp_solve({}, h, nonneg=lam, certify=True)
    if res.status == "infeasible":
        y = res.certificate["rows"]
        # y^T b < 0 with y^T A >= 0 columnwise: y[:d].g + y[d] >= 0 for each generator
        a = tuple(y.get(c, ZERO) for c in range(d))
        beta = y.get(d, ZERO)
        return None, Separator(a, beta)
    weights = {i: res.x[("g", i)] for i in range(len(generators)) if res.x[("g", i)]}
    rw = {i: res.x[("r", i)] for i in range(len(rays)) if res.x[("r", i)]}
    return Combination(weights, rw), None


def _rank(vectors: list) -> int:
    rows = [list(map(Fraction, v)) for v in vectors]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pr = rows[rank]
        for i in range(rank + 1, len(rows)):
            f = rows[i][c]
            if f:
                f = f / pr[c]
                rows[i] = [a - f * b for a, b in zip(rows[i], pr)]
        rank += 1
    return rank


def affine_rank(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull (a single point has rank 0)."""
    pts = [tuple(map(Fraction, p)) for p in points]
    if len(pts) <= 1:
        return 0
    base = pts[0]
    return _rank([[a - b for a, b in zip(p, base)] for p in pts[1:]])


def _int_row(coef: Sequence[Fraction]) -> tuple:
    den = 1
    for c in coef:
        den = lcm(den, c.denominator)
    ints = [int(c * den) for c in coef]
    g = 0
    for v in ints:
        g = gcd(g, v)
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(ints)


def _normalize(ray: list) -> tuple:
    g = 0
    for v in ray:
        g = gcd(g, v)
    if g > 1:
        return tuple(v // g for v in ray)
    return tuple(ray)


def vertex_enumeration(h: HPolytope, max_dim: int = 16, max_rays: int = 200000) -> list:
    """All vertices of the bounded polytope ``h`` via the double description method.

    The polytope is homogenised to ``{(x, t) : A x - b t <= 0, t >= 0}``;
    equalities enter as two opposite rows.  Returns a sorted list of tuples of
    Fractions in ``h.variables`` order.  Raises on unbounded input.
    """
    names = h.variables
    d = len(names)
    if d > max_dim:
        raise EnumerationTooLarge(f"dimension {d} exceeds vertex enumeration guard {max_dim}")
    pos = {v: i for i, v in enumerate(names)}
    D = d + 1
    mat = [tuple([0] * d + [-1])]  # -t <= 0
    for r in h.rows:
        coef = [ZERO] * D
        for v, c in r.coef.items():
            coef[pos[v]] = c
        coef[d] = -r.rhs
        if r.sense in (LE, EQ):
            mat.append(_int_row(coef))
        if r.sense in (GE, EQ):
            mat.append(_int_row([-c for c in coef]))
    # remove duplicate rows, keep order
    seen = set()
    rows = []
    for r in mat:
        if r not in seen and any(r):
            seen.add(r)
            rows.append(r)
    if not rows:
        raise UnboundedPolytope("no constraints")

    # initial basis: first D linearly independent rows
    basis = []
    for i, r in enumerate(rows):
        if _rank([rows[j] for j in basis] + [r]) > len(basis):
            basis.append(i)
            if len(basis) == D:
                break
    if len(basis) < D:
        raise UnboundedPolytope("constraint matrix is not of full column rank (lineality)")
    K = [[Fraction(v) for v in rows[i]] for i in basis]
    inv = _inverse(K)
    rays = []
    for j in range(D):
        col = [-inv[i][j] for i in range(D)]
        rays.append(_normalize(list(_int_row(col))))
    nrows = len(rows)
    zero_sets = []
    for r in rays:
        z = 0
        for i in basis:
            if sum(a * b for a, b in zip(rows[i], r)) == 0:
                z |= 1 << i
        zero_sets.append(z)
    processed = set(basis)
    order = [i for i in range(nrows) if i not in processed]

    for i in order:
        a = rows[i]
        vals = [sum(x * y for x, y in zip(a, r)) for r in rays]
        plus = [k for k, v in enumerate(vals) if v > 0]
        minus = [k for k, v in enumerate(vals) if v < 0]
        zero = [k for k, v in enumerate(vals) if v == 0]
        new_rays = [rays[k] for k in minus] + [rays[k] for k in zero]
        new_z = [zero_sets[k] for k in minus] + [zero_sets[k] | (1 << i) for k in zero]
        if plus and minus:
            all_z = zero_sets
            for p in plus:
                zp = zero_sets[p]
                for q in minus:
                    common = zp & zero_sets[q]
                    if bin(common).count("1") < D - 2:
                        continue
                    adjacent = True
                    for k in range(len(rays)):
                        if k != p and k != q and (all_z[k] & common) == common:
                            adjacent = False
                            break
                    if not adjacent:
                        continue
                    vp, vq = vals[p], vals[q]
                    r = [vp * y - vq * x for x, y in zip(rays[p], rays[q])]
                    new_rays.append(_normalize(r))
                    new_z.append(common | (1 << i))
                    if len(new_rays) > max_rays:
                        raise EnumerationTooLarge("double description ray count exceeded guard")
        rays, zero_sets = new_rays, new_z

    verts = set()
    recession = False
    for r in rays:
        t = r[d]
        if t == 0:
            recession = True
        else:
            verts.add(tuple(Fraction(v, t) for v in r[:d]))
    if recession and verts:
        raise UnboundedPolytope("polytope is unbounded (recession ray found)")
    return sorted(verts)


def _inverse(K: list) -> list:
    n = len(K)
    M = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(K)]
    for c in range(n):
        piv = next(i for i in range(c, n) if M[i][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        p = M[c][c]
        M[c] = [v / p for v in M[c]]
        for i in range(n):
            if i != c and M[i][c]:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return [row[n:] for row in M]
