import random
from fractions import Fraction

import pytest

from qmatch.core import QPoint, QProblem, vertex_set
from qmatch.exactlp import vertex_enumeration
from qmatch.inequalities import Kind
from qmatch.verify import description

INSTANCES = [(2, 2), (3, 2), (2, 3), (3, 3)]


@pytest.fixture
def k22():
    return QProblem(2, 2)


@pytest.fixture
def k32():
    return QProblem(3, 2)


@pytest.fixture
def rng():
    return random.Random(20240607)


def _relaxed_vertices(p):
    """Vertices of weakened systems; most are fractional and sit just outside."""
    out = []
    for drop in ((Kind.DOWN, Kind.UP), (Kind.DOWN,), (Kind.UP,), (Kind.UP, Kind.STDLIN)):
        h = description(p, "exact", drop)
        out += vertex_enumeration(h)
    return sorted(set(out))


_cache = {}


def sample_points(p, rng, count):
    """Mixture of random box points and mixes of true and relaxed vertices."""
    key = (p.m, p.n, p.e1, p.e2)
    if key not in _cache:
        verts = [v.vector(p.edges) for v in vertex_set(p, "exact")]
        verts += [v.vector(p.edges) for v in vertex_set(p, "up")]
        _cache[key] = (verts, _relaxed_vertices(p))
    verts, relaxed = _cache[key]
    dim = len(p.edges) + 1
    pts = []
    for k in range(count):
        mode = k % 4
        if mode == 0:
            den = rng.choice((2, 3, 4, 6))
            vec = [Fraction(rng.randint(0, den), den) for _ in range(dim)]
        elif mode == 1:
            vec = list(rng.choice(relaxed))
        else:
            a, b = rng.choice(relaxed), rng.choice(verts if mode == 2 else relaxed)
            t = Fraction(rng.randint(1, 4), 5)
            vec = [t * x + (1 - t) * y for x, y in zip(a, b)]
            if rng.random() < 0.3:
                i = rng.randrange(dim)
                vec[i] += Fraction(rng.choice((-1, 1)), rng.choice((4, 8)))
        pts.append(QPoint.from_vector(p.edges, vec))
    return pts
