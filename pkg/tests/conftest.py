import random
from fractions import Fraction

import pytest

from apparent_loci.kernel import CurveSpec, FuncElem, Poly
from apparent_loci.places import Affine
from apparent_loci.trivializer import Frame


@pytest.fixture
def g1():
    """y^2 = x^3 + 1"""
    return CurveSpec([1, 0, 0, 1])


@pytest.fixture
def g2():
    """y^2 = x^5 + 1"""
    return CurveSpec([1, 0, 0, 0, 0, 1])


@pytest.fixture(params=["g1", "g2"])
def curve(request):
    return request.getfixturevalue(request.param)


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture
def demo_frame(g1):
    """Columns (x, y - 1) and (x - 2, y + 3); dependent only at (0,1) and (2,-3)."""
    x, y = FuncElem.x(g1), FuncElem.y(g1)
    return Frame(g1, ((x, y - 1), (x - 2, y + 3)))


def rational_points(curve):
    """A few rational places used to build test divisors."""
    found = [Affine(0, 1), Affine(0, -1), Affine(-1, 0)]
    if curve.genus == 1:
        found += [Affine(2, 3), Affine(2, -3)]
    return found


def random_poly(rng, degree, bound=3):
    return Poly([Fraction(rng.randint(-bound, bound), rng.randint(1, 2)) for _ in range(degree + 1)])


def random_func(curve, rng, degree=2, with_denominator=True):
    """A random nonzero (a + b y)/d with small integer data."""
    while True:
        a = random_poly(rng, rng.randint(0, degree))
        b = random_poly(rng, rng.randint(0, degree - 1)) if rng.random() < 0.7 else Poly()
        u = FuncElem(a, b, curve)
        if with_denominator and rng.random() < 0.5:
            d = Poly.linear_root(rng.randint(-3, 3))
            u = u / FuncElem(d, 0, curve)
        if not u.is_zero:
            return u
