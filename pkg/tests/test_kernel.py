from fractions import Fraction

import pytest
from conftest import random_func

from apparent_loci.errors import CurveError, CurveMismatch, ZeroElementError
from apparent_loci.kernel import (
    CurveSpec,
    FuncElem,
    Poly,
    RatFunc,
    irreducible_factors,
    rational_sqrt,
)
from apparent_loci.linalg import det, echelon, inverse, matmul, nullspace, solve

X = Poly.x()


def test_poly_arithmetic_and_text():
    p = (X + 1) * (X - 1)
    assert p == Poly([-1, 0, 1])
    assert str(p) == "x^2 - 1"
    assert str(Poly([0, Fraction(3, 2)])) == "3/2*x"
    q, r = divmod(X**3 + 1, X - 2)
    assert q == Poly([4, 2, 1]) and r == 9
    assert (X**2 - 1).gcd(X**2 + 2 * X + 1) == X + 1
    assert Poly([1, 2, 3])(Fraction(1, 2)) == Fraction(11, 4)


def test_poly_shift_and_valuation():
    assert (X**2).shift(1) == Poly([1, 2, 1])
    assert ((X - 2) ** 3 * (X + 1)).valuation(X - 2) == 3


def test_xgcd_and_inverse_mod():
    a, m = X + 3, X**2 + 1
    g, s, t = a.xgcd(m)
    assert g == 1 and s * a + t * m == 1
    assert (a * a.inverse_mod(m)) % m == 1


def test_rational_sqrt():
    assert rational_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert rational_sqrt(Fraction(2)) is None
    assert rational_sqrt(Fraction(-1)) is None


def test_irreducible_factors_are_monic_and_sorted():
    factors = irreducible_factors((X**2 + 2 * X + 4) * (X - 2) * 3)
    assert factors == (X - 2, X**2 + 2 * X + 4)


def test_ratfunc_canonical_form():
    r = RatFunc(X**2 - 1, (X - 1) * 2)
    assert r.num == Poly([Fraction(1, 2), Fraction(1, 2)]) and r.den == 1
    assert RatFunc(X, X**2) == RatFunc(1, X)
    assert str(RatFunc(1, X + 1)) == "(1)/(x + 1)"
    with pytest.raises(ZeroElementError):
        RatFunc(1, 0)


def test_curve_validation():
    assert CurveSpec([1, 0, 0, 1]).genus == 1
    assert CurveSpec([1, 0, 0, 0, 0, 1]).genus == 2
    with pytest.raises(CurveError):
        CurveSpec([1, 0, 0, 0, 1])
    with pytest.raises(CurveError):
        CurveSpec([0, 0, 1, 1])


def test_y_squared_is_f(curve):
    y = FuncElem.y(curve)
    assert y * y == FuncElem(curve.f, 0, curve)


def test_inverse_and_norm(curve):
    y = FuncElem.y(curve)
    u = y - 1
    assert u * u.inverse() == 1
    assert u.norm() == RatFunc(1 - curve.f)
    assert u.conjugate() == -y - 1
    with pytest.raises(ZeroElementError):
        FuncElem.zero(curve).inverse()


def test_field_axioms_on_random_triples(curve, rng):
    for _ in range(15):
        u, v, w = (random_func(curve, rng) for _ in range(3))
        assert (u * v) * w == u * (v * w)
        assert u * (v + w) == u * v + u * w
        assert (u / v) * v == u
        assert u - u == 0


def test_parts_recover_the_function(g1):
    u = (FuncElem.y(g1) + 1) / FuncElem(X * (X - 1), 0, g1) + FuncElem(1, 0, g1) / FuncElem(X, 0, g1)
    a, b, d = u.parts()
    assert d.lead == 1
    assert FuncElem(RatFunc(a, d), RatFunc(b, d), g1) == u


def test_arithmetic_across_curves_is_refused(g1, g2):
    with pytest.raises(CurveMismatch):
        FuncElem.y(g1) + FuncElem.y(g2)


def test_rational_elimination():
    rows = [[Fraction(1), Fraction(2), Fraction(3)], [Fraction(2), Fraction(4), Fraction(7)]]
    reduced, pivots = echelon(rows)
    assert pivots == [0, 2]
    kernel = nullspace(rows, 3)
    assert kernel == [[Fraction(-2), Fraction(1), Fraction(0)]]
    assert solve([[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]], [Fraction(3), Fraction(4)]) == [1, 1]


def test_function_matrices(g1):
    x, y = FuncElem.x(g1), FuncElem.y(g1)
    m = ((x, y), (FuncElem.one(g1), x + 1))
    assert det(m) == x * (x + 1) - y
    ident = matmul(m, inverse(m))
    assert ident == ((1, 0), (0, 1))
