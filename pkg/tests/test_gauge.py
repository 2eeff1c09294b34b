import random

import pytest
from conftest import random_func

from apparent_loci.gauge import (
    ambient_system,
    coordinate_singularities,
    derive,
    emit_system,
    gauge_transform,
    singular_places,
)
from apparent_loci.generator import InstanceGenerator
from apparent_loci.kernel import FuncElem, Poly
from apparent_loci.linalg import det, diagonal, identity, inverse, matmul
from apparent_loci.places import INFINITY, Affine, Closed
from apparent_loci.trivializer import Frame, trivialize


@pytest.fixture
def demo_cert(demo_frame):
    return trivialize(demo_frame)


def zero_matrix(curve, p):
    return tuple(tuple(FuncElem.zero(curve) for _ in range(p)) for _ in range(p))


def test_derive_coordinates(curve):
    x, y = FuncElem.x(curve), FuncElem.y(curve)
    assert derive(x) == 1
    assert derive(FuncElem.constant(curve, 7)) == 0
    assert derive(y) * y * 2 == FuncElem(curve.fprime, 0, curve)
    assert derive(y * y) == FuncElem(curve.fprime, 0, curve)


def test_leibniz_rule(curve, rng):
    for _ in range(20):
        u, v = random_func(curve, rng), random_func(curve, rng)
        assert derive(u * v) == derive(u) * v + u * derive(v)


def test_gauge_by_identity_is_trivial(g1):
    x, y = FuncElem.x(g1), FuncElem.y(g1)
    a = ((x, y), (1 / x, FuncElem.zero(g1)))
    assert gauge_transform(a, identity(g1, 2)) == a


def test_gauge_inverse_and_composition(g1):
    x, y = FuncElem.x(g1), FuncElem.y(g1)
    one, zero = FuncElem.one(g1), FuncElem.zero(g1)
    a = ((1 / x, y), (one, zero))
    m1 = ((x, one), (zero, y - 1))
    m2 = ((one, x + 1), (y, one))
    assert gauge_transform(gauge_transform(a, m1), inverse(m1)) == a
    assert gauge_transform(gauge_transform(a, m1), m2) == gauge_transform(a, matmul(m1, m2))


def random_matrix(curve, rng, invertible=False):
    while True:
        m = tuple(tuple(random_func(curve, rng, degree=1) for _ in range(2)) for _ in range(2))
        if not invertible or not det(m).is_zero:
            return m


def test_gauge_identities_on_random_triples(curve, rng):
    for _ in range(50):
        a = random_matrix(curve, rng)
        m = random_matrix(curve, rng, invertible=True)
        n = random_matrix(curve, rng, invertible=True)
        assert gauge_transform(gauge_transform(a, m), inverse(m)) == a
        assert gauge_transform(gauge_transform(a, m), n) == gauge_transform(a, matmul(m, n))


def test_diagonal_scaling(g1):
    x = FuncElem.x(g1)
    result = gauge_transform(zero_matrix(g1, 2), diagonal([x, FuncElem.one(g1)]))
    assert result[0][0] == -1 / x
    assert result[1][1] == 0 and result[0][1] == 0 and result[1][0] == 0


def test_coordinate_singularities(g1):
    assert coordinate_singularities(g1) == frozenset(
        {Affine(-1, 0), Closed(Poly.x() ** 2 - Poly.x() + 1, None, 2, True), INFINITY}
    )


def test_zero_system_in_the_identity_frame(g1):
    cert = trivialize(Frame.identity(g1, 2))
    emitted = emit_system(zero_matrix(g1, 2), cert)
    assert emitted.contained
    assert emitted.singular == ()
    assert emitted.matrix == zero_matrix(g1, 2)


def test_ambient_zero_connection_on_the_demo(demo_cert, g1):
    a_orig = ambient_system(zero_matrix(g1, 2), demo_cert.input_frame)
    emitted = emit_system(a_orig, demo_cert, declared=())
    assert emitted.contained, emitted.violations
    assert emitted.matrix == ambient_system(zero_matrix(g1, 2), demo_cert.output_frame)


def test_generated_connection_is_contained(demo_cert, g1):
    generator = InstanceGenerator(g1, random.Random("gauge"))
    for _ in range(3):
        omega, declared = generator.connection(2)
        a_orig = ambient_system(omega, demo_cert.input_frame)
        emitted = emit_system(a_orig, demo_cert, declared=declared)
        assert emitted.contained, emitted.violations
        assert set(emitted.singular) <= set(emitted.allowed)


def test_undeclared_pole_is_a_violation(demo_cert, g1):
    x = FuncElem.x(g1)
    a = diagonal([1 / (x - 1), 1 / (x - 1)])
    emitted = emit_system(a, demo_cert, declared=())
    assert not emitted.contained
    assert Closed(Poly.x() - 1, None, 2) in emitted.violations


def test_declared_poles_default_to_the_input_system(demo_cert, g1):
    x = FuncElem.x(g1)
    a = diagonal([1 / (x - 1), 1 / (x - 1)])
    fibre = Closed(Poly.x() - 1, None, 2)
    assert fibre in singular_places(a)
    emitted = emit_system(a, demo_cert)
    assert fibre in emitted.allowed
    assert fibre not in emitted.violations
