import random
from dataclasses import replace

import pytest

from apparent_loci.errors import InvariantViolation, IrrationalLocus, PlaceError, SingularFrame
from apparent_loci.generator import InstanceGenerator
from apparent_loci.kernel import FuncElem, Poly
from apparent_loci.places import INFINITY, Affine, Closed, Divisor, column_divisor, jet_expand
from apparent_loci.trivializer import (
    BadKind,
    BadPoint,
    Frame,
    bad_point_bound,
    dependence_locus,
    global_alphas,
    local_data,
    move_poles,
    trivialize,
    verify_certificate,
)


@pytest.fixture
def demo_cert(demo_frame):
    return trivialize(demo_frame)


def test_bad_point_bound():
    assert bad_point_bound(1, 1) == 2
    assert bad_point_bound(2, 1) == 4
    assert bad_point_bound(3, 1) == 6
    assert bad_point_bound(2, 2) == 7
    assert bad_point_bound(2, 3) == 3 * 3 + 1


def test_identity_frame(curve):
    cert = trivialize(Frame.identity(curve, 2))
    assert cert.count == 1
    assert cert.places == {INFINITY}
    assert verify_certificate(cert).passed


def test_demo_instance(demo_cert):
    report = verify_certificate(demo_cert)
    assert report.passed, report.failures
    assert demo_cert.count <= 4
    assert demo_cert.bound == 4
    first, second = demo_cert.recurrence_log
    assert first.count == 1
    assert second.new_points == 1 and second.carried == 1
    assert second.orders == (2,)
    assert Affine(0, 1) in demo_cert.places


def test_demo_bad_set_kinds(demo_cert):
    kinds = {bp.place: bp.kind for bp in demo_cert.bad_set}
    assert kinds[INFINITY] == BadKind.POLE
    assert kinds[Affine(0, 1)] == BadKind.DEPENDENCE


def test_rank_one(g1):
    x = FuncElem.x(g1)
    cert = trivialize(Frame(g1, (((x - 2) / x,),)))
    assert cert.count <= 2
    assert verify_certificate(cert).passed


def test_shortfall_keeps_the_point_bad(g1):
    # The extra zero of h in L((0,-1)) would be (0,-1) itself; h is constant.
    x, y = FuncElem.x(g1), FuncElem.y(g1)
    cert = trivialize(Frame(g1, ((x, y - 1), (FuncElem.zero(g1), FuncElem.one(g1)))))
    first, second = cert.recurrence_log
    assert first.count == 1
    assert (second.q_prime, second.q_dblprime) == (1, 0)
    assert (second.new_points, second.carried, second.budget_used) == (1, 1, 0)
    assert second.count == 2
    assert second.audit(first.count, 1)
    assert cert.places == {Affine(0, 1), Affine(0, -1), INFINITY}
    assert verify_certificate(cert).passed


def test_exceptional_point_reaches_the_bound(g1):
    # det = (x + 1)(y - 2x + 1); the tangent y - 2x + 1 at (2,3) is the vanishing function.
    x, y = FuncElem.x(g1), FuncElem.y(g1)
    cert = trivialize(Frame(g1, ((x + 1, y), (x + 1, 2 * y - 2 * x + 1))))
    first, second = cert.recurrence_log
    assert first.count == 1
    assert second.budget_used == 1
    assert (second.new_points, second.carried) == (2, 1)
    assert sorted(second.orders) == [1, 2]
    assert (second.q_prime, second.q_dblprime) == (1, 0)
    assert second.count == 3
    assert second.audit(first.count, 1)
    exceptional = {bp.place for bp in cert.bad_set if bp.exceptional}
    assert exceptional == {Affine(2, 3)}
    assert cert.places == {Affine(-1, 0), Affine(2, 3), Affine(0, -1), INFINITY}
    assert cert.count == cert.bound == 4
    assert verify_certificate(cert).passed


@pytest.mark.parametrize("p", [1, 2, 3])
def test_generated_instances(g1, p):
    generator = InstanceGenerator(g1, random.Random(f"trivializer:{p}"))
    verified = 0
    for _ in range(4 if p < 3 else 3):
        frame = generator.product_frame(p)
        try:
            cert = trivialize(frame)
        except IrrationalLocus:
            continue
        report = verify_certificate(cert)
        assert report.passed, report.failures
        assert cert.count <= bad_point_bound(p, 1)
        verified += 1
    assert verified


def test_singular_frames(g1):
    x = FuncElem.x(g1)
    one = FuncElem.one(g1)
    with pytest.raises(SingularFrame):
        trivialize(Frame(g1, ((one, x), (x, x * x))))
    with pytest.raises(SingularFrame):
        trivialize(Frame(g1, ((one, x),)))


def test_irrational_dependence_point(g1):
    x = FuncElem.x(g1)
    one = FuncElem.one(g1)
    with pytest.raises(IrrationalLocus) as info:
        trivialize(Frame(g1, ((one, one), (one, x * x - 1))))
    assert isinstance(info.value.place, Closed)
    assert info.value.exit_code == 3


def test_affine_basepoint_refuses_at_infinity(demo_frame):
    # The moved determinant vanishes to order 3 at infinity once poles sit at (2,3).
    with pytest.raises(IrrationalLocus) as info:
        trivialize(demo_frame, Affine(2, 3))
    assert info.value.place == INFINITY
    assert "P = inf" in str(info.value)
    assert info.value.exit_code == 3


def test_closed_basepoint_is_refused(demo_frame):
    with pytest.raises(PlaceError):
        trivialize(demo_frame, Closed(Poly.x() - 1, None, 2))


def test_dependence_locus_of_a_diagonal_frame(g1):
    x = FuncElem.x(g1)
    frame = Frame(g1, ((x, FuncElem.zero(g1)), (FuncElem.zero(g1), FuncElem.one(g1))))
    locus = dependence_locus(frame)
    assert dict(locus.dep_points) == {Affine(0, 1): 1, Affine(0, -1): 1}
    assert locus.poles == Divisor({INFINITY: 2})


def test_move_poles(curve):
    x, y = FuncElem.x(curve), FuncElem.y(curve)
    frame = Frame(curve, ((x, y - 1), (1 / x, x + 2)))
    moved, sections = move_poles(frame)
    assert len(sections) == frame.width
    for column in moved.columns:
        divisor = column_divisor(column)
        assert set(divisor.negative_part().support) <= {INFINITY}
        assert divisor.restrict(lambda q: q != INFINITY).degree <= curve.genus


def test_local_data_matches_the_next_column(demo_frame):
    moved, _ = move_poles(demo_frame)
    head = Frame(moved.curve, (moved.column(0),))
    psi = moved.column(1)
    z = Affine(2, -3)
    ld = local_data(head, psi, z)
    assert ld.order == 2
    for r in range(2):
        residual = jet_expand(psi[r], z, ld.order) - ld.alphas[0] * jet_expand(head.column(0)[r], z, ld.order)
        assert all(c == 0 for c in residual.coefficients[: ld.order])


def test_global_alphas_interpolate(demo_frame):
    moved, _ = move_poles(demo_frame)
    head = Frame(moved.curve, (moved.column(0),))
    ld = local_data(head, moved.column(1), Affine(2, -3))
    glob = global_alphas(moved.curve, [ld], 1)
    assert glob.exceptional == frozenset()
    assert jet_expand(glob.alphatilde[0], ld.place, ld.order).coefficients == ld.alphas[0].coefficients


def test_local_data_needs_an_unshared_point(demo_frame):
    moved, _ = move_poles(demo_frame)
    head = Frame(moved.curve, (moved.column(0),))
    with pytest.raises(InvariantViolation):
        local_data(head, moved.column(1), Affine(0, 1))
    with pytest.raises(PlaceError):
        local_data(head, moved.column(1), Affine(2, 3))


def test_wrong_original_frame_fails_span(demo_cert, g1):
    report = verify_certificate(demo_cert, Frame.identity(g1, 2))
    assert "span" in {c.name for c in report.failures}


# -- tampering ---------------------------------------------------------------


def _with_m(cert, fn):
    rows = [list(r) for r in cert.change_of_basis]
    fn(rows, cert.curve)
    return replace(cert, change_of_basis=tuple(tuple(r) for r in rows))


def _with_output(cert, columns):
    return replace(cert, output_frame=Frame(cert.curve, tuple(tuple(c) for c in columns)))


def _with_bad_set(cert, fn):
    return replace(cert, bad_set=tuple(fn(list(cert.bad_set))))


def _with_record(cert, index, **changes):
    log = list(cert.recurrence_log)
    log[index] = replace(log[index], **changes)
    return replace(cert, recurrence_log=tuple(log))


def _dependence_index(cert):
    return next(i for i, bp in enumerate(cert.bad_set) if bp.kind == BadKind.DEPENDENCE)


def _pole_index(cert):
    return next(i for i, bp in enumerate(cert.bad_set) if bp.kind == BadKind.POLE)


def _set(rows, i, j, value):
    rows[i][j] = value


def _retype(bad, i):
    bad[i] = replace(bad[i], kind=BadKind.DEPENDENCE)
    return bad


def _reorder(bad, i):
    bad[i] = replace(bad[i], order=bad[i].order + 1)
    return bad


TAMPERS = {
    "m_entry_shifted": lambda c: _with_m(c, lambda r, g: _set(r, 0, 0, r[0][0] + FuncElem.x(g))),
    "m_zeroed": lambda c: _with_m(c, lambda r, g: [_set(r, i, j, FuncElem.zero(g)) for i in range(2) for j in range(2)]),
    "m_rows_swapped": lambda c: replace(c, change_of_basis=tuple(reversed(c.change_of_basis))),
    "m_scaled": lambda c: _with_m(c, lambda r, g: _set(r, 1, 1, r[1][1] * 2)),
    "output_column_scaled": lambda c: _with_output(c, [[u * 2 for u in c.output_frame.column(0)], c.output_frame.column(1)]),
    "output_columns_swapped": lambda c: _with_output(c, reversed(c.output_frame.columns)),
    "dependence_point_dropped": lambda c: _with_bad_set(c, lambda b: b[: _dependence_index(c)] + b[_dependence_index(c) + 1:]),
    "pole_dropped": lambda c: _with_bad_set(c, lambda b: b[: _pole_index(c)] + b[_pole_index(c) + 1:]),
    "fake_point_added": lambda c: _with_bad_set(c, lambda b: b + [BadPoint(Affine(2, 3), BadKind.DEPENDENCE, False, 1)]),
    "order_changed": lambda c: _with_bad_set(c, lambda b: _reorder(b, _dependence_index(c))),
    "pole_retyped": lambda c: _with_bad_set(c, lambda b: _retype(b, _pole_index(c))),
    "last_count_bumped": lambda c: _with_record(c, -1, count=c.recurrence_log[-1].count + 1),
    "last_count_lowered": lambda c: _with_record(c, -1, count=c.recurrence_log[-1].count - 1),
    "first_count_inflated": lambda c: _with_record(c, 0, count=5),
    "q_prime_over_budget": lambda c: _with_record(c, -1, q_prime=2),
    "budget_overspent": lambda c: _with_record(c, -1, budget_used=2),
    "record_dropped": lambda c: replace(c, recurrence_log=c.recurrence_log[:-1]),
    "record_duplicated": lambda c: replace(c, recurrence_log=c.recurrence_log + c.recurrence_log[-1:]),
    "bound_raised": lambda c: replace(c, bound=c.bound + 1),
    "bound_lowered": lambda c: replace(c, bound=c.bound - 1),
    "basepoint_moved": lambda c: replace(c, basepoint=Affine(2, 3)),
    "basepoint_on_dependence_point": lambda c: replace(c, basepoint=Affine(0, 1)),
}


@pytest.mark.parametrize("name", sorted(TAMPERS))
def test_tampered_certificate_is_rejected(demo_cert, name):
    tampered = TAMPERS[name](demo_cert)
    report = verify_certificate(tampered)
    assert not report.passed, name
