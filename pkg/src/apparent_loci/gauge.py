"""
Linear systems d(alpha)/dx = A alpha on the curve and their change of frame.

If alpha = M beta then beta' = (M^-1 A M - M^-1 M') beta, which is the
convention used throughout.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

from apparent_loci.kernel import CurveSpec, FuncElem, RatFunc
from apparent_loci.linalg import Matrix, inverse, matmul, matsub
from apparent_loci.places import INFINITY, Place, pole_divisor, ramified_places
from apparent_loci.trivializer import BadKind, Frame, TrivializationCertificate

logger = logging.getLogger("apparent_loci.gauge")

SystemMatrix = Matrix


def derive(u: FuncElem) -> FuncElem:
    """d/dx with dy/dx = f'(x) / (2y)."""
    curve = u.curve
    da = u.a.derivative()
    if u.b.is_zero:
        return FuncElem(da, 0, curve)
    # (b y)' = b' y + b f'/(2y) = (b' + b f' / (2f)) y
    half_log = RatFunc(curve.fprime, curve.f * 2)
    return FuncElem(da, u.b.derivative() + u.b * half_log, curve)


def derive_matrix(m: Sequence[Sequence[FuncElem]]) -> Matrix:
    return tuple(tuple(derive(u) for u in row) for row in m)


def gauge_transform(a: Sequence[Sequence[FuncElem]], m: Sequence[Sequence[FuncElem]]) -> SystemMatrix:
    """The system satisfied by beta when alpha = M beta solves alpha' = A alpha."""
    m_inv = inverse(m)
    return matsub(matmul(matmul(m_inv, a), m), matmul(m_inv, derive_matrix(m)))


def ambient_system(omega: Sequence[Sequence[FuncElem]], frame: Frame) -> SystemMatrix:
    """A connection given in the ambient trivial frame, rewritten in the frame's coordinates."""
    return gauge_transform(omega, frame.rows())


def singular_places(a: Iterable[Iterable[FuncElem]]) -> FrozenSet[Place]:
    found = set()
    for row in a:
        for u in row:
            if not u.is_zero:
                found.update(pole_divisor(u).support)
    return frozenset(found)


def coordinate_singularities(curve: CurveSpec) -> FrozenSet[Place]:
    """Places where x fails to be a local coordinate: ramified points and infinity."""
    return frozenset(ramified_places(curve)) | {INFINITY}


@dataclass(frozen=True)
class EmittedSystem:
    matrix: SystemMatrix
    singular: Tuple[Place, ...]
    allowed: Tuple[Place, ...]
    violations: Tuple[Place, ...]

    @property
    def contained(self) -> bool:
        return not self.violations


def _sorted(places: Iterable[Place]) -> Tuple[Place, ...]:
    return tuple(sorted(places, key=lambda q: q.sort_key()))


def emit_system(
    a_orig: Sequence[Sequence[FuncElem]],
    cert: TrivializationCertificate,
    declared: Optional[Iterable[Place]] = None,
) -> EmittedSystem:
    """
    Rewrite a system given in the certificate's input frame in its output
    frame, and check its poles lie in bad set + P + declared singularities
    (+ the coordinate singularities of x).
    """
    matrix = gauge_transform(a_orig, cert.change_of_basis)
    singular = singular_places(matrix)
    declared_set = set(declared) if declared is not None else set(singular_places(a_orig))
    allowed = (
        {bp.place for bp in cert.bad_set if bp.kind in (BadKind.DEPENDENCE, BadKind.POLE)}
        | {cert.basepoint}
        | declared_set
        | coordinate_singularities(cert.curve)
    )
    violations = singular - allowed
    if violations:
        logger.warning(f"emitted system has poles outside the admissible set: {sorted(map(str, violations))}")
    return EmittedSystem(matrix, _sorted(singular), _sorted(allowed), _sorted(violations))
