"""
Reduction of a meromorphic frame to one with poles only at a basepoint P and
at most 2pg - g dependence points.

The columns are first rescaled so that each has poles only at P and at most g
zeros elsewhere. Then columns are added one at a time: at every point where
the new column becomes dependent on the already normalized ones, its
coordinates are matched to high order by a global combination of the head
columns, the difference is divided by a function with exactly the right
poles, and everything that could go wrong is counted against a g-budget.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from apparent_loci.errors import (
    InvariantViolation,
    IrrationalLocus,
    PlaceError,
    SingularFrame,
)
from apparent_loci.kernel import CurveSpec, FuncElem
from apparent_loci.linalg import (
    Matrix,
    det,
    matmul,
    maximal_minors,
    solve,
    submatrix,
    transpose,
)
from apparent_loci.places import (
    INFINITY,
    Affine,
    Closed,
    Divisor,
    Jet,
    Place,
    column_divisor,
    divisor_of,
    entry_weight,
    is_jet_site,
    jet_expand,
    ord_at,
    pole_divisor,
    sup,
)
from apparent_loci.riemann_roch import (
    DEFAULT_SEARCH,
    ENUMERATION_CONVENTION,
    SearchPolicy,
    Section,
    Vanishing,
    exact_order_function,
    relocated_section,
    selector_function,
    vanishing_function,
)

logger = logging.getLogger("apparent_loci.trivializer")

FRAME_COMPLETION_CONVENTION = (
    "minimal-index standard basis vector completing the head frame at the point"
)


def bad_point_bound(p: int, genus: int) -> int:
    return 2 * p * genus - genus + 1


def conventions() -> Tuple[Tuple[str, str], ...]:
    return (
        ("enumeration", ENUMERATION_CONVENTION),
        ("frame_completion", FRAME_COMPLETION_CONVENTION),
        ("jet_depth", "max(d_i) + 1"),
    )


@dataclass(frozen=True)
class Frame:
    """p x k matrix of functions; column j is the section psi_j."""

    curve: CurveSpec
    columns: Tuple[Tuple[FuncElem, ...], ...]

    def __post_init__(self):
        if not self.columns or not self.columns[0]:
            raise SingularFrame("a frame needs at least one non-empty column")
        rank = len(self.columns[0])
        for col in self.columns:
            if len(col) != rank:
                raise SingularFrame("frame columns have different lengths")
            for u in col:
                if u.curve != self.curve:
                    raise PlaceError("frame entry lives on a different curve")

    @classmethod
    def from_rows(cls, curve: CurveSpec, rows: Sequence[Sequence[FuncElem]]) -> "Frame":
        return cls(curve, transpose(rows))

    @classmethod
    def identity(cls, curve: CurveSpec, p: int) -> "Frame":
        one, zero = FuncElem.one(curve), FuncElem.zero(curve)
        return cls(curve, tuple(tuple(one if i == j else zero for i in range(p)) for j in range(p)))

    @property
    def rank(self) -> int:
        return len(self.columns[0])

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def is_square(self) -> bool:
        return self.rank == self.width

    def rows(self) -> Matrix:
        return transpose(self.columns)

    def column(self, j: int) -> Tuple[FuncElem, ...]:
        return self.columns[j]

    def entries(self) -> List[FuncElem]:
        return [u for col in self.columns for u in col]

    def det(self) -> FuncElem:
        if not self.is_square:
            raise SingularFrame(f"a {self.rank} x {self.width} frame has no determinant")
        return det(self.rows())

    def minors(self) -> List[Tuple[Tuple[int, ...], FuncElem]]:
        return maximal_minors(self.rows())

    def with_column(self, column: Sequence[FuncElem]) -> "Frame":
        return Frame(self.curve, self.columns + (tuple(column),))

    def times(self, m: Sequence[Sequence[FuncElem]]) -> "Frame":
        return Frame.from_rows(self.curve, matmul(self.rows(), m))


class BadKind(str, Enum):
    POLE = "pole_of_section"
    DEPENDENCE = "dependence_point"


@dataclass(frozen=True)
class BadPoint:
    place: Place
    kind: BadKind
    exceptional: bool = False
    order: int = 0


@dataclass(frozen=True)
class StepRecord:
    """
    One entry of the recurrence log. count is the number of distinct
    dependence points off P of the head frame after this step.
    """

    step: int
    count: int
    budget_used: int
    q_prime: int
    q_dblprime: int
    new_points: int = 0
    carried: int = 0
    orders: Tuple[int, ...] = ()
    choices: Tuple[Tuple[str, int], ...] = ()

    def audit(self, previous: int, genus: int) -> bool:
        return (
            self.count <= previous + genus + self.q_prime + self.q_dblprime
            and self.q_prime + self.q_dblprime <= genus
            and self.budget_used <= genus
        )


@dataclass(frozen=True)
class TrivializationCertificate:
    input_frame: Frame
    output_frame: Frame
    change_of_basis: Matrix
    bad_set: Tuple[BadPoint, ...]
    basepoint: Place
    recurrence_log: Tuple[StepRecord, ...]
    bound: int
    conventions: Tuple[Tuple[str, str], ...] = field(default_factory=conventions)

    @property
    def curve(self) -> CurveSpec:
        return self.output_frame.curve

    @property
    def p(self) -> int:
        return self.output_frame.rank

    @property
    def places(self) -> Set[Place]:
        return {bp.place for bp in self.bad_set} | {self.basepoint}

    @property
    def count(self) -> int:
        return len(self.places)


# -- loci ----------------------------------------------------------------------


@dataclass(frozen=True)
class Locus:
    poles: Divisor
    dep_points: Tuple[Tuple[Place, int], ...]

    @property
    def places(self) -> Tuple[Place, ...]:
        return tuple(q for q, _ in self.dep_points)


def dependence_locus(frame: Frame) -> Locus:
    """
    Poles of the entries, and the places where all entries are finite but the
    columns are dependent, with the minimal order of the maximal minors.
    """
    poles = sup(pole_divisor(u) for u in frame.entries() if not u.is_zero)
    minors = [m for _, m in frame.minors() if not m.is_zero]
    if not minors:
        raise SingularFrame("the frame columns are dependent everywhere")
    pole_places = set(poles.support)
    source = min(minors, key=entry_weight)
    dep: List[Tuple[Place, int]] = []
    for q, n in divisor_of(source).items():
        if n <= 0 or q in pole_places:
            continue
        order = min(ord_at(m, q) for m in minors)
        if order > 0:
            dep.append((q, order))
    return Locus(poles, tuple(dep))


# -- the algorithm steps -----------------------------------------------------


def move_poles(
    frame: Frame, basepoint: Place = INFINITY, policy: SearchPolicy = DEFAULT_SEARCH
) -> Tuple[Frame, Tuple[Section, ...]]:
    """
    Rescale every column by c_i in L(div(psi_i) + kP) so it has poles only at
    P and at most g zeros elsewhere.
    """
    sections: List[Section] = []
    columns = []
    for j, col in enumerate(frame.columns):
        section = relocated_section(frame.curve, column_divisor(col), basepoint, policy)
        columns.append(tuple(section.h * u for u in col))
        sections.append(section)
        logger.debug(f"column {j + 1}: scaling {section.h}, zeros off P {section.zeros_off_p}")
    return Frame(frame.curve, tuple(columns)), tuple(sections)


@dataclass(frozen=True)
class LocalData:
    """Coordinates of the next column near a dependence point z."""

    place: Affine
    order: int
    alphas: Tuple[Jet, ...]
    rows: Tuple[int, ...]
    completion: int


def local_data(head: Frame, psi_next: Sequence[FuncElem], z: Place) -> LocalData:
    """
    Write psi_next = a_1 psi''_1 + ... + a_k psi''_k + a_{k+1} e_l near z and
    return the jets of a_1..a_k to the order d of the dependence.
    """
    if not is_jet_site(z):
        raise IrrationalLocus(z, "local expansion")
    k = head.width
    extended = head.with_column(psi_next)
    ranked = [(ord_at(m, z), rows) for rows, m in extended.minors() if not m.is_zero]
    if not ranked:
        raise SingularFrame("the extended frame is dependent everywhere")
    d = min(o for o, _ in ranked)
    if d <= 0:
        raise PlaceError(f"the columns are independent at {z}; there is nothing to expand")
    chosen = next(rows for o, rows in ranked if o == d)
    head_rows = head.rows()
    completion = None
    for cand in chosen:
        keep = tuple(r for r in chosen if r != cand)
        minor = det(submatrix(head_rows, keep, range(k)))
        if not minor.is_zero and ord_at(minor, z) == 0:
            completion = cand
            break
    if completion is None:
        raise InvariantViolation(
            f"{z} is a dependence point of the head frame and must be carried forward"
        )
    head_jets = {
        (r, j): jet_expand(head.columns[j][r], z, d).coefficients for r in chosen for j in range(k)
    }
    next_jets = {r: jet_expand(psi_next[r], z, d).coefficients for r in chosen}

    def coefficient_matrix(n: int):
        return [
            [head_jets[(r, j)][n] for j in range(k)] + [1 if (n == 0 and r == completion) else 0]
            for r in chosen
        ]

    mats = [coefficient_matrix(n) for n in range(d + 1)]
    sols: List[List] = []
    for n in range(d + 1):
        rhs = []
        for row_idx, r in enumerate(chosen):
            acc = next_jets[r][n]
            for i in range(1, n + 1):
                acc -= sum(mats[i][row_idx][c] * sols[n - i][c] for c in range(k + 1))
            rhs.append(acc)
        sols.append(solve(mats[0], rhs))
    last = [sols[n][k] for n in range(d + 1)]
    if any(c != 0 for c in last[:d]) or last[d] == 0:
        raise InvariantViolation(f"completion coefficient at {z} does not vanish to order {d}")
    alphas = tuple(Jet(z, tuple(sols[n][j] for n in range(d + 1))) for j in range(k))
    return LocalData(z, d, alphas, tuple(chosen), completion)


@dataclass(frozen=True)
class GlobalAlphas:
    alphatilde: Tuple[FuncElem, ...]
    exceptional: FrozenSet[Place]
    vanishing: Optional[Vanishing]
    depth: int


def _match_jet(basis: Sequence[Jet], target: Jet) -> List:
    """Coefficients c with sum c_m basis[m] = target, basis[m] of order exactly m."""
    coeffs: List = []
    for m in range(target.order + 1):
        residual = target.coefficients[m] - sum(
            c * basis[s].coefficients[m] for s, c in enumerate(coeffs)
        )
        pivot = basis[m].coefficients[m]
        if pivot == 0:
            raise InvariantViolation("interpolation basis lost its triangular shape")
        coeffs.append(residual / pivot)
    return coeffs


def global_alphas(
    curve: CurveSpec,
    local: Sequence[LocalData],
    width: int,
    basepoint: Place = INFINITY,
    policy: SearchPolicy = DEFAULT_SEARCH,
) -> GlobalAlphas:
    """
    Global functions whose jets agree with every local alpha at the
    unexceptional points, built as sums of g_i * Q(f g_i).
    """
    zero = FuncElem.zero(curve)
    if not local:
        return GlobalAlphas(tuple([zero] * width), frozenset(), None, 0)
    points = [ld.place for ld in local]
    vanishing = vanishing_function(curve, points, basepoint, policy)
    f = vanishing.f
    depth = max(ld.order for ld in local) + 1
    totals = [zero] * width
    for i, ld in enumerate(local):
        if ld.place in vanishing.exceptional:
            continue
        if all(jet.leading_index() is None for jet in ld.alphas):
            continue
        g_i = selector_function(curve, points, i, basepoint, depth, policy)
        fg = f * g_i
        g_jet = jet_expand(g_i, ld.place, ld.order)
        fg_jet = jet_expand(fg, ld.place, ld.order)
        basis_jets = [g_jet]
        powers = [g_i]
        for _ in range(ld.order):
            basis_jets.append(basis_jets[-1] * fg_jet)
            powers.append(powers[-1] * fg)
        for j, target in enumerate(ld.alphas):
            coeffs = _match_jet(basis_jets, target)
            q = zero
            for c, term in zip(coeffs, powers):
                if c:
                    q = q + term * c
            totals[j] = totals[j] + q
    return GlobalAlphas(tuple(totals), vanishing.exceptional, vanishing, depth)


@dataclass(frozen=True)
class StepResult:
    column: Tuple[FuncElem, ...]
    alphatilde: Tuple[FuncElem, ...]
    h: FuncElem
    exceptional: FrozenSet[Place]
    local: Tuple[LocalData, ...]
    record: StepRecord


def _count_off(locus: Locus, basepoint: Place) -> int:
    return sum(1 for q in locus.places if q != basepoint)


def induction_step(
    head: Frame,
    psi_next: Sequence[FuncElem],
    basepoint: Place = INFINITY,
    policy: SearchPolicy = DEFAULT_SEARCH,
) -> StepResult:
    """Normalize the next column against an already normalized head frame."""
    curve = head.curve
    k = head.width
    head_bad = set(dependence_locus(head).places)
    extended = dependence_locus(head.with_column(psi_next))
    carried = [q for q in extended.places if q in head_bad]
    fresh = [q for q in extended.places if q not in head_bad and q != basepoint]
    for q in fresh:
        if not is_jet_site(q):
            hint = "choose the basepoint P = inf to absorb it" if q == INFINITY else ""
            raise IrrationalLocus(q, f"step {k + 1}", hint)
    if carried:
        logger.info(f"step {k + 1}: {len(carried)} dependence point(s) coincide with the head's")
    local = tuple(local_data(head, psi_next, z) for z in fresh)
    glob = global_alphas(curve, local, k, basepoint, policy)
    psi_prime = list(psi_next)
    for j, a in enumerate(glob.alphatilde):
        if a.is_zero:
            continue
        psi_prime = [u - a * w for u, w in zip(psi_prime, head.column(j))]
    weights: Dict[Place, int] = {
        ld.place: ld.order for ld in local if ld.place not in glob.exceptional
    }
    exact = exact_order_function(curve, weights, basepoint, policy)
    column = tuple(exact.h * u for u in psi_prime)
    count = _count_off(dependence_locus(head.with_column(column)), basepoint)
    choices = [("order", exact.choice)]
    if glob.vanishing is not None:
        choices.insert(0, ("vanishing", glob.vanishing.choice))
    record = StepRecord(
        step=k + 1,
        count=count,
        budget_used=len(glob.exceptional),
        q_prime=len(exact.q_prime),
        q_dblprime=exact.q_dblprime.degree,
        new_points=len(fresh),
        carried=len(carried),
        orders=tuple(ld.order for ld in local),
        choices=tuple(choices),
    )
    logger.info(
        f"step {k + 1}: {len(fresh)} new point(s), exceptional {record.budget_used}, "
        f"q' {record.q_prime}, q'' {record.q_dblprime}, count {count}"
    )
    return StepResult(column, glob.alphatilde, exact.h, glob.exceptional, local, record)


def _check_basepoint(curve: CurveSpec, basepoint: Place) -> None:
    if isinstance(basepoint, Closed):
        raise PlaceError(f"the basepoint must be rational, not {basepoint}")
    if isinstance(basepoint, Affine) and basepoint.y0 * basepoint.y0 != curve.f(basepoint.x0):
        raise PlaceError(f"basepoint {basepoint} does not lie on {curve}")


def trivialize(
    frame: Frame, basepoint: Place = INFINITY, policy: SearchPolicy = DEFAULT_SEARCH
) -> TrivializationCertificate:
    curve = frame.curve
    p = frame.rank
    if not frame.is_square:
        raise SingularFrame(f"expected a square frame, got {frame.rank} x {frame.width}")
    _check_basepoint(curve, basepoint)
    if frame.det().is_zero:
        raise SingularFrame("the frame determinant vanishes identically")
    logger.info(f"trivializing a rank {p} frame on {curve} (g = {curve.genus}) at P = {basepoint}")

    moved, sections = move_poles(frame, basepoint, policy)
    zero = FuncElem.zero(curve)
    m_columns: List[List[FuncElem]] = []
    first = [zero] * p
    first[0] = sections[0].h
    m_columns.append(first)

    head = Frame(curve, (moved.columns[0],))
    log = [
        StepRecord(
            step=1,
            count=_count_off(dependence_locus(head), basepoint),
            budget_used=sections[0].zeros_off_p.degree,
            q_prime=0,
            q_dblprime=0,
            choices=(("section", sections[0].choice),),
        )
    ]
    exceptional: Set[Place] = set()
    for k in range(1, p):
        step = induction_step(head, moved.columns[k], basepoint, policy)
        col = [zero] * p
        col[k] = sections[k].h
        for j, a in enumerate(step.alphatilde):
            if a.is_zero:
                continue
            col = [c - a * mj for c, mj in zip(col, m_columns[j])]
        m_columns.append([step.h * c for c in col])
        head = head.with_column(step.column)
        exceptional |= step.exceptional
        log.append(step.record)

    locus = dependence_locus(head)
    bad: List[BadPoint] = [
        BadPoint(q, BadKind.DEPENDENCE, q in exceptional, order) for q, order in locus.dep_points
    ]
    bad.extend(BadPoint(q, BadKind.POLE, False, n) for q, n in locus.poles.items())
    cert = TrivializationCertificate(
        input_frame=frame,
        output_frame=head,
        change_of_basis=transpose(m_columns),
        bad_set=tuple(bad),
        basepoint=basepoint,
        recurrence_log=tuple(log),
        bound=bad_point_bound(p, curve.genus),
    )
    logger.info(f"bad set has {cert.count} place(s) including P; bound {cert.bound}")
    return cert


# -- verification ---------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    checks: Tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> Tuple[Check, ...]:
        return tuple(c for c in self.checks if not c.passed)


def verify_certificate(
    cert: TrivializationCertificate, original: Optional[Frame] = None
) -> VerificationReport:
    """Re-derive every claim of a certificate from the frames alone."""
    original = original if original is not None else cert.input_frame
    curve = original.curve
    g, p = curve.genus, original.rank
    basepoint = cert.basepoint
    checks: List[Check] = []

    try:
        product = original.times(cert.change_of_basis)
        det_m = det(cert.change_of_basis)
        if det_m.is_zero:
            checks.append(Check("span", False, "change of basis is singular"))
        elif product != cert.output_frame:
            checks.append(Check("span", False, "original frame times M differs from the output"))
        else:
            checks.append(Check("span", True, "output = input * M, det M != 0"))
    except Exception as e:
        checks.append(Check("span", False, f"could not multiply: {e}"))

    try:
        locus = dependence_locus(cert.output_frame)
    except Exception as e:
        checks.append(Check("poles", False, f"no locus: {e}"))
        checks.append(Check("locus", False, f"no locus: {e}"))
        checks.append(Check("bound", False, f"no locus: {e}"))
        checks.append(Check("recurrence", False, f"no locus: {e}"))
    else:
        pole_places = set(locus.poles.support)
        stray = pole_places - {basepoint}
        checks.append(
            Check(
                "poles",
                not stray,
                "poles only at P" if not stray else f"poles at {', '.join(map(str, stray))}",
            )
        )
        actual = {q: n for q, n in locus.dep_points if q != basepoint}
        claimed = {
            bp.place: bp.order
            for bp in cert.bad_set
            if bp.kind == BadKind.DEPENDENCE and bp.place != basepoint
        }
        claimed_poles = {bp.place for bp in cert.bad_set if bp.kind == BadKind.POLE}
        if actual != claimed:
            detail = f"recomputed {len(actual)} dependence point(s), certificate lists {len(claimed)}"
            checks.append(Check("locus", False, detail))
        elif claimed_poles != pole_places:
            checks.append(Check("locus", False, "pole entries differ from the recomputed poles"))
        else:
            checks.append(Check("locus", True, f"{len(actual)} dependence point(s) off P"))

        recount = len(set(actual) | pole_places | {basepoint})
        bound = bad_point_bound(p, g)
        ok = cert.bound == bound and cert.count <= bound and recount <= bound
        checks.append(Check("bound", ok, f"{recount} place(s) including P, bound {bound}"))

        previous = 0
        audit_ok = len(cert.recurrence_log) == p
        for record in cert.recurrence_log:
            audit_ok = audit_ok and record.audit(previous, g)
            previous = record.count
        if cert.recurrence_log:
            audit_ok = audit_ok and cert.recurrence_log[-1].count == len(actual)
        checks.append(Check("recurrence", audit_ok, f"{len(cert.recurrence_log)} step(s) audited"))

    checks.append(
        Check(
            "specialization",
            bad_point_bound(2, g) == 3 * g + 1,
            f"rank 2 bound {bad_point_bound(2, g)} = 3g + 1",
        )
    )
    return VerificationReport(tuple(checks))
