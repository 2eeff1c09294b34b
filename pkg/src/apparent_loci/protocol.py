"""
JSON documents exchanged with the command line: instance files, certificates,
system reports and fuzz summaries.

Rationals travel as strings ("3/2"), functions as {"a": ..., "b": ...} for
a + b*y with a and b rational functions of x, places as tagged objects,
frames as lists of columns and square matrices as lists of rows.
"""

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Type, TypeVar, Union

from pydantic import BaseModel, Field, ValidationError

from apparent_loci.errors import InputError
from apparent_loci.kernel import CurveSpec, FuncElem
from apparent_loci.linalg import Matrix
from apparent_loci.notation import (
    format_rational,
    parse_function,
    parse_function_expr,
    parse_poly,
    parse_rational,
    place_kind,
)
from apparent_loci.places import INFINITY, Affine, Closed, Place, affine_place, closed_place
from apparent_loci.trivializer import (
    BadKind,
    BadPoint,
    Frame,
    StepRecord,
    TrivializationCertificate,
    VerificationReport,
)

Coefficient = Union[int, str]
ModelT = TypeVar("ModelT", bound=BaseModel)


class FuncElemModel(BaseModel):
    """The function a + b*y."""

    a: str = Field("0", description="Rational function of x, e.g. '(x^2 + 1)/(x - 2)'")
    b: str = Field("0", description="Coefficient of y, a rational function of x")


class PlaceModel(BaseModel):
    kind: Literal["affine", "infinity", "closed"] = Field(
        ..., description="Rational affine point, the point at infinity, or a closed place"
    )
    x: Optional[str] = Field(None, description="x-coordinate of an affine place")
    y: Optional[str] = Field(None, description="y-coordinate of an affine place")
    minpoly: Optional[str] = Field(None, description="Irreducible fibre polynomial of a closed place")
    branch: Optional[str] = Field(None, description="y modulo minpoly on one branch of a split fibre")
    degree: int = Field(1, description="Degree of the place")
    ramified: bool = Field(False, description="True where y vanishes or at infinity")


class RRInput(BaseModel):
    """Input of the `rr` command."""

    curve: List[Coefficient] = Field(..., description="Coefficients of f, constant term first")
    divisor: str = Field(..., description="Divisor, e.g. '3*inf' or '2*(0,1) - (2,3)'")


class RROutput(BaseModel):
    curve: str
    divisor: str
    degree: int
    dimension: int
    basis: List[FuncElemModel]


class DivInput(BaseModel):
    """Input of the `div` command; functions given as parts and/or as expressions in x and y."""

    curve: List[Coefficient] = Field(..., description="Coefficients of f, constant term first")
    functions: List[FuncElemModel] = Field(default_factory=list)
    expressions: List[str] = Field(default_factory=list, description="e.g. '(y - 1)/x'")


class DivEntry(BaseModel):
    function: FuncElemModel
    divisor: str
    degree: int


class DivOutput(BaseModel):
    curve: str
    entries: List[DivEntry]


class TrivializeInput(BaseModel):
    """An instance of the trivialization problem."""

    name: str = Field("instance", description="Name used for output files")
    curve: List[Coefficient] = Field(..., description="Coefficients of f, constant term first")
    p: int = Field(..., description="Rank of the frame")
    frame: List[List[FuncElemModel]] = Field(..., description="The p columns of the frame")
    basepoint: PlaceModel = Field(
        default_factory=lambda: PlaceModel(kind="infinity"), description="The basepoint P"
    )
    dry_run: bool = Field(False, description="If True, nothing is written to disk")


class BadPointModel(BaseModel):
    place: PlaceModel
    kind: Literal["pole_of_section", "dependence_point"]
    exceptional: bool = False
    order: int = 0


class StepRecordModel(BaseModel):
    step: int
    count: int
    budget_used: int
    q_prime: int
    q_dblprime: int
    new_points: int = 0
    carried: int = 0
    orders: List[int] = Field(default_factory=list)
    choices: Dict[str, int] = Field(default_factory=dict, description="Candidate index per selection")


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class CertificateModel(BaseModel):
    """A trivialization certificate together with its verification results."""

    name: str
    curve: List[str]
    genus: int
    p: int
    basepoint: PlaceModel
    input_frame: List[List[FuncElemModel]] = Field(..., description="Columns of the input frame")
    output_frame: List[List[FuncElemModel]] = Field(..., description="Columns of the output frame")
    change_of_basis: List[List[FuncElemModel]] = Field(..., description="Rows of M")
    bad_set: List[BadPointModel]
    recurrence_log: List[StepRecordModel]
    bound: int
    count: int
    conventions: Dict[str, str] = Field(default_factory=dict)
    checks: List[CheckModel] = Field(default_factory=list)
    passed: bool = False


class SystemInput(BaseModel):
    """A system d(alpha)/dx = A alpha written in a certificate's input frame."""

    curve: List[Coefficient]
    matrix: List[List[FuncElemModel]] = Field(..., description="Rows of A")
    declared: Optional[List[PlaceModel]] = Field(
        None, description="Declared singular places; defaults to the poles of A"
    )


class SystemOutput(BaseModel):
    curve: str
    matrix: List[List[FuncElemModel]]
    singular: List[PlaceModel]
    allowed: List[PlaceModel]
    violations: List[PlaceModel]
    contained: bool
    unchecked_claims: List[str] = Field(default_factory=list)


class FuzzConfig(BaseModel):
    curves: List[List[Coefficient]] = Field(..., description="Curves as coefficient lists of f")
    ps: List[int] = Field(..., description="Ranks to generate")
    count: int = Field(..., description="Instances per (curve, p)")
    seed: int = Field(1, description="Seed; APPARENT_LOCI_SEED overrides it")
    workers: Optional[int] = Field(None, description="Worker processes; defaults to settings")
    basepoint: PlaceModel = Field(default_factory=lambda: PlaceModel(kind="infinity"))


class FuzzFailure(BaseModel):
    curve: str
    p: int
    index: int
    reason: str


class FuzzRow(BaseModel):
    curve: str
    genus: int
    p: int
    instances: int
    max_count: int
    bound: int
    failures: int
    refused: int
    containment_failures: int


class FuzzSummary(BaseModel):
    seed: int
    rows: List[FuzzRow]
    failures: List[FuzzFailure] = Field(default_factory=list)


# -- reading -----------------------------------------------------------------


def read_document(path: Union[str, Path], model: Type[ModelT]) -> ModelT:
    """Load and validate a JSON document; syntax errors carry line and column."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}")
    return parse_document(text, model, source=str(path))


def parse_document(text: str, model: Type[ModelT], source: str = "<input>") -> ModelT:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}: invalid JSON: {e.msg}", line=e.lineno, column=e.colno)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise InputError(f"{source}: {e}")


# -- domain conversion -------------------------------------------------------


def curve_from_model(coeffs: Sequence[Coefficient]) -> CurveSpec:
    return CurveSpec([parse_rational(c) for c in coeffs])


def curve_to_model(curve: CurveSpec) -> List[str]:
    return [format_rational(c) for c in curve.f_coeffs]


def func_from_model(curve: CurveSpec, model: FuncElemModel) -> FuncElem:
    return parse_function(curve, model.a, model.b)


def func_to_model(u: FuncElem) -> FuncElemModel:
    return FuncElemModel(a=str(u.a), b=str(u.b))


def funcs_from_expressions(curve: CurveSpec, expressions: Sequence[str]) -> List[FuncElem]:
    return [parse_function_expr(curve, text) for text in expressions]


def place_from_model(curve: CurveSpec, model: PlaceModel) -> Place:
    if model.kind == "infinity":
        return INFINITY
    if model.kind == "affine":
        if model.x is None or model.y is None:
            raise InputError("an affine place needs both x and y")
        return affine_place(curve, parse_rational(model.x), parse_rational(model.y))
    if model.minpoly is None:
        raise InputError("a closed place needs its minpoly")
    branch = parse_poly(model.branch) if model.branch else None
    return closed_place(curve, parse_poly(model.minpoly), branch)


def place_to_model(place: Place) -> PlaceModel:
    kind = place_kind(place)
    if isinstance(place, Affine):
        return PlaceModel(kind=kind, x=format_rational(place.x0), y=format_rational(place.y0), ramified=place.ramified)
    if isinstance(place, Closed):
        return PlaceModel(
            kind=kind,
            minpoly=str(place.minpoly),
            branch=str(place.branch) if place.branch is not None else None,
            degree=place.degree,
            ramified=place.ramified,
        )
    return PlaceModel(kind=kind, ramified=True)


def matrix_from_model(curve: CurveSpec, rows: Sequence[Sequence[FuncElemModel]]) -> Matrix:
    width = len(rows[0]) if rows else 0
    if not rows or any(len(row) != width for row in rows):
        raise InputError("matrix rows must be non-empty and of equal length")
    return tuple(tuple(func_from_model(curve, u) for u in row) for row in rows)


def matrix_to_model(m: Matrix) -> List[List[FuncElemModel]]:
    return [[func_to_model(u) for u in row] for row in m]


def frame_from_model(curve: CurveSpec, columns: Sequence[Sequence[FuncElemModel]]) -> Frame:
    return Frame(curve, matrix_from_model(curve, columns))


def frame_to_model(frame: Frame) -> List[List[FuncElemModel]]:
    return matrix_to_model(frame.columns)


def instance_frame(instance: TrivializeInput) -> Frame:
    curve = curve_from_model(instance.curve)
    frame = frame_from_model(curve, instance.frame)
    if frame.rank != instance.p or frame.width != instance.p:
        raise InputError(f"expected {instance.p} columns of length {instance.p}, got {frame.width} of length {frame.rank}")
    return frame


def certificate_to_model(
    cert: TrivializationCertificate,
    report: Optional[VerificationReport] = None,
    name: str = "instance",
) -> CertificateModel:
    checks = [CheckModel(name=c.name, passed=c.passed, detail=c.detail) for c in report.checks] if report else []
    return CertificateModel(
        name=name,
        curve=curve_to_model(cert.curve),
        genus=cert.curve.genus,
        p=cert.p,
        basepoint=place_to_model(cert.basepoint),
        input_frame=frame_to_model(cert.input_frame),
        output_frame=frame_to_model(cert.output_frame),
        change_of_basis=matrix_to_model(cert.change_of_basis),
        bad_set=[
            BadPointModel(
                place=place_to_model(bp.place), kind=bp.kind.value, exceptional=bp.exceptional, order=bp.order
            )
            for bp in cert.bad_set
        ],
        recurrence_log=[
            StepRecordModel(
                step=r.step,
                count=r.count,
                budget_used=r.budget_used,
                q_prime=r.q_prime,
                q_dblprime=r.q_dblprime,
                new_points=r.new_points,
                carried=r.carried,
                orders=list(r.orders),
                choices=dict(r.choices),
            )
            for r in cert.recurrence_log
        ],
        bound=cert.bound,
        count=cert.count,
        conventions=dict(cert.conventions),
        checks=checks,
        passed=bool(report and report.passed),
    )


def certificate_from_model(model: CertificateModel) -> TrivializationCertificate:
    curve = curve_from_model(model.curve)
    return TrivializationCertificate(
        input_frame=frame_from_model(curve, model.input_frame),
        output_frame=frame_from_model(curve, model.output_frame),
        change_of_basis=matrix_from_model(curve, model.change_of_basis),
        bad_set=tuple(
            BadPoint(place_from_model(curve, bp.place), BadKind(bp.kind), bp.exceptional, bp.order)
            for bp in model.bad_set
        ),
        basepoint=place_from_model(curve, model.basepoint),
        recurrence_log=tuple(
            StepRecord(
                step=r.step,
                count=r.count,
                budget_used=r.budget_used,
                q_prime=r.q_prime,
                q_dblprime=r.q_dblprime,
                new_points=r.new_points,
                carried=r.carried,
                orders=tuple(r.orders),
                choices=tuple(r.choices.items()),
            )
            for r in model.recurrence_log
        ),
        bound=model.bound,
        conventions=tuple(model.conventions.items()),
    )
