"""
Riemann-Roch spaces L(D) = {h : div(h) + D >= 0} on y^2 = f(x) and the
special functions built from them.

Elements are sought as h = (u(x) + v(x) y) / d(x). The denominator d clears
the affine part of D, the degrees of u and v are bounded by the multiplicity
at infinity, and every affine condition becomes a congruence of u and v
modulo a power of the fibre polynomial. The resulting rational system is
solved fraction-free.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from apparent_loci.errors import PlaceError, SearchExhausted
from apparent_loci.kernel import CurveSpec, FuncElem, Poly, RatFunc
from apparent_loci.linalg import nullspace
from apparent_loci.places import (
    INFINITY,
    Affine,
    Closed,
    Divisor,
    Infinity,
    Place,
    divisor_of,
    hensel_branch,
    is_jet_site,
    ord_at,
)

logger = logging.getLogger("apparent_loci.riemann_roch")


@dataclass(frozen=True)
class SearchPolicy:
    """Bounds of the deterministic search over L-space elements."""

    coefficient_bound: int = 2
    candidate_limit: int = 24

    @classmethod
    def from_config(cls, config: Mapping) -> "SearchPolicy":
        search = (config or {}).get("search", {}) or {}
        return cls(
            coefficient_bound=int(search.get("coefficient_bound", cls.coefficient_bound)),
            candidate_limit=int(search.get("candidate_limit", cls.candidate_limit)),
        )


DEFAULT_SEARCH = SearchPolicy()

ENUMERATION_CONVENTION = (
    "basis elements in increasing pole order at the basepoint, then combinations "
    "of 2, 3, ... basis elements with leading coefficient 1 and further "
    "coefficients ordered 1, -1, 2, -2, ... up to the coefficient bound"
)


# -- the basis ---------------------------------------------------------------


@dataclass
class _Fibre:
    phi: Poly
    ramified: bool
    conorm: int = 0
    branches: Dict[Poly, int] = field(default_factory=dict)


def _group_fibres(curve: CurveSpec, divisor: Divisor) -> List[_Fibre]:
    fibres: Dict[Poly, _Fibre] = {}
    for place, n in divisor.items():
        if isinstance(place, Infinity):
            continue
        phi = place.fibre
        fib = fibres.get(phi)
        if fib is None:
            fib = fibres[phi] = _Fibre(phi, place.ramified)
        if place.ramified:
            fib.conorm += n
        elif isinstance(place, Affine):
            key = Poly.constant(place.y0)
            fib.branches[key] = fib.branches.get(key, 0) + n
        elif place.branch is None:
            fib.conorm += n
        else:
            fib.branches[place.branch] = fib.branches.get(place.branch, 0) + n
    for fib in fibres.values():
        for r in list(fib.branches):
            fib.branches.setdefault((-r) % fib.phi, 0)
    return sorted(fibres.values(), key=lambda fb: (fb.phi.degree, fb.phi.coeffs))


def _ceil_half(n: int) -> int:
    return -((-n) // 2)


@dataclass(frozen=True)
class _Condition:
    """u * cu + v * cv == 0 mod phi^power, with cu/cv None meaning the part is absent."""

    modulus: Poly
    u_factor: Optional[Poly]
    v_factor: Optional[Poly]


def _fibre_plan(curve: CurveSpec, fib: _Fibre) -> Tuple[int, List[_Condition]]:
    """Exponent of phi in d(x) and the congruences u, v must satisfy."""
    phi = fib.phi
    one = Poly.constant(1)
    conditions: List[_Condition] = []
    if fib.ramified:
        n = fib.conorm
        e = _ceil_half(max(n, 0))
        need = 2 * e - n
        cu, cv = _ceil_half(need), _ceil_half(need - 1)
        if cu > 0:
            conditions.append(_Condition(phi**cu, one, None))
        if cv > 0:
            conditions.append(_Condition(phi**cv, None, one))
        return e, conditions
    if not fib.branches:
        e = max(fib.conorm, 0)
        need = e - fib.conorm
        if need > 0:
            conditions.append(_Condition(phi**need, one, None))
            conditions.append(_Condition(phi**need, None, one))
        return e, conditions
    totals = {r: fib.conorm + n for r, n in fib.branches.items()}
    e = max(0, max(totals.values()))
    for r, total in sorted(totals.items(), key=lambda kv: kv[0].coeffs):
        need = e - total
        if need > 0:
            lift = hensel_branch(curve, phi, r, need)
            conditions.append(_Condition(phi**need, one, lift))
    return e, conditions


def _unknowns(curve: CurveSpec, budget: int) -> List[Tuple[str, int]]:
    """Monomials x^i (in u) and x^j y (in v) with pole order <= budget, by pole order."""
    g = curve.genus
    out = []
    for i in range(budget // 2 + 1):
        out.append((2 * i, "u", i))
    top_v = (budget - (2 * g + 1)) // 2
    for j in range(top_v + 1):
        out.append((2 * j + 2 * g + 1, "v", j))
    out.sort()
    return [(kind, k) for _, kind, k in out]


def rr_basis(curve: CurveSpec, divisor: Divisor) -> List[FuncElem]:
    """
    Basis of L(D), ordered by increasing pole order at infinity
    (distinct leading monomials).
    """
    if divisor.degree < 0:
        return []
    d = Poly.constant(1)
    conditions: List[_Condition] = []
    for fib in _group_fibres(curve, divisor):
        e, conds = _fibre_plan(curve, fib)
        if e:
            d = d * fib.phi**e
        conditions.extend(conds)
    budget = divisor[INFINITY] + 2 * d.degree
    if budget < 0:
        return []
    unknowns = _unknowns(curve, budget)
    rows: List[List[Fraction]] = []
    for cond in conditions:
        rows.extend(_condition_rows(cond, unknowns))
    vectors = nullspace(rows, len(unknowns))
    basis = []
    drf = RatFunc(d)
    for vec in vectors:
        u = [Fraction(0)] * (budget // 2 + 1)
        v = [Fraction(0)] * (max(budget, 0) // 2 + 1)
        for c, (kind, k) in zip(vec, unknowns):
            if c:
                (u if kind == "u" else v)[k] = c
        h = FuncElem(RatFunc(Poly(u)) / drf, RatFunc(Poly(v)) / drf, curve)
        basis.append(h)
    logger.debug(f"L({divisor}) has dimension {len(basis)}")
    return basis


def _condition_rows(cond: _Condition, unknowns: Sequence[Tuple[str, int]]) -> List[List[Fraction]]:
    modulus = cond.modulus
    width = modulus.degree
    x = Poly.x()
    residues: List[Poly] = []
    power = Poly.constant(1) % modulus
    powers: Dict[int, Poly] = {0: power}
    top = max(k for _, k in unknowns) if unknowns else 0
    for k in range(1, top + 1):
        powers[k] = (powers[k - 1] * x) % modulus
    for kind, k in unknowns:
        factor = cond.u_factor if kind == "u" else cond.v_factor
        if factor is None:
            residues.append(Poly())
        else:
            residues.append((powers[k] * factor) % modulus)
    return [[res.coeff(c) for res in residues] for c in range(width)]


def rr_dimension(curve: CurveSpec, divisor: Divisor) -> int:
    return len(rr_basis(curve, divisor))


# -- deterministic candidates -------------------------------------------------


def _coefficient_values(bound: int) -> List[int]:
    out = []
    for k in range(1, bound + 1):
        out.extend([k, -k])
    return out


def enumerate_candidates(
    basis: Sequence[FuncElem], policy: SearchPolicy = DEFAULT_SEARCH
) -> Iterator[Tuple[Tuple[int, ...], FuncElem]]:
    """Nonzero elements of span(basis) with their coefficient vectors, in a fixed order."""
    n = len(basis)
    values = _coefficient_values(policy.coefficient_bound)
    emitted = 0
    for size in range(1, n + 1):
        for idx in combinations(range(n), size):
            for rest in product(values, repeat=size - 1):
                coeffs = [0] * n
                coeffs[idx[0]] = 1
                for i, c in zip(idx[1:], rest):
                    coeffs[i] = c
                elem = basis[idx[0]]
                for i, c in zip(idx[1:], rest):
                    elem = elem + basis[i] * c
                yield tuple(coeffs), elem
                emitted += 1
                if emitted >= policy.candidate_limit:
                    return


def _best(
    basis: Sequence[FuncElem],
    score: Callable[[FuncElem], tuple],
    policy: SearchPolicy,
    ideal: Optional[tuple] = None,
) -> Tuple[int, Tuple[int, ...], FuncElem]:
    best = None
    for index, (coeffs, elem) in enumerate(enumerate_candidates(basis, policy)):
        s = score(elem)
        if best is None or s < best[0]:
            best = (s, index, coeffs, elem)
        if ideal is not None and s <= ideal:
            break
    if best is None:
        raise SearchExhausted("empty L-space, nothing to select from")
    return best[1], best[2], best[3]


def _require_basepoint(place: Place) -> None:
    if isinstance(place, Closed):
        raise PlaceError(f"the basepoint must be a rational place, not {place}")


# -- special constructions ------------------------------------------------------


@dataclass(frozen=True)
class Section:
    """Chosen element h of L(D + kP) and its zero divisor away from P."""

    h: FuncElem
    zeros_off_p: Divisor
    k: int
    choice: int


def zeros_off(h: FuncElem, divisor: Divisor, basepoint: Place) -> Divisor:
    """Effective divisor div(h) + D away from the basepoint."""
    total = divisor_of(h) + divisor
    return total.restrict(lambda q: q != basepoint).positive_part()


def relocated_section(
    curve: CurveSpec,
    divisor: Divisor,
    basepoint: Place = INFINITY,
    policy: SearchPolicy = DEFAULT_SEARCH,
    score: Optional[Callable[[FuncElem], tuple]] = None,
    ideal: Optional[tuple] = None,
) -> Section:
    """
    A nonzero section of L(D + kP) with k = g - deg D, so deg(D + kP) = g and
    the section has at most g zeros off P.
    """
    _require_basepoint(basepoint)
    k = curve.genus - divisor.degree
    target = divisor + Divisor.point(basepoint, k)
    basis = rr_basis(curve, target)
    if not basis:
        raise SearchExhausted(f"L({target}) is empty although its degree is g")

    def default_score(h: FuncElem) -> tuple:
        zeros = zeros_off(h, target, basepoint)
        awkward = sum(n for q, n in zeros.items() if not is_jet_site(q))
        return (awkward, zeros.degree)

    if score is None:
        score, ideal = default_score, (0, 0)
    index, _, h = _best(basis, score, policy, ideal=ideal)
    zeros = zeros_off(h, target, basepoint)
    logger.debug(f"section of L({target}): candidate {index}, zeros off P: {zeros}")
    return Section(h, zeros, k, index)


prop2_section = relocated_section


@dataclass(frozen=True)
class Vanishing:
    f: FuncElem
    exceptional: frozenset
    choice: int


def vanishing_function(
    curve: CurveSpec,
    points: Sequence[Place],
    basepoint: Place = INFINITY,
    policy: SearchPolicy = DEFAULT_SEARCH,
) -> Vanishing:
    """
    f vanishing at every listed point with poles only at P; the points where
    it vanishes to order >= 2 are exceptional (at most g of them).
    """
    if not points:
        return Vanishing(FuncElem.one(curve), frozenset(), 0)
    _check_points(points, basepoint)
    demand = -Divisor.sum_of(points)

    def exceptional_count(h: FuncElem) -> tuple:
        return (sum(1 for z in points if ord_at(h, z) >= 2),)

    section = relocated_section(
        curve, demand, basepoint, policy, score=exceptional_count, ideal=(0,)
    )
    f = section.h
    exceptional = frozenset(z for z in points if ord_at(f, z) >= 2)
    return Vanishing(f, exceptional, section.choice)


def selector_function(
    curve: CurveSpec,
    points: Sequence[Place],
    i: int,
    basepoint: Place = INFINITY,
    d: int = 1,
    policy: SearchPolicy = DEFAULT_SEARCH,
) -> FuncElem:
    """Function nonzero at points[i], of order >= d at the other points, poles only at P."""
    if d < 1:
        raise ValueError("selector depth must be at least 1")
    _check_points(points, basepoint)
    target = points[i]
    others = Divisor.sum_of(p for j, p in enumerate(points) if j != i) * d
    g = curve.genus
    base = d * (len(points) - 1)
    for k in range(base + g, base + 2 * g + 1):
        space = Divisor.point(basepoint, k) - others
        for coeffs, elem in enumerate_candidates(rr_basis(curve, space), policy):
            if ord_at(elem, target) == 0:
                logger.debug(f"selector for {target} at level {d}: L({space}), coefficients {coeffs}")
                return elem
    raise SearchExhausted(
        f"no function of order >= {d} at the other points is nonzero at {target}"
    )


@dataclass(frozen=True)
class ExactOrder:
    h: FuncElem
    q_prime: frozenset
    q_dblprime: Divisor
    k: int
    choice: int


def exact_order_function(
    curve: CurveSpec,
    weights: Mapping[Place, int],
    basepoint: Place = INFINITY,
    policy: SearchPolicy = DEFAULT_SEARCH,
) -> ExactOrder:
    """
    h in L(sum d_i z_i + kP), k = g - sum d_i, with a pole of order exactly
    d_i at as many z_i as possible. q_prime holds the points where the pole
    order falls short, q_dblprime the zeros of h off the keyed points and P.
    """
    if not weights:
        return ExactOrder(FuncElem.one(curve), frozenset(), Divisor(), 0, 0)
    _check_points(list(weights), basepoint)
    divisor = Divisor(dict(weights))
    k = curve.genus - divisor.degree
    target = divisor + Divisor.point(basepoint, k)
    basis = rr_basis(curve, target)
    if not basis:
        raise SearchExhausted(f"L({target}) is empty although its degree is g")

    def shortfall(h: FuncElem) -> tuple:
        return (sum(1 for z, n in weights.items() if ord_at(h, z) != -n),)

    index, _, h = _best(basis, shortfall, policy, ideal=(0,))
    q_prime = frozenset(z for z, n in weights.items() if ord_at(h, z) != -n)
    keyed = set(weights)
    q_dblprime = (
        divisor_of(h)
        .restrict(lambda q: q not in keyed and q != basepoint)
        .positive_part()
    )
    return ExactOrder(h, q_prime, q_dblprime, k, index)


def _check_points(points: Sequence[Place], basepoint: Place) -> None:
    _require_basepoint(basepoint)
    if len(set(points)) != len(points):
        raise PlaceError("points must be distinct")
    for z in points:
        if z == basepoint:
            raise PlaceError(f"{z} coincides with the basepoint")
        if not is_jet_site(z):
            raise PlaceError(f"{z} is not a rational unramified affine place")
