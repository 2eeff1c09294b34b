"""
Places of the curve, valuations, jets and divisors of functions.

Valuations are computed from the representation u = (A + B*y)/D without power
series. Over a fibre phi of x:

* phi | f (ramified): ord = min(2 v(A), 2 v(B) + 1) - 2 v(D)
* otherwise, with c = min(v(A), v(B)) and A', B' the cofactors after removing
  phi^c, the norm A'^2 - B'^2 f vanishes to order m on at most one branch,
  the one with y = -A'/B' mod phi. That branch gets c + m - v(D), the other
  c - v(D).

At infinity ord(x) = -2, ord(y) = -(2g + 1).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from apparent_loci.errors import PlaceError, PoleError, ZeroElementError
from apparent_loci.kernel import (
    CurveSpec,
    FuncElem,
    Poly,
    irreducible_factors,
    is_irreducible,
    rational_sqrt,
)

logger = logging.getLogger("apparent_loci.places")


@dataclass(frozen=True)
class Affine:
    x0: Fraction
    y0: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x0", Fraction(self.x0))
        object.__setattr__(self, "y0", Fraction(self.y0))

    @property
    def ramified(self) -> bool:
        return self.y0 == 0

    @property
    def degree(self) -> int:
        return 1

    @property
    def fibre(self) -> Poly:
        return Poly.linear_root(self.x0)

    def sort_key(self) -> tuple:
        return (0, 1, (self.x0,), (self.y0,))

    def __str__(self) -> str:
        return f"({self.x0},{self.y0})"


@dataclass(frozen=True)
class Infinity:
    @property
    def ramified(self) -> bool:
        return True

    @property
    def degree(self) -> int:
        return 1

    def sort_key(self) -> tuple:
        return (2, 0, (), ())

    def __str__(self) -> str:
        return "inf"


@dataclass(frozen=True)
class Closed:
    """
    A Galois orbit of non-rational points over the irreducible fibre minpoly(x) = 0.

    branch is None for a whole fibre (ramified, inert, or both conjugate
    branches with equal multiplicity); otherwise it is y mod minpoly on one
    of the two branches of a split fibre.
    """

    minpoly: Poly
    branch: Optional[Poly]
    degree: int
    ramified: bool = False

    @property
    def fibre(self) -> Poly:
        return self.minpoly

    def sort_key(self) -> tuple:
        branch = self.branch.coeffs if self.branch is not None else ()
        return (1, self.minpoly.degree, self.minpoly.coeffs, branch)

    def __str__(self) -> str:
        if self.branch is None:
            return f"closed[{self.minpoly}]"
        return f"closed[{self.minpoly}; y={self.branch}]"


Place = Union[Affine, Infinity, Closed]

INFINITY = Infinity()


def is_jet_site(place: Place) -> bool:
    """Rational unramified affine places, the only places jets are taken at."""
    return isinstance(place, Affine) and not place.ramified


def affine_place(curve: CurveSpec, x0, y0) -> Affine:
    x0, y0 = Fraction(x0), Fraction(y0)
    if y0 * y0 != curve.f(x0):
        raise PlaceError(f"({x0},{y0}) does not lie on {curve}")
    return Affine(x0, y0)


def closed_place(curve: CurveSpec, minpoly: Poly, branch: Optional[Poly] = None) -> Closed:
    """Validated closed place over an irreducible fibre of degree >= 2."""
    phi = minpoly.monic()
    if phi.degree < 1 or not is_irreducible(phi):
        raise PlaceError(f"{minpoly} is not irreducible over Q")
    ramified = (curve.f % phi).is_zero
    if ramified:
        if branch is not None:
            raise PlaceError(f"ramified fibre {phi} has a single place, no branch")
        if phi.degree == 1:
            raise PlaceError(f"fibre {phi} is a rational ramified point; use (x0,0)")
        return Closed(phi, None, phi.degree, True)
    if branch is None:
        if phi.degree == 1 and rational_sqrt(curve.f(-phi.coeffs[0])) is not None:
            raise PlaceError(f"fibre {phi} splits into rational points")
        return Closed(phi, None, 2 * phi.degree)
    if phi.degree == 1:
        raise PlaceError("rational fibres are written as (x0,y0)")
    r = branch % phi
    if not ((r * r - curve.f) % phi).is_zero:
        raise PlaceError(f"y = {branch} is not a branch of {curve} over {phi}")
    return Closed(phi, r, phi.degree)


class Divisor:
    """
    Finite formal sum of places. Zero multiplicities are dropped and closed
    branch pairs with equal multiplicity collapse to their whole fibre.
    """

    __slots__ = ("_items",)

    def __init__(self, mults: Optional[Mapping[Place, int]] = None):
        merged: Dict[Place, int] = {}
        for place, n in (mults or {}).items():
            if n:
                merged[place] = merged.get(place, 0) + int(n)
        merged = _collapse_branches(merged)
        self._items: Tuple[Tuple[Place, int], ...] = tuple(
            sorted(((p, n) for p, n in merged.items() if n), key=lambda kv: kv[0].sort_key())
        )

    @classmethod
    def point(cls, place: Place, n: int = 1) -> "Divisor":
        return cls({place: n})

    @classmethod
    def sum_of(cls, places: Iterable[Place]) -> "Divisor":
        mults: Dict[Place, int] = {}
        for place in places:
            mults[place] = mults.get(place, 0) + 1
        return cls(mults)

    def items(self) -> Tuple[Tuple[Place, int], ...]:
        return self._items

    def as_dict(self) -> Dict[Place, int]:
        return dict(self._items)

    def __getitem__(self, place: Place) -> int:
        for p, n in self._items:
            if p == place:
                return n
        return 0

    @property
    def support(self) -> Tuple[Place, ...]:
        return tuple(p for p, _ in self._items)

    @property
    def degree(self) -> int:
        return sum(n * p.degree for p, n in self._items)

    @property
    def is_zero(self) -> bool:
        return not self._items

    def __add__(self, other: "Divisor") -> "Divisor":
        mults = self.as_dict()
        for p, n in other._items:
            mults[p] = mults.get(p, 0) + n
        return Divisor(mults)

    def __neg__(self) -> "Divisor":
        return Divisor({p: -n for p, n in self._items})

    def __sub__(self, other: "Divisor") -> "Divisor":
        return self + (-other)

    def __mul__(self, k: int) -> "Divisor":
        return Divisor({p: k * n for p, n in self._items})

    __rmul__ = __mul__

    def positive_part(self) -> "Divisor":
        return Divisor({p: n for p, n in self._items if n > 0})

    def negative_part(self) -> "Divisor":
        """The effective divisor -min(D, 0)."""
        return Divisor({p: -n for p, n in self._items if n < 0})

    def restrict(self, keep) -> "Divisor":
        return Divisor({p: n for p, n in self._items if keep(p)})

    def __eq__(self, other) -> bool:
        return isinstance(other, Divisor) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __str__(self) -> str:
        if not self._items:
            return "0"
        parts: List[str] = []
        for place, n in self._items:
            mag = abs(n)
            body = str(place) if mag == 1 else f"{mag}*{place}"
            if not parts:
                parts.append(body if n > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if n > 0 else f"- {body}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Divisor({self})"


def sup(divisors: Iterable[Divisor]) -> Divisor:
    """Pointwise maximum; places absent from a divisor count as 0."""
    best: Dict[Place, int] = {}
    for d in divisors:
        for p, n in d.items():
            best[p] = max(best.get(p, 0), n)
    return Divisor(best)


def div_degree(divisor: Divisor) -> int:
    return divisor.degree


def _collapse_branches(mults: Dict[Place, int]) -> Dict[Place, int]:
    by_fibre: Dict[Poly, List[Closed]] = {}
    for place in mults:
        if isinstance(place, Closed) and not place.ramified:
            by_fibre.setdefault(place.minpoly, []).append(place)
    for phi, places in by_fibre.items():
        if not any(p.branch is not None for p in places):
            continue
        e = phi.degree
        conorm = Closed(phi, None, 2 * e)
        base = mults.pop(conorm, 0)
        branches: Dict[Poly, int] = {}
        for p in places:
            if p.branch is not None:
                branches[p.branch] = mults.pop(p, 0)
        for r in list(branches):
            branches.setdefault((-r) % phi, 0)
        values = {r: n + base for r, n in branches.items()}
        if len(values) == 2 and len(set(values.values())) == 1:
            common = next(iter(values.values()))
            if common:
                mults[conorm] = common
            continue
        for r, n in values.items():
            if n:
                mults[Closed(phi, r, e)] = n
    return mults


# -- valuations --------------------------------------------------------------


def _ord_infinity(a: Poly, b: Poly, genus: int) -> int:
    candidates = []
    if not a.is_zero:
        candidates.append(-2 * a.degree)
    if not b.is_zero:
        candidates.append(-2 * b.degree - (2 * genus + 1))
    return min(candidates)


def _ord_ramified(a: Poly, b: Poly, phi: Poly) -> int:
    return min(2 * a.valuation(phi), 2 * b.valuation(phi) + 1)


def _split_fibre(a: Poly, b: Poly, phi: Poly, f: Poly) -> Tuple[int, int, Optional[Poly]]:
    """
    For an unramified fibre: (c, m, r) where c = min(v(A), v(B)), m is the
    extra order on the branch y = r mod phi (m = 0 and r = None if none).
    """
    c = min(a.valuation(phi), b.valuation(phi))
    if c:
        phic = phi**c
        a, b = a // phic, b // phic
    if b.is_zero:
        return c, 0, None
    m = (a * a - b * b * f).valuation(phi)
    if m == 0:
        return c, 0, None
    r = (-a * (b % phi).inverse_mod(phi)) % phi
    return c, m, r


def _ord_branch(a: Poly, b: Poly, phi: Poly, branch: Poly, f: Poly) -> int:
    c, m, r = _split_fibre(a, b, phi, f)
    if m and r == branch % phi:
        return c + m
    return c


def ord_at(u: FuncElem, place: Place) -> int:
    """Valuation of a nonzero function at a place."""
    if u.is_zero:
        raise ZeroElementError("the valuation of zero is undefined")
    a, b, d = u.parts()
    curve = u.curve
    if isinstance(place, Infinity):
        return _ord_infinity(a, b, curve.genus) + 2 * d.degree
    phi = place.fibre
    if place.ramified:
        return _ord_ramified(a, b, phi) - 2 * d.valuation(phi)
    if isinstance(place, Affine):
        return _ord_branch(a, b, phi, Poly.constant(place.y0), curve.f) - d.valuation(phi)
    if place.branch is None:
        return min(a.valuation(phi), b.valuation(phi)) - d.valuation(phi)
    return _ord_branch(a, b, phi, place.branch, curve.f) - d.valuation(phi)


def _fibre_orders(a: Poly, b: Poly, d: Poly, phi: Poly, curve: CurveSpec) -> Dict[Place, int]:
    """Orders of (A + B y)/D at every place over the irreducible fibre phi."""
    vd = d.valuation(phi)
    f = curve.f
    out: Dict[Place, int] = {}
    if phi.degree == 1:
        x0 = -phi.coeffs[0] if phi.coeffs[0] else Fraction(0)
        fx0 = f(x0)
        if fx0 == 0:
            out[Affine(x0, Fraction(0))] = _ord_ramified(a, b, phi) - 2 * vd
            return out
        s = rational_sqrt(fx0)
        if s is None:
            out[Closed(phi, None, 2)] = min(a.valuation(phi), b.valuation(phi)) - vd
            return out
        c, m, r = _split_fibre(a, b, phi, f)
        for y0 in (s, -s):
            extra = m if m and r == Poly.constant(y0) else 0
            out[Affine(x0, y0)] = c + extra - vd
        return out
    if (f % phi).is_zero:
        out[Closed(phi, None, phi.degree, True)] = _ord_ramified(a, b, phi) - 2 * vd
        return out
    c, m, r = _split_fibre(a, b, phi, f)
    if m == 0:
        out[Closed(phi, None, 2 * phi.degree)] = c - vd
    else:
        out[Closed(phi, r, phi.degree)] = c + m - vd
        out[Closed(phi, (-r) % phi, phi.degree)] = c - vd
    return out


def divisor_of(u: FuncElem) -> Divisor:
    """Exact divisor of zeros and poles; always of degree 0."""
    if u.is_zero:
        raise ZeroElementError("the zero function has no divisor")
    a, b, d = u.parts()
    curve = u.curve
    norm = a * a - b * b * curve.f
    fibres = set(irreducible_factors(norm)) | set(irreducible_factors(d))
    mults: Dict[Place, int] = {}
    for phi in fibres:
        mults.update(_fibre_orders(a, b, d, phi, curve))
    mults[INFINITY] = _ord_infinity(a, b, curve.genus) + 2 * d.degree
    return Divisor(mults)


def pole_divisor(u: FuncElem) -> Divisor:
    """Effective divisor of poles; only the denominator is factored."""
    if u.is_zero:
        return Divisor()
    a, b, d = u.parts()
    curve = u.curve
    mults: Dict[Place, int] = {}
    for phi in irreducible_factors(d):
        for place, n in _fibre_orders(a, b, d, phi, curve).items():
            if n < 0:
                mults[place] = -n
    inf = _ord_infinity(a, b, curve.genus) + 2 * d.degree
    if inf < 0:
        mults[INFINITY] = -inf
    return Divisor(mults)


def _column_fibre_orders(entries: Sequence[FuncElem], phi: Poly) -> Dict[Place, int]:
    """
    Pointwise minimum over the places of one unramified closed fibre. If any
    entry splits there, entries that do not split count once on each branch.
    """
    per_entry = [_fibre_orders(*u.parts(), phi, u.curve) for u in entries]
    branches = {q for orders in per_entry for q in orders if q.branch is not None}
    if not branches:
        whole = Closed(phi, None, 2 * phi.degree)
        return {whole: min(orders[whole] for orders in per_entry)}
    out: Dict[Place, int] = {}
    for q in branches:
        out[q] = min(orders[q] if q in orders else next(iter(orders.values())) for orders in per_entry)
    return out


def column_divisor(column: Sequence[FuncElem]) -> Divisor:
    """
    Divisor of a vector of functions: the pointwise minimum of the entry
    divisors (common zeros positive, poles negative).
    """
    entries = [u for u in column if not u.is_zero]
    if not entries:
        raise ZeroElementError("the zero vector has no divisor")
    poles = [pole_divisor(u) for u in entries]
    zero_source = min(entries, key=entry_weight)
    candidates = set(divisor_of(zero_source).support)
    for pd in poles:
        candidates.update(pd.support)
    candidates.add(INFINITY)
    mults: Dict[Place, int] = {}
    closed_fibres = set()
    for q in candidates:
        if isinstance(q, Closed) and not q.ramified:
            closed_fibres.add(q.minpoly)
        else:
            mults[q] = min(ord_at(u, q) for u in entries)
    for phi in closed_fibres:
        mults.update(_column_fibre_orders(entries, phi))
    return Divisor(mults)


def entry_weight(u: FuncElem) -> int:
    """Rough size of a function, used to pick the cheapest one to factor."""
    a, b, d = u.parts()
    return max(a.degree, b.degree) + d.degree


def ramified_places(curve: CurveSpec) -> Tuple[Place, ...]:
    places: List[Place] = []
    for phi in irreducible_factors(curve.f):
        if phi.degree == 1:
            places.append(Affine(-phi.coeffs[0] if phi.coeffs[0] else Fraction(0), Fraction(0)))
        else:
            places.append(Closed(phi, None, phi.degree, True))
    return tuple(sorted(places, key=lambda p: p.sort_key()))


# -- jets --------------------------------------------------------------------


@dataclass(frozen=True)
class Jet:
    """Taylor coefficients of a function in t = x - x0 at a rational unramified place."""

    place: Affine
    coefficients: Tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def leading_index(self) -> Optional[int]:
        for i, c in enumerate(self.coefficients):
            if c != 0:
                return i
        return None

    def __add__(self, other: "Jet") -> "Jet":
        n = min(self.order, other.order)
        return Jet(
            self.place,
            tuple(a + b for a, b in zip(self.coefficients[: n + 1], other.coefficients)),
        )

    def __sub__(self, other: "Jet") -> "Jet":
        n = min(self.order, other.order)
        return Jet(
            self.place,
            tuple(a - b for a, b in zip(self.coefficients[: n + 1], other.coefficients)),
        )

    def __mul__(self, other: "Jet") -> "Jet":
        n = min(self.order, other.order)
        return Jet(self.place, tuple(series_mul(self.coefficients, other.coefficients, n)))


def series_mul(a: Sequence[Fraction], b: Sequence[Fraction], n: int) -> List[Fraction]:
    out = [Fraction(0)] * (n + 1)
    for i, ai in enumerate(a[: n + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: n + 1 - i]):
            out[i + j] += ai * bj
    return out


def series_inverse(a: Sequence[Fraction], n: int) -> List[Fraction]:
    if not a or a[0] == 0:
        raise ZeroElementError("power series without constant term is not invertible")
    inv0 = 1 / a[0]
    out = [inv0] + [Fraction(0)] * n
    for k in range(1, n + 1):
        acc = sum((a[i] * out[k - i] for i in range(1, min(k, len(a) - 1) + 1)), Fraction(0))
        out[k] = -acc * inv0
    return out


def _padded(p: Poly, x0: Fraction, n: int) -> List[Fraction]:
    cs = list(p.shift(x0).coeffs[: n + 1])
    return cs + [Fraction(0)] * (n + 1 - len(cs))


def branch_series(curve: CurveSpec, place: Affine, n: int) -> List[Fraction]:
    """Taylor coefficients of y at an unramified rational place, to degree n."""
    if place.ramified:
        raise PlaceError(f"{place} is ramified; y has no Taylor expansion in x - x0 there")
    fs = _padded(curve.f, place.x0, n)
    ys = [place.y0] + [Fraction(0)] * n
    two_y0 = 2 * place.y0
    for k in range(1, n + 1):
        acc = sum((ys[i] * ys[k - i] for i in range(1, k)), Fraction(0))
        ys[k] = (fs[k] - acc) / two_y0
    return ys


def jet_expand(u: FuncElem, place: Place, n: int) -> Jet:
    """Expansion of u in powers of x - x0 to degree n."""
    if not is_jet_site(place):
        raise PlaceError(
            f"jets are only taken at rational unramified affine places, not at {place}"
        )
    if n < 0:
        raise ValueError("jet order must be non-negative")
    curve = u.curve
    if u.is_zero:
        return Jet(place, tuple([Fraction(0)] * (n + 1)))
    a, b, d = u.parts()
    vd = d.valuation(place.fibre)
    prec = n + vd
    ys = branch_series(curve, place, prec)
    num = _padded(a, place.x0, prec)
    if not b.is_zero:
        num = [p + q for p, q in zip(num, series_mul(_padded(b, place.x0, prec), ys, prec))]
    if any(c != 0 for c in num[:vd]):
        raise PoleError(f"{u} has a pole at {place}")
    den = _padded(d, place.x0, prec)
    body = series_mul(num[vd:], series_inverse(den[vd:], n), n)
    return Jet(place, tuple(body))


def hensel_branch(curve: CurveSpec, phi: Poly, root: Poly, precision: int) -> Poly:
    """Lift r with r^2 = f mod phi to r^2 = f mod phi^precision."""
    modulus = phi**precision
    r = root % modulus
    if precision <= 1:
        return r
    w = (r * 2).inverse_mod(modulus)
    for _ in range(precision - 1):
        r = (r - (r * r - curve.f) * w) % modulus
    return r
