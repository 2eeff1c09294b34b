"""
Exact arithmetic: rationals, dense polynomials over Q, rational functions in x
and the quadratic function field Q(x)[y]/(y^2 - f(x)) of a hyperelliptic curve.

Every value is immutable and kept in canonical form after each operation, so
equality is syntactic.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import sympy

from apparent_loci.errors import CurveError, CurveMismatch, ZeroElementError

logger = logging.getLogger("apparent_loci.kernel")

Scalar = Union[int, Fraction, str]


def as_rational(value: Scalar) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def rational_sqrt(value: Fraction) -> Optional[Fraction]:
    """Exact square root of a rational, or None if it is not a square in Q."""
    if value < 0:
        return None
    num, den = value.numerator, value.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class Poly:
    """Dense univariate polynomial over Q, coefficients lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        cs = [as_rational(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: Tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def _from_fractions(cls, cs: List[Fraction]) -> "Poly":
        while cs and cs[-1] == 0:
            cs.pop()
        p = cls.__new__(cls)
        p.coeffs = tuple(cs)
        return p

    @classmethod
    def x(cls) -> "Poly":
        return cls._from_fractions([Fraction(0), Fraction(1)])

    @classmethod
    def constant(cls, c: Scalar) -> "Poly":
        return cls._from_fractions([as_rational(c)])

    @classmethod
    def linear_root(cls, x0: Scalar) -> "Poly":
        """The monic polynomial x - x0."""
        return cls._from_fractions([-as_rational(x0), Fraction(1)])

    # -- basic properties -------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def coeff(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.coeffs == Poly.constant(other).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Poly", self.coeffs))

    # -- ring operations --------------------------------------------------

    @staticmethod
    def _coerce(other) -> Optional["Poly"]:
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Poly.constant(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = self.coeffs, o.coeffs
        if len(a) < len(b):
            a, b = b, a
        cs = list(a)
        for i, c in enumerate(b):
            cs[i] += c
        return Poly._from_fractions(cs)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._from_fractions([-c for c in self.coeffs])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def scale(self, c: Scalar) -> "Poly":
        c = as_rational(c)
        if c == 0:
            return Poly()
        return Poly._from_fractions([c * a for a in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        if not isinstance(other, Poly):
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly()
        cs = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                cs[i + j] += ai * bj
        return Poly._from_fractions(cs)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative powers of polynomials are rational functions")
        result, base = Poly.constant(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __divmod__(self, other: "Poly") -> Tuple["Poly", "Poly"]:
        if other.is_zero:
            raise ZeroElementError("polynomial division by zero")
        rem = list(self.coeffs)
        dv = other.coeffs
        n = len(dv) - 1
        inv_lead = 1 / dv[-1]
        if len(rem) - 1 < n:
            return Poly(), self
        quot = [Fraction(0)] * (len(rem) - n)
        for k in range(len(rem) - 1, n - 1, -1):
            c = rem[k] * inv_lead
            if c == 0:
                continue
            quot[k - n] = c
            for i, d in enumerate(dv):
                rem[k - n + i] -= c * d
        return Poly._from_fractions(quot), Poly._from_fractions(rem[:n])

    def __floordiv__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[1]

    def exact_div(self, other: "Poly") -> "Poly":
        q, r = divmod(self, other)
        if not r.is_zero:
            raise ArithmeticError(f"{other} does not divide {self}")
        return q

    def monic(self) -> "Poly":
        if self.is_zero or self.lead == 1:
            return self
        return self.scale(1 / self.lead)

    # -- calculus and evaluation ------------------------------------------

    def __call__(self, x0: Scalar) -> Fraction:
        x0 = as_rational(x0)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x0 + c
        return acc

    def derivative(self) -> "Poly":
        return Poly._from_fractions([k * c for k, c in enumerate(self.coeffs)][1:])

    def shift(self, x0: Scalar) -> "Poly":
        """The polynomial t -> self(x0 + t)."""
        x0 = as_rational(x0)
        cs = list(self.coeffs)
        n = len(cs)
        # repeated synthetic division by (t - x0) yields the Taylor coefficients
        for i in range(n):
            for k in range(n - 2, i - 1, -1):
                cs[k] += x0 * cs[k + 1]
        return Poly._from_fractions(cs)

    def split_valuation(self, phi: "Poly") -> Tuple[int, "Poly"]:
        """Largest k with phi^k | self, together with self / phi^k."""
        if self.is_zero:
            raise ZeroElementError("valuation of the zero polynomial")
        k, rest = 0, self
        while True:
            q, r = divmod(rest, phi)
            if not r.is_zero:
                return k, rest
            k, rest = k + 1, q

    def valuation(self, phi: "Poly") -> int:
        if self.is_zero:
            return INFINITE_ORDER
        return self.split_valuation(phi)[0]

    # -- gcd --------------------------------------------------------------

    def gcd(self, other: "Poly") -> "Poly":
        """Monic gcd computed with a primitive integer remainder sequence."""
        if self.is_zero:
            return other.monic()
        if other.is_zero:
            return self.monic()
        if self.degree == 0 or other.degree == 0:
            return Poly.constant(1)
        a, b = _primitive_int(self.coeffs), _primitive_int(other.coeffs)
        if len(a) < len(b):
            a, b = b, a
        while b:
            r = _int_prem(a, b)
            a, b = b, (_primitive_int_list(r) if r else [])
            if len(a) == 1:
                return Poly.constant(1)
        return Poly(a).monic()

    def xgcd(self, other: "Poly") -> Tuple["Poly", "Poly", "Poly"]:
        """(g, s, t) with s*self + t*other = g, g monic."""
        r0, r1 = self, other
        s0, s1 = Poly.constant(1), Poly()
        t0, t1 = Poly(), Poly.constant(1)
        while not r1.is_zero:
            q, r = divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if r0.is_zero:
            return r0, s0, t0
        inv = 1 / r0.lead
        return r0.scale(inv), s0.scale(inv), t0.scale(inv)

    def inverse_mod(self, modulus: "Poly") -> "Poly":
        g, s, _ = self.xgcd(modulus)
        if g.degree != 0:
            raise ZeroElementError(f"{self} is not invertible modulo {modulus}")
        return s % modulus

    # -- text -------------------------------------------------------------

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts: List[str] = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mag = abs(c)
            if k == 0:
                body = str(mag)
            else:
                mono = "x" if k == 1 else f"x^{k}"
                body = mono if mag == 1 else f"{mag}*{mono}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Poly({self})"


INFINITE_ORDER = 10**9

ONE = Poly.constant(1)


def _primitive_int(coeffs: Sequence[Fraction]) -> List[int]:
    den = 1
    for c in coeffs:
        den = _lcm(den, c.denominator)
    return _primitive_int_list([int(c * den) for c in coeffs])


def _primitive_int_list(cs: List[int]) -> List[int]:
    g = 0
    for c in cs:
        g = gcd(g, c)
    if g == 0:
        return []
    if cs[-1] < 0:
        g = -g
    return [c // g for c in cs]


def _int_prem(a: List[int], b: List[int]) -> List[int]:
    """Pseudo-remainder of integer polynomials (lowest degree first)."""
    r = list(a)
    n = len(b) - 1
    lb = b[-1]
    while r and len(r) - 1 >= n:
        lr = r[-1]
        shift = len(r) - 1 - n
        r = [lb * c for c in r]
        for i, c in enumerate(b):
            r[i + shift] -= lr * c
        while r and r[-1] == 0:
            r.pop()
    return r


@lru_cache(maxsize=8192)
def irreducible_factors(p: Poly) -> Tuple[Poly, ...]:
    """Distinct monic irreducible factors of p over Q, sorted by degree."""
    if p.degree <= 0:
        return ()
    x = sympy.Symbol("x")
    sp = sympy.Poly(
        [sympy.Rational(c.numerator, c.denominator) for c in reversed(p.coeffs)],
        x,
        domain=sympy.QQ,
    )
    _, factors = sp.factor_list()
    found = set()
    for fac, _mult in factors:
        coeffs = []
        for c in reversed(fac.all_coeffs()):
            r = sympy.Rational(c)
            coeffs.append(Fraction(int(r.p), int(r.q)))
        found.add(Poly(coeffs).monic())
    return tuple(sorted(found, key=lambda q: (q.degree, q.coeffs)))


def is_irreducible(p: Poly) -> bool:
    return p.degree >= 1 and irreducible_factors(p) == (p.monic(),) and _is_squarefree(p)


def _is_squarefree(p: Poly) -> bool:
    return p.gcd(p.derivative()).degree == 0


class RatFunc:
    """Quotient num/den of polynomials with gcd 1 and monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num=0, den=None):
        num = _as_poly(num)
        den = ONE if den is None else _as_poly(den)
        if den.is_zero:
            raise ZeroElementError("rational function with zero denominator")
        if num.is_zero:
            den = ONE
        elif den.degree > 0:
            g = num.gcd(den)
            if g.degree > 0:
                num, den = num // g, den // g
        lc = den.lead
        if lc != 1:
            num, den = num.scale(1 / lc), den.scale(1 / lc)
        self.num: Poly = num
        self.den: Poly = den

    @classmethod
    def _canonical(cls, num: Poly, den: Poly) -> "RatFunc":
        r = cls.__new__(cls)
        r.num, r.den = num, den
        return r

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def __bool__(self) -> bool:
        return not self.num.is_zero

    def __eq__(self, other) -> bool:
        if isinstance(other, RatFunc):
            return self.num == other.num and self.den == other.den
        o = _maybe_ratfunc(other)
        if o is None:
            return NotImplemented
        return self == o

    def __hash__(self) -> int:
        return hash(("RatFunc", self.num.coeffs, self.den.coeffs))

    def __add__(self, other):
        o = _maybe_ratfunc(other)
        if o is None:
            return NotImplemented
        if self.den == o.den:
            return RatFunc(self.num + o.num, self.den)
        g = self.den.gcd(o.den)
        d1, d2 = self.den // g, o.den // g
        return RatFunc(self.num * d2 + o.num * d1, self.den * d2)

    __radd__ = __add__

    def __neg__(self) -> "RatFunc":
        return RatFunc._canonical(-self.num, self.den)

    def __sub__(self, other):
        o = _maybe_ratfunc(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = _maybe_ratfunc(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = _maybe_ratfunc(other)
        if o is None:
            return NotImplemented
        if self.is_zero or o.is_zero:
            return RatFunc()
        g1 = self.num.gcd(o.den)
        g2 = o.num.gcd(self.den)
        num = (self.num // g1) * (o.num // g2)
        den = (self.den // g2) * (o.den // g1)
        return RatFunc._canonical(num, den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.is_zero:
            raise ZeroElementError("inverse of the zero rational function")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other):
        o = _maybe_ratfunc(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _maybe_ratfunc(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int) -> "RatFunc":
        if n < 0:
            return self.inverse() ** (-n)
        return RatFunc._canonical(self.num**n, self.den**n)

    def derivative(self) -> "RatFunc":
        return RatFunc(
            self.num.derivative() * self.den - self.num * self.den.derivative(),
            self.den * self.den,
        )

    def __call__(self, x0: Scalar) -> Fraction:
        d = self.den(x0)
        if d == 0:
            raise ZeroElementError(f"rational function has a pole at x = {x0}")
        return self.num(x0) / d

    def __str__(self) -> str:
        if self.den == ONE:
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self) -> str:
        return f"RatFunc({self})"


def _as_poly(value) -> Poly:
    if isinstance(value, Poly):
        return value
    return Poly.constant(value)


def _maybe_ratfunc(value) -> Optional[RatFunc]:
    if isinstance(value, RatFunc):
        return value
    if isinstance(value, Poly):
        return RatFunc._canonical(value, ONE)
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return RatFunc._canonical(Poly.constant(value), ONE)
    return None


def as_ratfunc(value) -> RatFunc:
    r = _maybe_ratfunc(value)
    if r is None:
        raise TypeError(f"cannot interpret {value!r} as a rational function")
    return r


class CurveSpec:
    """The hyperelliptic curve y^2 = f(x) with deg f in {3, 5}."""

    __slots__ = ("f", "genus", "fprime")

    def __init__(self, f_coeffs: Union[Poly, Sequence[Scalar]]):
        f = f_coeffs if isinstance(f_coeffs, Poly) else Poly(f_coeffs)
        if f.degree not in (3, 5):
            raise CurveError(f"f must have degree 3 or 5, got degree {f.degree}")
        if not _is_squarefree(f):
            raise CurveError(f"f = {f} is not squarefree over Q")
        self.f = f
        self.genus = (f.degree - 1) // 2
        self.fprime = f.derivative()

    @property
    def f_coeffs(self) -> Tuple[Fraction, ...]:
        return self.f.coeffs

    def __eq__(self, other) -> bool:
        return isinstance(other, CurveSpec) and self.f == other.f

    def __hash__(self) -> int:
        return hash(("CurveSpec", self.f.coeffs))

    def __str__(self) -> str:
        return f"y^2 = {self.f}"

    def __repr__(self) -> str:
        return f"CurveSpec({self.f})"

    def __reduce__(self):
        return (CurveSpec, (self.f.coeffs,))


class FuncElem:
    """The function a + b*y on a curve, with a and b rational functions of x."""

    __slots__ = ("a", "b", "curve")

    def __init__(self, a=0, b=0, curve: Optional[CurveSpec] = None):
        if curve is None:
            raise TypeError("a FuncElem needs the curve it lives on")
        self.a: RatFunc = as_ratfunc(a)
        self.b: RatFunc = as_ratfunc(b)
        self.curve: CurveSpec = curve

    @classmethod
    def x(cls, curve: CurveSpec) -> "FuncElem":
        return cls(Poly.x(), 0, curve)

    @classmethod
    def y(cls, curve: CurveSpec) -> "FuncElem":
        return cls(0, 1, curve)

    @classmethod
    def constant(cls, curve: CurveSpec, c: Scalar = 1) -> "FuncElem":
        return cls(as_rational(c), 0, curve)

    @classmethod
    def zero(cls, curve: CurveSpec) -> "FuncElem":
        return cls(0, 0, curve)

    @classmethod
    def one(cls, curve: CurveSpec) -> "FuncElem":
        return cls(1, 0, curve)

    def _coerce(self, other) -> Optional["FuncElem"]:
        if isinstance(other, FuncElem):
            if other.curve != self.curve:
                raise CurveMismatch(
                    f"cannot combine functions on {self.curve} and {other.curve}"
                )
            return other
        r = _maybe_ratfunc(other)
        if r is None:
            return None
        return FuncElem(r, 0, self.curve)

    @property
    def is_zero(self) -> bool:
        return self.a.is_zero and self.b.is_zero

    def __bool__(self) -> bool:
        return not self.is_zero

    @property
    def is_constant(self) -> bool:
        return self.b.is_zero and self.a.den == ONE and self.a.num.degree <= 0

    def __eq__(self, other) -> bool:
        if isinstance(other, FuncElem):
            return self.curve == other.curve and self.a == other.a and self.b == other.b
        r = _maybe_ratfunc(other)
        if r is None:
            return NotImplemented
        return self.b.is_zero and self.a == r

    def __hash__(self) -> int:
        return hash(("FuncElem", self.a, self.b))

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return FuncElem(self.a + o.a, self.b + o.b, self.curve)

    __radd__ = __add__

    def __neg__(self) -> "FuncElem":
        return FuncElem(-self.a, -self.b, self.curve)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return FuncElem(self.a - o.a, self.b - o.b, self.curve)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a1, b1, a2, b2 = self.a, self.b, o.a, o.b
        if b1.is_zero and b2.is_zero:
            return FuncElem(a1 * a2, 0, self.curve)
        fr = RatFunc._canonical(self.curve.f, ONE)
        return FuncElem(a1 * a2 + b1 * b2 * fr, a1 * b2 + a2 * b1, self.curve)

    __rmul__ = __mul__

    def norm(self) -> RatFunc:
        """a^2 - b^2 f, the product of the function with its conjugate."""
        return self.a * self.a - self.b * self.b * RatFunc._canonical(self.curve.f, ONE)

    def conjugate(self) -> "FuncElem":
        return FuncElem(self.a, -self.b, self.curve)

    def inverse(self) -> "FuncElem":
        if self.is_zero:
            raise ZeroElementError("inverse of the zero function")
        n = self.norm()
        return FuncElem(self.a / n, -self.b / n, self.curve)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int) -> "FuncElem":
        if n < 0:
            return self.inverse() ** (-n)
        result, base = FuncElem.one(self.curve), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def parts(self) -> Tuple[Poly, Poly, Poly]:
        """(A, B, D) with self = (A + B*y)/D and D the monic lcm of denominators."""
        da, db = self.a.den, self.b.den
        if da == db:
            return self.a.num, self.b.num, da
        g = da.gcd(db)
        d = da * (db // g)
        return self.a.num * (db // g), self.b.num * (da // g), d

    def __str__(self) -> str:
        if self.b.is_zero:
            return str(self.a)
        ytext = "y" if self.b == ONE else f"({self.b})*y"
        if self.a.is_zero:
            return ytext
        return f"{self.a} + {ytext}"

    def __repr__(self) -> str:
        return f"FuncElem({self})"

    def __reduce__(self):
        return (FuncElem, (self.a, self.b, self.curve))
