"""
Textual notation for polynomials, rational functions, places and divisors.

    divisor  := term (("+" | "-") term)*  |  "0"
    term     := [integer "*"] place
    place    := "(" rational "," rational ")" | "inf" | "closed[" poly [";" "y=" poly] "]"

Rational functions are parsed with sympy in the single variable x.
"""

import re
from fractions import Fraction
from typing import Dict, Optional, Tuple

import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from apparent_loci.errors import NotationError, PlaceError
from apparent_loci.kernel import CurveSpec, FuncElem, Poly, RatFunc
from apparent_loci.places import (
    INFINITY,
    Affine,
    Closed,
    Divisor,
    Infinity,
    Place,
    affine_place,
    closed_place,
)

_X = sympy.Symbol("x")
_Y = sympy.Symbol("y")
_TRANSFORMS = standard_transformations + (convert_xor,)


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise NotationError(f"not an exact rational: {text!r} ({e})")


def format_rational(value: Fraction) -> str:
    return str(value)


def _sympy_poly(expr, text: str) -> Poly:
    try:
        sp = sympy.Poly(expr, _X, domain=sympy.QQ)
    except sympy.PolynomialError as e:
        raise NotationError(f"not a polynomial in x: {text!r} ({e})")
    coeffs = []
    for c in reversed(sp.all_coeffs()):
        r = sympy.Rational(c)
        coeffs.append(Fraction(int(r.p), int(r.q)))
    return Poly(coeffs)


def _parse_expr(text: str, allow_y: bool = False):
    local = {"x": _X, "y": _Y} if allow_y else {"x": _X}
    try:
        expr = parse_expr(str(text), local_dict=local, transformations=_TRANSFORMS)
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        offset = getattr(e, "offset", None)
        raise NotationError(f"cannot parse {text!r}: {e}", column=offset)
    allowed = {_X, _Y} if allow_y else {_X}
    stray = expr.free_symbols - allowed
    if stray:
        raise NotationError(
            f"unexpected symbols {sorted(str(s) for s in stray)} in {text!r}"
        )
    return expr


def parse_poly(text: str) -> Poly:
    expr = _parse_expr(text)
    return _sympy_poly(sympy.expand(expr), text)


def parse_ratfunc(text: str) -> RatFunc:
    expr = _parse_expr(text)
    num, den = sympy.fraction(sympy.together(expr))
    den_poly = _sympy_poly(sympy.expand(den), text)
    if den_poly.is_zero:
        raise NotationError(f"zero denominator in {text!r}")
    return RatFunc(_sympy_poly(sympy.expand(num), text), den_poly)


def parse_function(curve: CurveSpec, a: str = "0", b: str = "0") -> FuncElem:
    return FuncElem(parse_ratfunc(a), parse_ratfunc(b), curve)


def parse_function_expr(curve: CurveSpec, text: str) -> FuncElem:
    """
    Parse an expression in x and y (e.g. "(y - 1)/x") by reducing y^2 = f(x).
    """
    expr = sympy.together(_parse_expr(text, allow_y=True))
    num, den = sympy.fraction(expr)
    return _expr_to_func(curve, num, text) / _expr_to_func(curve, den, text)


def _expr_to_func(curve: CurveSpec, expr, text: str) -> FuncElem:
    try:
        sp = sympy.Poly(sympy.expand(expr), _Y, domain=sympy.QQ[_X])
    except sympy.PolynomialError as e:
        raise NotationError(f"not polynomial in y: {text!r} ({e})")
    total = FuncElem.zero(curve)
    y = FuncElem.y(curve)
    for (k,), coeff in sp.terms():
        c = _sympy_poly(coeff.as_expr(), text)
        total = total + FuncElem(c, 0, curve) * y**k
    return total


# -- places and divisors ------------------------------------------------------

_TERM = re.compile(r"\s*([+-])?\s*(?:(\d+)\s*\*\s*)?")


def parse_place(curve: CurveSpec, text: str) -> Place:
    place, rest = _parse_place_at(curve, text.strip(), 0)
    if text.strip()[rest:].strip():
        raise NotationError(f"trailing text after place in {text!r}", column=rest + 1)
    return place


def _parse_place_at(curve: CurveSpec, text: str, pos: int) -> Tuple[Place, int]:
    if text.startswith("inf", pos):
        return INFINITY, pos + 3
    if text.startswith("(", pos):
        end = text.find(")", pos)
        if end < 0:
            raise NotationError("unclosed '(' in place", column=pos + 1)
        pieces = text[pos + 1:end].split(",")
        if len(pieces) != 2:
            raise NotationError("affine place needs two coordinates", column=pos + 1)
        try:
            place = affine_place(curve, parse_rational(pieces[0]), parse_rational(pieces[1]))
        except PlaceError as e:
            raise NotationError(str(e), column=pos + 1)
        return place, end + 1
    if text.startswith("closed[", pos):
        end = text.find("]", pos)
        if end < 0:
            raise NotationError("unclosed 'closed[' in place", column=pos + 1)
        body = text[pos + len("closed["):end]
        branch: Optional[Poly] = None
        if ";" in body:
            poly_text, branch_text = body.split(";", 1)
            branch_text = branch_text.strip()
            if not branch_text.startswith("y="):
                raise NotationError("branch must be written y=r(x)", column=pos + 1)
            branch = parse_poly(branch_text[2:])
        else:
            poly_text = body
        try:
            place = closed_place(curve, parse_poly(poly_text), branch)
        except PlaceError as e:
            raise NotationError(str(e), column=pos + 1)
        return place, end + 1
    raise NotationError(f"expected a place at {text[pos:pos + 12]!r}", column=pos + 1)


def parse_divisor(curve: CurveSpec, text: str) -> Divisor:
    text = text.strip()
    if text in ("", "0"):
        return Divisor()
    mults: Dict[Place, int] = {}
    pos = 0
    first = True
    while pos < len(text):
        m = _TERM.match(text, pos)
        sign, count = m.group(1), m.group(2)
        if sign is None and not first:
            raise NotationError("expected '+' or '-' between terms", column=pos + 1)
        pos = m.end()
        place, pos = _parse_place_at(curve, text, pos)
        n = int(count) if count else 1
        if sign == "-":
            n = -n
        mults[place] = mults.get(place, 0) + n
        first = False
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return Divisor(mults)


def place_kind(place: Place) -> str:
    if isinstance(place, Affine):
        return "affine"
    if isinstance(place, Infinity):
        return "infinity"
    if isinstance(place, Closed):
        return "closed"
    raise TypeError(f"not a place: {place!r}")
