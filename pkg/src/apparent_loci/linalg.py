"""
Linear algebra used by the rest of the package.

Rational systems are cleared to integers and eliminated fraction-free
(Bareiss), matrices over the function field use cofactor expansion so that no
intermediate division happens at all.
"""

from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import List, Sequence, Tuple

from apparent_loci.errors import SingularFrame
from apparent_loci.kernel import CurveSpec, FuncElem

Matrix = Tuple[Tuple[FuncElem, ...], ...]


def _integer_row(row: Sequence[Fraction]) -> List[int]:
    den = 1
    for c in row:
        den = den * c.denominator // gcd(den, c.denominator)
    return [int(c * den) for c in row]


def echelon(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[List[int]], List[int]]:
    """
    Fraction-free row echelon form.

    Each row is scaled to integers first; every entry after k pivot steps is a
    (k+1)-minor of the scaled matrix, so the divisions below are exact.
    """
    m = [_integer_row(r) for r in rows if any(c != 0 for c in r)]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: List[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r == len(m):
            break
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        for i in range(r + 1, len(m)):
            a = m[i][c]
            m[i] = [(p * m[i][j] - a * m[r][j]) // prev for j in range(ncols)]
        prev = p
        pivots.append(c)
        r += 1
    return m[:r], pivots


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[List[Fraction]]:
    """
    Basis of the right kernel. The vector attached to free column j has a 1 in
    position j and is supported on columns <= j.
    """
    ech, pivots = echelon(rows) if rows else ([], [])
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pc in reversed(list(zip(ech, pivots))):
            if pc > free:
                continue
            acc = sum((Fraction(row[j]) * vec[j] for j in range(pc + 1, ncols)), Fraction(0))
            vec[pc] = -acc / row[pc]
        basis.append(vec)
    return basis


def solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> List[Fraction]:
    """Unique solution of a square nonsingular rational system."""
    n = len(matrix)
    augmented = [list(matrix[i]) + [rhs[i]] for i in range(n)]
    ech, pivots = echelon(augmented)
    if pivots != list(range(n)):
        raise SingularFrame("singular rational linear system")
    sol = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        row = ech[i]
        acc = Fraction(row[n]) - sum((row[j] * sol[j] for j in range(i + 1, n)), Fraction(0))
        sol[i] = acc / row[i]
    return sol


# -- matrices over the function field ---------------------------------------


def identity(curve: CurveSpec, n: int) -> Matrix:
    one, zero = FuncElem.one(curve), FuncElem.zero(curve)
    return tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))


def diagonal(entries: Sequence[FuncElem]) -> Matrix:
    zero = FuncElem.zero(entries[0].curve)
    n = len(entries)
    return tuple(tuple(entries[i] if i == j else zero for j in range(n)) for i in range(n))


def transpose(m: Sequence[Sequence[FuncElem]]) -> Matrix:
    return tuple(zip(*m))


def matmul(a: Sequence[Sequence[FuncElem]], b: Sequence[Sequence[FuncElem]]) -> Matrix:
    curve = a[0][0].curve
    cols = list(zip(*b))
    out = []
    for row in a:
        out_row = []
        for col in cols:
            acc = FuncElem.zero(curve)
            for u, v in zip(row, col):
                if not u.is_zero and not v.is_zero:
                    acc = acc + u * v
            out_row.append(acc)
        out.append(tuple(out_row))
    return tuple(out)


def matsub(a: Sequence[Sequence[FuncElem]], b: Sequence[Sequence[FuncElem]]) -> Matrix:
    return tuple(tuple(u - v for u, v in zip(ra, rb)) for ra, rb in zip(a, b))


def det(m: Sequence[Sequence[FuncElem]]) -> FuncElem:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    curve = m[0][0].curve
    total = FuncElem.zero(curve)
    for j in range(n):
        if m[0][j].is_zero:
            continue
        sub = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * det(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def submatrix(
    m: Sequence[Sequence[FuncElem]], rows: Sequence[int], cols: Sequence[int]
) -> Matrix:
    return tuple(tuple(m[i][j] for j in cols) for i in rows)


def maximal_minors(m: Sequence[Sequence[FuncElem]]) -> List[Tuple[Tuple[int, ...], FuncElem]]:
    """All k x k minors of a p x k matrix, keyed by row subset in lexicographic order."""
    p, k = len(m), len(m[0])
    cols = tuple(range(k))
    return [(rows, det(submatrix(m, rows, cols))) for rows in combinations(range(p), k)]


def inverse(m: Sequence[Sequence[FuncElem]]) -> Matrix:
    n = len(m)
    d = det(m)
    if d.is_zero:
        raise SingularFrame("matrix is singular over the function field")
    dinv = d.inverse()
    if n == 1:
        return ((dinv,),)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            # adjugate entry (i, j) is the (j, i) cofactor
            minor_rows = [r for r in range(n) if r != j]
            minor_cols = [c for c in range(n) if c != i]
            cof = det(submatrix(m, minor_rows, minor_cols))
            if (i + j) % 2:
                cof = -cof
            row.append(cof * dinv)
        out.append(tuple(row))
    return tuple(out)
