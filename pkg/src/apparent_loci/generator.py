"""
Seeded random instances: frames Psi = L * Delta * U whose dependence loci are
rational by construction, and ambient connections with poles at rational
fibres.

L is a product of elementary matrices over Q[x, y] and U is unit upper
triangular, so the first k columns of Psi fail to be independent exactly
where the first k diagonal entries of Delta vanish. Those entries are built
from atoms, functions whose divisors live on rational unramified places and
infinity.

Pool frames draw each entry from a fixed pool of shifts and slopes at
rational fibres instead. Their columns meet at fibres no diagonal controls,
so later steps see carried points, shortfalls and exceptional points.
"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Mapping, Tuple

from apparent_loci.kernel import CurveSpec, FuncElem, rational_sqrt
from apparent_loci.linalg import Matrix, diagonal, identity, matmul
from apparent_loci.places import Affine, Infinity, Place, divisor_of, is_jet_site
from apparent_loci.trivializer import Frame

logger = logging.getLogger("apparent_loci.generator")

_SCALARS = (1, -1, 2)


@dataclass(frozen=True)
class GeneratorSettings:
    elementary_steps: int = 2
    atom_range: int = 6
    max_atoms: int = 2
    pool_share: float = 0.5
    pool_tries: int = 16

    @classmethod
    def from_config(cls, config: Mapping) -> "GeneratorSettings":
        section = (config or {}).get("generator", {}) or {}
        return cls(
            elementary_steps=int(section.get("elementary_steps", cls.elementary_steps)),
            atom_range=int(section.get("atom_range", cls.atom_range)),
            max_atoms=int(section.get("max_atoms", cls.max_atoms)),
            pool_share=float(section.get("pool_share", cls.pool_share)),
            pool_tries=int(section.get("pool_tries", cls.pool_tries)),
        )


@lru_cache(maxsize=None)
def rational_fibres(curve: CurveSpec, atom_range: int) -> Tuple[Tuple[Fraction, Fraction], ...]:
    """(x0, y0) with y0 > 0 and y0^2 = f(x0), numerators in [-R, R], denominators 1..3."""
    found = {}
    for den in range(1, 4):
        for num in range(-atom_range, atom_range + 1):
            x0 = Fraction(num, den)
            if x0 in found:
                continue
            value = curve.f(x0)
            if value == 0:
                continue
            y0 = rational_sqrt(value)
            if y0 is not None:
                found[x0] = abs(y0)
    return tuple(sorted(found.items()))


def _on_jet_sites(u: FuncElem) -> bool:
    return all(is_jet_site(q) or isinstance(q, Infinity) for q in divisor_of(u).support)


@lru_cache(maxsize=None)
def find_atoms(curve: CurveSpec, atom_range: int) -> Tuple[FuncElem, ...]:
    atoms: List[FuncElem] = []
    x, y = FuncElem.x(curve), FuncElem.y(curve)
    for x0, y0 in rational_fibres(curve, atom_range):
        atoms.append(x - x0)
        for candidate in (y - y0, y + y0):
            if _on_jet_sites(candidate):
                atoms.append(candidate)
    logger.debug(f"{len(atoms)} atom(s) on {curve}")
    return tuple(atoms)


@lru_cache(maxsize=None)
def column_pool(curve: CurveSpec, atom_range: int) -> Tuple[FuncElem, ...]:
    """
    Entries whose zeros sit on rational fibres but are not tied to a diagonal:
    shifts x - x0 and y -+ y0, the slopes (y -+ y0) / (x - x0) and the product
    of the first two x shifts. Columns built from them share zeros by accident.
    """
    x, y = FuncElem.x(curve), FuncElem.y(curve)
    pool: List[FuncElem] = []
    shifts: List[FuncElem] = []
    for x0, y0 in rational_fibres(curve, atom_range):
        shift = x - x0
        shifts.append(shift)
        pool.append(shift)
        for sign in (1, -1):
            pool.append(y - sign * y0)
            pool.append((y - sign * y0) / shift)
    if len(shifts) > 1:
        pool.append(shifts[0] * shifts[1])
    return tuple(pool)


class InstanceGenerator:
    """Draws frames and connections from a caller-owned random.Random."""

    def __init__(self, curve: CurveSpec, rng: random.Random, settings: GeneratorSettings = GeneratorSettings()):
        self.curve = curve
        self.rng = rng
        self.settings = settings
        self.atoms = find_atoms(curve, settings.atom_range)
        self.fibres = rational_fibres(curve, settings.atom_range)
        self.pool = column_pool(curve, settings.atom_range)

    def _scalar(self) -> int:
        return self.rng.choice(_SCALARS)

    def multiplier(self) -> FuncElem:
        """One of c, c*x, c*y, c*x + d."""
        curve = self.curve
        c = self._scalar()
        shape = self.rng.randrange(4)
        if shape == 0:
            return FuncElem.constant(curve, c)
        if shape == 1:
            return FuncElem.x(curve) * c
        if shape == 2:
            return FuncElem.y(curve) * c
        return FuncElem.x(curve) * c + self.rng.choice((1, -1))

    def diagonal_entry(self) -> FuncElem:
        entry = FuncElem.constant(self.curve, self._scalar())
        if not self.atoms:
            return entry
        for _ in range(self.rng.randint(0, self.settings.max_atoms)):
            atom = self.rng.choice(self.atoms)
            entry = entry * atom if self.rng.random() < 0.5 else entry / atom
        return entry

    def elementary(self, p: int) -> Matrix:
        m = [list(row) for row in identity(self.curve, p)]
        i, j = self.rng.sample(range(p), 2)
        m[i][j] = self.multiplier()
        return tuple(tuple(row) for row in m)

    def unit_upper(self, p: int) -> Matrix:
        zero = FuncElem.zero(self.curve)
        rows = []
        for i in range(p):
            row = []
            for j in range(p):
                if j < i:
                    row.append(zero)
                elif j == i:
                    row.append(FuncElem.one(self.curve))
                else:
                    row.append(self.multiplier() if self.rng.random() < 0.5 else zero)
            rows.append(tuple(row))
        return tuple(rows)

    def product_frame(self, p: int) -> Frame:
        lower = identity(self.curve, p)
        if p > 1:
            for _ in range(self.settings.elementary_steps):
                lower = matmul(lower, self.elementary(p))
        delta = diagonal([self.diagonal_entry() for _ in range(p)])
        rows = matmul(matmul(lower, delta), self.unit_upper(p))
        return Frame.from_rows(self.curve, rows)

    def pool_entry(self) -> FuncElem:
        if self.rng.random() < 0.25:
            return FuncElem.constant(self.curve, self._scalar())
        return self.rng.choice(self.pool) * self._scalar()

    def pool_frame(self, p: int) -> Frame:
        """
        Columns drawn entry by entry from the pool, redrawn until the
        determinant is nonzero. Falls back to product_frame after
        settings.pool_tries draws.
        """
        for _ in range(self.settings.pool_tries):
            columns = tuple(tuple(self.pool_entry() for _ in range(p)) for _ in range(p))
            frame = Frame(self.curve, columns)
            if not frame.det().is_zero:
                return frame
        logger.debug(f"no nonsingular pool frame after {self.settings.pool_tries} draws, using a product frame")
        return self.product_frame(p)

    def frame(self, p: int) -> Frame:
        if p > 1 and self.pool and self.rng.random() < self.settings.pool_share:
            return self.pool_frame(p)
        return self.product_frame(p)

    def connection(self, p: int) -> Tuple[Matrix, Tuple[Place, ...]]:
        """
        A connection matrix in the ambient trivial frame with entries
        c / (x - a) or constants, a ranging over rational fibres. Returns the
        matrix and the places over the fibres used.
        """
        curve = self.curve
        zero = FuncElem.zero(curve)
        used = set()
        rows = []
        for _ in range(p):
            row = []
            for _ in range(p):
                shape = self.rng.randrange(3)
                if shape == 0:
                    row.append(zero)
                elif shape == 1 or not self.fibres:
                    row.append(FuncElem.constant(curve, self._scalar()))
                else:
                    x0, _ = self.rng.choice(self.fibres)
                    used.add(x0)
                    row.append(FuncElem.constant(curve, self._scalar()) / (FuncElem.x(curve) - x0))
            rows.append(tuple(row))
        declared = []
        for x0, y0 in self.fibres:
            if x0 in used:
                declared.extend([Affine(x0, y0), Affine(x0, -y0)])
        return tuple(rows), tuple(declared)
