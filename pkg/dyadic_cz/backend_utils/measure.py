import logging
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from dyadic_cz.backend_utils.covering import cover_box, safe_covering_constant
from dyadic_cz.backend_utils.errors import (
    DimensionMismatchError,
    HypothesisViolation,
    InputFormatError,
    TheoremContradiction,
)
from dyadic_cz.backend_utils.exact_powers import (
    DEFAULT_PRECISION_BITS,
    floor_log2,
    power_of_two,
    rational_power,
    sqrt_bound,
)
from dyadic_cz.backend_utils.geometry import (
    Box,
    Point,
    box_contains_box,
    dilate,
    format_rational,
    parse_rational,
)
from dyadic_cz.backend_utils.grids import CubeId, GridFamily


"""
Finite atomic measures and the doubling-cube searches built on them.

A DiscreteMeasure is a list of atoms (point, mass, f). Every integral is a
finite sum over the atoms inside a half-open box. A sorted index on the first
coordinate is built once at construction; after that the object is read-only
and safe to share between threads.

Doubling searches:
- doubling_ancestor: climb parents from a start cube until mu(alpha Q) <= beta mu(Q).
  Ancestors inside A_0 never cross the coordinate hyperplanes, so once the
  chain passes the saturation scale it re-covers 3Q with the whole family and
  keeps climbing there.
- small_doubling_cube: descend generations at an atom until a doubling cube appears.
- smallest_doubling_container: the smallest doubling cube of any filtration containing a box.
"""


@dataclass(frozen=True)
class Atom:
    point: Point
    mass: Fraction
    f: Fraction

    def to_json(self) -> Dict[str, Any]:
        return {"x": self.point.to_json(), "mass": format_rational(self.mass), "f": format_rational(self.f)}


@dataclass(frozen=True)
class DiscreteMeasure:
    dimension: int
    atoms: Tuple[Atom, ...]
    growth_dim: Fraction
    _keys: Tuple[Fraction, ...] = field(init=False, repr=False, compare=False)
    _order: Tuple[int, ...] = field(init=False, repr=False, compare=False)
    _lookup: Dict[Point, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "growth_dim", Fraction(self.growth_dim))
        if not self.atoms:
            raise InputFormatError("a measure needs at least one atom")
        if not 0 < self.growth_dim <= self.dimension:
            raise InputFormatError(f"growth dimension {self.growth_dim} outside (0, {self.dimension}]")
        lookup: Dict[Point, int] = {}
        for index, atom in enumerate(self.atoms):
            if atom.point.dimension != self.dimension:
                raise DimensionMismatchError(f"atom {index} has dimension {atom.point.dimension}")
            if atom.mass <= 0:
                raise InputFormatError(f"atom {index} has nonpositive mass {atom.mass}")
            if atom.f < 0:
                raise InputFormatError(f"atom {index} has negative density {atom.f}")
            if atom.point in lookup:
                raise InputFormatError(f"atoms {lookup[atom.point]} and {index} share a point")
            lookup[atom.point] = index
        order = tuple(sorted(range(len(self.atoms)), key=lambda i: self.atoms[i].point[0]))
        object.__setattr__(self, "_order", order)
        object.__setattr__(self, "_keys", tuple(self.atoms[i].point[0] for i in order))
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def from_arrays(
        cls,
        points: Sequence[Point],
        masses: Sequence[Fraction],
        densities: Sequence[Fraction],
        growth_dim: Fraction,
    ) -> "DiscreteMeasure":
        if not (len(points) == len(masses) == len(densities)):
            raise InputFormatError("points, masses and densities differ in length")
        if not points:
            raise InputFormatError("a measure needs at least one atom")
        atoms = tuple(Atom(p, Fraction(m), Fraction(f)) for p, m, f in zip(points, masses, densities))
        return cls(points[0].dimension, atoms, Fraction(growth_dim))

    ##### ACCESSORS

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def points(self) -> List[Point]:
        return [a.point for a in self.atoms]

    @property
    def masses(self) -> List[Fraction]:
        return [a.mass for a in self.atoms]

    @property
    def densities(self) -> List[Fraction]:
        return [a.f for a in self.atoms]

    @property
    def total_mass(self) -> Fraction:
        return sum((a.mass for a in self.atoms), Fraction(0))

    @property
    def f_l1(self) -> Fraction:
        return sum((a.f * a.mass for a in self.atoms), Fraction(0))

    def atom_index(self, x: Point) -> Optional[int]:
        return self._lookup.get(x)

    def with_density(self, densities: Sequence[Fraction]) -> "DiscreteMeasure":
        return DiscreteMeasure.from_arrays(self.points, self.masses, list(densities), self.growth_dim)

    ##### INTEGRALS

    def atoms_in_box(self, b: Box) -> List[int]:
        """Indices of atoms inside the half-open box, in increasing order."""
        if b.dimension != self.dimension:
            raise DimensionMismatchError(f"box of dimension {b.dimension} against a measure of dimension {self.dimension}")
        first = b.lower[0]
        lo = bisect_left(self._keys, first)
        hi = bisect_left(self._keys, first + b.side)
        inside = [i for i in self._order[lo:hi] if b.contains_point(self.atoms[i].point)]
        inside.sort()
        return inside

    def box_mass(self, b: Box) -> Fraction:
        return sum((self.atoms[i].mass for i in self.atoms_in_box(b)), Fraction(0))

    def integral(self, b: Box, weights: Optional[Sequence[Fraction]] = None) -> Fraction:
        """Sum of weight * mass over atoms in b; weights default to f."""
        if weights is None:
            return sum((self.atoms[i].f * self.atoms[i].mass for i in self.atoms_in_box(b)), Fraction(0))
        return sum((weights[i] * self.atoms[i].mass for i in self.atoms_in_box(b)), Fraction(0))

    ##### SCALES

    def min_sup_distance(self) -> Optional[Fraction]:
        """Smallest sup-norm distance between two atoms (None for one atom)."""
        if len(self.atoms) < 2:
            return None
        best: Optional[Fraction] = None
        pts = self.points
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                d = pts[a].sup_distance(pts[b])
                if best is None or d < best:
                    best = d
        return best

    def min_squared_distance(self) -> Optional[Fraction]:
        if len(self.atoms) < 2:
            return None
        pts = self.points
        return min(pts[a].squared_distance(pts[b]) for a in range(len(pts)) for b in range(a + 1, len(pts)))

    def sup_diameter(self) -> Fraction:
        pts = self.points
        return max(
            (max(p[i] for p in pts) - min(p[i] for p in pts) for i in range(self.dimension)),
            default=Fraction(0),
        )

    def sup_radius(self) -> Fraction:
        """Largest |x|_inf over the support."""
        return max(max(abs(c) for c in p.coords) for p in self.points)

    def default_r_min(self, precision_bits: int = DEFAULT_PRECISION_BITS) -> Fraction:
        """Half the minimal pairwise distance, rounded down to a rational; 1 for a single atom."""
        sq = self.min_squared_distance()
        if sq is None:
            return Fraction(1)
        return sqrt_bound(sq, "down", precision_bits) / 2

    def growth_constant(self, r_min: Optional[Fraction] = None, precision_bits: int = DEFAULT_PRECISION_BITS) -> Fraction:
        """Certified upper bound for max mu(closed B(x, r)) / r^d over atoms x and r >= r_min.

        For a fixed center the mass is a step function of r that jumps at the
        distances to other atoms, so the supremum is attained at r_min or at one
        of those distances.
        """
        if r_min is None:
            r_min = self.default_r_min(precision_bits)
        r_min = Fraction(r_min)
        if r_min <= 0:
            raise HypothesisViolation(f"r_min must be positive, got {r_min}")
        r2_min = r_min * r_min
        exponent = self.growth_dim / 2
        best = Fraction(0)
        for center in self.points:
            spread = sorted((center.squared_distance(a.point), a.mass) for a in self.atoms)
            candidates = sorted({r2_min} | {sq for sq, _ in spread if sq >= r2_min})
            cursor, mass = 0, Fraction(0)
            for r2 in candidates:
                while cursor < len(spread) and spread[cursor][0] <= r2:
                    mass += spread[cursor][1]
                    cursor += 1
                ratio = mass / rational_power(r2, exponent, "down", precision_bits)
                if ratio > best:
                    best = ratio
        return best

    ##### SERIALIZATION

    def to_json(self) -> Dict[str, Any]:
        return {
            "dimension": self.dimension,
            "growth_dim": format_rational(self.growth_dim),
            "points": [a.to_json() for a in self.atoms],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "DiscreteMeasure":
        try:
            dimension = int(data["dimension"])
            growth_dim = parse_rational(data["growth_dim"])
            atoms = tuple(
                Atom(Point.parse(rec["x"]), parse_rational(rec["mass"]), parse_rational(rec.get("f", "0")))
                for rec in data["points"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed measure record: {exc}") from exc
        return cls(dimension, atoms, growth_dim)


@dataclass(frozen=True)
class DoublingParams:
    alpha: Fraction
    beta: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "beta", Fraction(self.beta))
        if self.alpha <= 3:
            raise HypothesisViolation(f"alpha must exceed 3, got {self.alpha}")
        if self.beta <= 1:
            raise HypothesisViolation(f"beta must exceed 1, got {self.beta}")

    @classmethod
    def default(
        cls,
        family: GridFamily,
        growth_dim: Fraction,
        precision_bits: int = DEFAULT_PRECISION_BITS,
    ) -> "DoublingParams":
        """alpha = 6 c*, beta = (6 c*^2)^d + 1 with the power rounded up."""
        c_star = safe_covering_constant(family)
        alpha = 6 * c_star
        beta = rational_power(6 * c_star * c_star, Fraction(growth_dim), "up", precision_bits) + 1
        return cls(alpha, beta)

    def to_json(self) -> Dict[str, str]:
        return {"alpha": format_rational(self.alpha), "beta": format_rational(self.beta)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "DoublingParams":
        try:
            return cls(parse_rational(data["alpha"]), parse_rational(data["beta"]))
        except (KeyError, TypeError) as exc:
            raise InputFormatError(f"malformed doubling parameters {data!r}") from exc


def is_doubling(mu: DiscreteMeasure, b: Box, params: DoublingParams) -> bool:
    """mu(alpha b) <= beta mu(b); two empty masses count as doubling."""
    return mu.box_mass(dilate(b, params.alpha)) <= params.beta * mu.box_mass(b)


def _sup_extent(mu: DiscreteMeasure, b: Box) -> Fraction:
    box_reach = max(max(abs(lo), abs(lo + b.side)) for lo in b.lower.coords)
    return max(mu.sup_radius(), box_reach)


def _saturation_generation(mu: DiscreteMeasure, family: GridFamily, b: Box) -> int:
    """Generation from which every shifted filtration's cube containing b also contains the support.

    In A_m with m >= 1 the origin stays at sup-distance >= 2^-k / p from every
    generation-k boundary, so a cube of side >= 2 p R containing the origin
    contains the whole sup-ball of radius R.
    """
    reach = 2 * family.p * _sup_extent(mu, b)
    e = floor_log2(reach)
    if power_of_two(e) < reach:
        e += 1
    return -e


def doubling_ancestor(
    mu: DiscreteMeasure,
    family: GridFamily,
    start: CubeId,
    params: DoublingParams,
    step_limit: int = 4096,
) -> CubeId:
    """First (alpha, beta)-doubling cube along start, parent(start), ...

    Returns:
    CubeId: a doubling cube whose box contains the box of start.
    """
    start_box = family.cube_box(start)
    k_saturated = _saturation_generation(mu, family, start_box)
    current = start
    for _ in range(step_limit):
        box = family.cube_box(current)
        if is_doubling(mu, box, params):
            if not box_contains_box(box, start_box):
                raise TheoremContradiction(
                    "doubling ancestor lost its start cube",
                    {"start": start.to_json(), "result": current.to_json()},
                )
            return current
        if current.k <= k_saturated:
            escaped = cover_box(family, dilate(box, 3)).cube
            logging.debug("ancestor chain saturated in A_%d at k=%d, re-covered into A_%d", current.m, current.k, escaped.m)
            current = escaped
        else:
            current = family.parent(current)
    raise TheoremContradiction(
        "doubling ancestor search exceeded its step limit",
        {"start": start.to_json(), "last": current.to_json(), "step_limit": step_limit},
    )


def small_doubling_cube(
    mu: DiscreteMeasure,
    family: GridFamily,
    x: Point,
    params: DoublingParams,
    k_start: int,
    step_limit: int = 4096,
) -> CubeId:
    """First doubling cube containing the atom x, descending from generation k_start.

    At each generation the filtrations are tried in order 0..n.
    """
    if mu.atom_index(x) is None:
        raise HypothesisViolation(f"{x.to_json()} is not an atom of the measure")
    threshold = safe_covering_constant(family) * params.alpha
    if params.beta <= threshold ** family.dimension:
        logging.warning(
            "beta=%s does not exceed (c* alpha)^n; descent still terminates for atomic measures",
            params.beta,
        )
    for k in range(k_start, k_start + step_limit):
        for m in family.filtrations:
            cube = family.locate(m, k, x)
            if is_doubling(mu, family.cube_box(cube), params):
                return cube
    raise TheoremContradiction(
        "no small doubling cube found within the step limit",
        {"x": x.to_json(), "k_start": k_start, "step_limit": step_limit},
    )


def smallest_doubling_container(
    mu: DiscreteMeasure,
    family: GridFamily,
    b: Box,
    params: DoublingParams,
    step_limit: int = 4096,
) -> CubeId:
    """Smallest (alpha, beta)-doubling cube of any filtration containing the box.

    Generations are scanned from the finest one whose cubes can hold b towards
    coarser ones; within a generation the lowest filtration index wins.
    """
    e = floor_log2(b.side)
    if power_of_two(e) < b.side:
        e += 1
    k_first = -e
    for k in range(k_first, k_first - step_limit, -1):
        for m in family.filtrations:
            cube = family.locate(m, k, b.lower)
            box = family.cube_box(cube)
            if box_contains_box(box, b) and is_doubling(mu, box, params):
                return cube
    raise TheoremContradiction(
        "no doubling container found within the step limit",
        {"box": b.to_json(), "step_limit": step_limit},
    )
