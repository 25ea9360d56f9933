import logging
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, Iterator, List, Sequence, Tuple

from dyadic_cz.backend_utils.errors import (
    DimensionMismatchError,
    InputFormatError,
    TheoremContradiction,
)
from dyadic_cz.backend_utils.exact_powers import power_of_two
from dyadic_cz.backend_utils.geometry import Box, Point


"""
In this file the n+1 shifted dyadic filtrations A_0, ..., A_n of R^n are implemented.

Construction:
- A_0 is the standard dyadic grid: generation k has side 2^-k and lower corners in 2^-k Z^n.
- For k >= 0, A_m is A_0 translated by (m/p) along the diagonal v = (1, ..., 1),
  where p is the smallest odd integer strictly bigger than n.
- For k < 0 the translation changes with k. The ancestor of the initial cube at
  generation k-1 must be the standard cube [0, 2^(1-k))^n moved by lam*v with lam
  a multiple of 2^(1-k)/p. Writing the offset of generation k as 2^-k * a_k / p
  this reads a_(k-1) = (a_k - t*p) / 2 with t = a_k mod 2. Because p is odd,
  exactly one of the two diagonal parents satisfies the condition; the
  recursion asserts it at every step.

A cube is identified by CubeId(m, k, j). Its geometry is always recomputed
exactly from the offset, never stored.
"""


@dataclass(frozen=True, order=True)
class CubeId:
    m: int
    k: int
    j: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "j", tuple(int(v) for v in self.j))

    @property
    def dimension(self) -> int:
        return len(self.j)

    def side(self) -> Fraction:
        return power_of_two(-self.k)

    def to_json(self) -> Dict[str, Any]:
        return {"m": self.m, "k": self.k, "j": list(self.j)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CubeId":
        try:
            return cls(int(data["m"]), int(data["k"]), tuple(int(v) for v in data["j"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed cube id {data!r}") from exc


def smallest_odd_above(n: int) -> int:
    return n + 1 if n % 2 == 0 else n + 2


class GridFamily:
    """The n+1 filtrations of R^n. Immutable apart from the offset memo."""

    def __init__(self, dimension: int) -> None:
        if dimension < 1:
            raise InputFormatError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension
        self.p = smallest_odd_above(dimension)
        self.filtration_count = dimension + 1
        # _numerators[m][i] = a_(-i); filled lazily, guarded for concurrent fills
        self._numerators: List[List[int]] = [[m] for m in range(self.filtration_count)]
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"GridFamily(dimension={self.dimension}, p={self.p})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GridFamily) and other.dimension == self.dimension

    def __hash__(self) -> int:
        return hash(("GridFamily", self.dimension))

    @property
    def filtrations(self) -> range:
        return range(self.filtration_count)

    def _check_m(self, m: int) -> None:
        if not 0 <= m <= self.dimension:
            raise InputFormatError(f"filtration index {m} outside 0..{self.dimension}")

    def _check_point(self, x: Point) -> None:
        if x.dimension != self.dimension:
            raise DimensionMismatchError(
                f"point of dimension {x.dimension} in a family of dimension {self.dimension}"
            )

    ##### OFFSETS

    def offset_numerator(self, m: int, k: int) -> int:
        """a_k for k <= 0, the integer with offset(m, k) = 2^-k * a_k / p."""
        self._check_m(m)
        if k > 0:
            return m
        depth = -k
        chain = self._numerators[m]
        if depth < len(chain):
            return chain[depth]
        with self._lock:
            while len(chain) <= depth:
                chain.append(self._next_numerator(chain[-1], m, -len(chain) + 1))
        return chain[depth]

    def _next_numerator(self, a: int, m: int, k: int) -> int:
        admissible = [(a - t * self.p) // 2 for t in (0, 1) if (a - t * self.p) % 2 == 0]
        if len(admissible) != 1:
            raise TheoremContradiction(
                "offset recursion found no unique diagonal parent",
                {"m": m, "k": k, "a_k": a, "p": self.p, "admissible": admissible},
            )
        return admissible[0]

    def offset(self, m: int, k: int) -> Fraction:
        """Scalar diagonal offset o(m, k) of generation k in filtration m."""
        self._check_m(m)
        if k >= 0:
            return Fraction(m, self.p)
        return power_of_two(-k) * Fraction(self.offset_numerator(m, k), self.p)

    ##### CUBES

    def cube_box(self, cube: CubeId) -> Box:
        self._check_m(cube.m)
        if cube.dimension != self.dimension:
            raise DimensionMismatchError(f"cube {cube} does not live in dimension {self.dimension}")
        side = cube.side()
        shift = self.offset(cube.m, cube.k)
        return Box(Point(tuple(side * j + shift for j in cube.j)), side)

    def locate(self, m: int, k: int, x: Point) -> CubeId:
        """The unique cube of generation k in A_m containing x."""
        self._check_m(m)
        self._check_point(x)
        shift = self.offset(m, k)
        scale = power_of_two(k)
        return CubeId(m, k, tuple(math.floor((c - shift) * scale) for c in x.coords))

    def parent(self, cube: CubeId) -> CubeId:
        return self.locate(cube.m, cube.k - 1, self.cube_box(cube).lower)

    def ancestor(self, cube: CubeId, k: int) -> CubeId:
        """The cube of generation k <= cube.k containing cube."""
        if k > cube.k:
            raise InputFormatError(f"generation {k} is finer than {cube}")
        return self.locate(cube.m, k, self.cube_box(cube).lower)

    def children(self, cube: CubeId) -> List[CubeId]:
        base = self.locate(cube.m, cube.k + 1, self.cube_box(cube).lower)
        return [
            CubeId(cube.m, cube.k + 1, tuple(j + bit for j, bit in zip(base.j, bits)))
            for bits in product((0, 1), repeat=self.dimension)
        ]

    def in_lattice(self, x: Point, k: int) -> bool:
        """True iff every coordinate of x lies in (2^-k / p) Z."""
        self._check_point(x)
        scale = power_of_two(k) * self.p
        return all((c * scale).denominator == 1 for c in x.coords)

    def cubes_in_window(self, m: int, k: int, window: Box) -> Iterator[CubeId]:
        """All cubes of A_m(k) meeting the half-open window, in lexicographic order."""
        self._check_m(m)
        if window.dimension != self.dimension:
            raise DimensionMismatchError("window dimension does not match the family")
        shift = self.offset(m, k)
        scale = power_of_two(k)
        ranges = []
        for lo in window.lower.coords:
            first = math.floor((lo - shift) * scale)
            last = math.ceil((lo + window.side - shift) * scale) - 1
            ranges.append(range(first, last + 1))
        logging.debug("window enumeration of A_%d(%d): %s", m, k, [len(r) for r in ranges])
        for j in product(*ranges):
            yield CubeId(m, k, j)


def vertex_coordinates_disjoint(family: GridFamily, m1: int, m2: int, k: int) -> bool:
    """Per-coordinate vertex sets of A_m1(k) and A_m2(k) do not meet."""
    difference = family.offset(m1, k) - family.offset(m2, k)
    return (difference * power_of_two(k)).denominator != 1


def lattice_separation(family: GridFamily, k: int) -> Fraction:
    """Minimal sup-distance between distinct points of J_k."""
    return power_of_two(-k) / family.p


def corner_points(family: GridFamily, cubes: Sequence[CubeId]) -> Iterator[Point]:
    for cube in cubes:
        yield from family.cube_box(cube).corners()
