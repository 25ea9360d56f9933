"""
Exact coordinate geometry: rationals, points, half-open cubes and balls.

All cubes are half-open, prod_i [lower_i, lower_i + side). A point on an upper
face is outside. Balls never need square roots: a Euclidean ball sits in an
axis-parallel box exactly when its circumscribed box does.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, Iterable, Iterator, Sequence, Tuple, Union

from dyadic_cz.backend_utils.errors import (
    DimensionMismatchError,
    HypothesisViolation,
    InputFormatError,
)


RationalLike = Union[Fraction, int, str]


def parse_rational(value: RationalLike) -> Fraction:
    """Parse 'a/b', an integer or a decimal string into an exact Fraction.

    Floats are refused: they would smuggle binary rounding into exact data.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise InputFormatError(f"refusing non-exact rational input {value!r}")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if not isinstance(value, str):
        raise InputFormatError(f"cannot read a rational from {type(value).__name__}")
    text = value.strip()
    if not text:
        raise InputFormatError("empty rational string")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputFormatError(f"malformed rational {value!r}") from exc


def format_rational(value: Fraction) -> str:
    """Canonical lowest-terms form: '3/4', '-2'."""
    return str(Fraction(value))


@dataclass(frozen=True)
class Point:
    coords: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(Fraction(c) for c in self.coords))
        if not self.coords:
            raise DimensionMismatchError("a point needs at least one coordinate")

    @classmethod
    def of(cls, *coords: RationalLike) -> "Point":
        return cls(tuple(parse_rational(c) for c in coords))

    @classmethod
    def parse(cls, values: Iterable[RationalLike]) -> "Point":
        return cls(tuple(parse_rational(v) for v in values))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.coords)

    def __getitem__(self, axis: int) -> Fraction:
        return self.coords[axis]

    def translate(self, shift: Fraction) -> "Point":
        """Move along the diagonal (1, ..., 1)."""
        return Point(tuple(c + shift for c in self.coords))

    def squared_distance(self, other: "Point") -> Fraction:
        _check_dimensions(self.dimension, other.dimension)
        return sum(((a - b) ** 2 for a, b in zip(self.coords, other.coords)), Fraction(0))

    def sup_distance(self, other: "Point") -> Fraction:
        _check_dimensions(self.dimension, other.dimension)
        return max(abs(a - b) for a, b in zip(self.coords, other.coords))

    def to_json(self) -> list:
        return [format_rational(c) for c in self.coords]


@dataclass(frozen=True)
class Box:
    """Half-open cube prod_i [lower_i, lower_i + side)."""

    lower: Point
    side: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "side", Fraction(self.side))
        if self.side <= 0:
            raise HypothesisViolation(f"box side must be positive, got {self.side}")

    @classmethod
    def centered(cls, center: Point, side: Fraction) -> "Box":
        side = Fraction(side)
        return cls(center.translate(-side / 2), side)

    @property
    def dimension(self) -> int:
        return self.lower.dimension

    @property
    def upper(self) -> Tuple[Fraction, ...]:
        return tuple(c + self.side for c in self.lower.coords)

    @property
    def center(self) -> Point:
        return self.lower.translate(self.side / 2)

    def contains_point(self, x: Point) -> bool:
        _check_dimensions(self.dimension, x.dimension)
        return all(lo <= c < lo + self.side for lo, c in zip(self.lower.coords, x.coords))

    def intersects(self, other: "Box") -> bool:
        _check_dimensions(self.dimension, other.dimension)
        return all(
            a < b + other.side and b < a + self.side
            for a, b in zip(self.lower.coords, other.lower.coords)
        )

    def corners(self) -> Iterator[Point]:
        """The 2^n vertices of the closure."""
        for bits in product((0, 1), repeat=self.dimension):
            yield Point(tuple(lo + bit * self.side for lo, bit in zip(self.lower.coords, bits)))

    def to_json(self) -> Dict[str, Any]:
        return {"lower": self.lower.to_json(), "side": format_rational(self.side)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "Box":
        try:
            return cls(Point.parse(data["lower"]), parse_rational(data["side"]))
        except (KeyError, TypeError) as exc:
            raise InputFormatError(f"malformed box record {data!r}") from exc


@dataclass(frozen=True)
class Ball:
    center: Point
    radius: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius <= 0:
            raise HypothesisViolation(f"ball radius must be positive, got {self.radius}")

    @property
    def dimension(self) -> int:
        return self.center.dimension

    def to_json(self) -> Dict[str, Any]:
        return {"center": self.center.to_json(), "radius": format_rational(self.radius)}


def _check_dimensions(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatchError(f"dimension mismatch: {a} vs {b}")


def box_contains_box(outer: Box, inner: Box) -> bool:
    """True iff inner is a subset of outer as half-open sets."""
    _check_dimensions(outer.dimension, inner.dimension)
    return all(
        lo_out <= lo_in and lo_in + inner.side <= lo_out + outer.side
        for lo_out, lo_in in zip(outer.lower.coords, inner.lower.coords)
    )


def dilate(b: Box, factor: RationalLike) -> Box:
    """Concentric dilation: same center, side multiplied by factor >= 1."""
    factor = parse_rational(factor)
    if factor < 1:
        raise HypothesisViolation(f"dilation factor must be >= 1, got {factor}")
    grown = b.side * factor
    return Box(b.lower.translate(-(grown - b.side) / 2), grown)


def circumscribed_box(b: Ball) -> Box:
    return Box.centered(b.center, 2 * b.radius)


def bounding_box_side(points: Sequence[Point]) -> Fraction:
    """Sup-norm diameter of a finite point set."""
    if len(points) < 2:
        return Fraction(0)
    n = points[0].dimension
    return max(
        max(p[i] for p in points) - min(p[i] for p in points)
        for i in range(n)
    )
