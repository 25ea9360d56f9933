import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional

from dyadic_cz.backend_utils.errors import (
    DimensionMismatchError,
    HypothesisViolation,
    InputFormatError,
    TheoremContradiction,
)
from dyadic_cz.backend_utils.exact_powers import floor_log2, power_of_two
from dyadic_cz.backend_utils.geometry import (
    Ball,
    Box,
    Point,
    box_contains_box,
    circumscribed_box,
    format_rational,
)
from dyadic_cz.backend_utils.grids import CubeId, GridFamily


"""
Covering queries over the n+1 filtrations.

For a box R of side s, generation k0 is fixed by 2^(-k0-1)/p <= s < 2^(-k0)/p.
At that generation every vertex of every filtration lies on the lattice
J_k0 = (2^-k0 / p) Z^n, whose points are further apart than s. So R meets the
vertex projections of at most one filtration per axis, and by pigeonhole one of
the n+1 filtrations has a cube of A_m(k0) containing R. cover_box tries
m = 0, 1, ..., n in order and returns the first hit.

The ratio bound side(Q) <= 2p * side(R) is the exact side-length form of the
diameter bound diam(Q) <= 2p sqrt(n) diam(B).

uncovered_witness goes the other way: for n of the filtrations it finds a
small ball that none of them covers within a given ratio, showing that n+1
filtrations are needed.
"""


@dataclass(frozen=True)
class CoverResult:
    cube: CubeId
    k0: int
    side_ratio: Fraction
    query: Box

    def to_json(self, family: GridFamily) -> Dict[str, Any]:
        return {
            "cube": self.cube.to_json(),
            "box": family.cube_box(self.cube).to_json(),
            "k0": self.k0,
            "side_ratio": format_rational(self.side_ratio),
            "query": self.query.to_json(),
        }


def ratio_bound(family: GridFamily) -> Fraction:
    """Largest side(Q)/side(R) a covering cube may have: 2p."""
    return Fraction(2 * family.p)


def safe_covering_constant(family: GridFamily) -> Fraction:
    """c* = 3p * r_n with r_n = ceil(256 sqrt(n)) / 256 >= sqrt(n)."""
    scaled = 65536 * family.dimension
    root = math.isqrt(scaled)
    if root * root < scaled:
        root += 1
    return 3 * family.p * Fraction(root, 256)


def fit_scale(family: GridFamily, side: Fraction) -> int:
    """The unique k0 with 2^(-k0-1)/p <= side < 2^(-k0)/p."""
    side = Fraction(side)
    if side <= 0:
        raise HypothesisViolation(f"fit_scale needs a positive side, got {side}")
    # 2^-k0 is the largest power of two <= 2 p side, and it exceeds p side
    return -floor_log2(2 * family.p * side)


def fits(family: GridFamily, query: Box, cube: CubeId) -> bool:
    box = family.cube_box(cube)
    return box_contains_box(box, query) and box.side <= ratio_bound(family) * query.side


def cover_box(family: GridFamily, b: Box) -> CoverResult:
    if b.dimension != family.dimension:
        raise DimensionMismatchError(f"box of dimension {b.dimension} in a family of dimension {family.dimension}")
    k0 = fit_scale(family, b.side)
    for m in family.filtrations:
        cube = family.locate(m, k0, b.lower)
        if box_contains_box(family.cube_box(cube), b):
            ratio = cube.side() / b.side
            if ratio > ratio_bound(family):
                raise TheoremContradiction(
                    "covering cube exceeds the 2p side ratio",
                    {"query": b.to_json(), "cube": cube.to_json(), "ratio": format_rational(ratio)},
                )
            return CoverResult(cube, k0, ratio, b)
    raise TheoremContradiction(
        "no filtration covers the query box at generation k0",
        {"query": b.to_json(), "k0": k0, "dimension": family.dimension},
    )


def cover_ball(family: GridFamily, ball: Ball) -> CoverResult:
    return cover_box(family, circumscribed_box(ball))


##### OPTIMALITY WITNESS

def _ceil_log2(x: Fraction) -> int:
    e = floor_log2(x)
    return e if power_of_two(e) == x else e + 1


def is_uncovered(family: GridFamily, subset: Iterable[int], ball: Ball, max_ratio: Fraction) -> bool:
    """No cube of the subset contains the ball with side <= max_ratio * side(R_B).

    Only generations with side(R_B) <= 2^-k <= max_ratio * side(R_B) can do it:
    larger cubes break the ratio, smaller ones cannot contain R_B.
    """
    box = circumscribed_box(ball)
    largest = max_ratio * box.side
    if largest < box.side:
        return True
    k_fine = -_ceil_log2(box.side)
    k_coarse = -floor_log2(largest)
    for m in subset:
        for k in range(k_coarse, k_fine + 1):
            if box_contains_box(family.cube_box(family.locate(m, k, box.lower)), box):
                return False
    return True


def uncovered_witness(
    family: GridFamily,
    subset: Iterable[int],
    max_ratio: Fraction,
    max_halvings: int = 128,
) -> Optional[Ball]:
    """Find a ball that the given filtrations cannot cover within max_ratio.

    The center puts axis i on a generation-0 boundary hyperplane of the i-th
    filtration of the subset, so every cube of side <= 1 of those filtrations
    has a face through the center. The radius is halved until the exact
    certificate holds.

    Returns:
    Ball or None: None only when the subset is the whole family and the
    search budget ran out, since all n+1 filtrations together cover every ball.
    """
    members: List[int] = sorted(set(subset))
    if not members:
        raise InputFormatError("witness search needs at least one filtration")
    for m in members:
        if not 0 <= m <= family.dimension:
            raise InputFormatError(f"filtration index {m} outside 0..{family.dimension}")
    max_ratio = Fraction(max_ratio)

    axes = [members[i] if i < len(members) else members[0] for i in range(family.dimension)]
    center = Point(tuple(family.offset(m, 0) for m in axes))
    radius = Fraction(1, 2)
    for _ in range(max_halvings):
        ball = Ball(center, radius)
        if is_uncovered(family, members, ball, max_ratio):
            logging.info("witness for filtrations %s: center %s radius %s", members, center.to_json(), radius)
            return ball
        radius /= 2

    if len(members) <= family.dimension:
        raise TheoremContradiction(
            "witness search exhausted its budget on a proper subset",
            {"subset": members, "max_ratio": format_rational(max_ratio), "halvings": max_halvings},
        )
    logging.info("no witness for the full family %s at ratio %s", members, max_ratio)
    return None
