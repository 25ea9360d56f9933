import random
from fractions import Fraction
from typing import List, Optional, Tuple

from dyadic_cz.backend_utils.errors import HypothesisViolation
from dyadic_cz.backend_utils.exact_powers import power_of_two
from dyadic_cz.backend_utils.geometry import Ball, Box, Point
from dyadic_cz.backend_utils.grids import CubeId, GridFamily
from dyadic_cz.backend_utils.measure import Atom, DiscreteMeasure, DoublingParams, smallest_doubling_container


"""
Seeded random instances. Every generator takes a random.Random so runs are
reproducible; the value ranges are fixed here:

- coordinates: k / 2^8 with integer k uniform in [-2^12, 2^12]
- masses: a / b with a uniform in [1, 100], b uniform in [1, 10]
- densities: a / b with a uniform in [0, 50], b uniform in [1, 5]
- ball radii: log-uniform over [2^-40, 2^40), 20-bit mantissa
"""


CONFIGURATIONS = ("uniform", "near_line", "clustered")


def random_rational(rng: random.Random, bound: int = 1 << 12, denominator: int = 1 << 8) -> Fraction:
    return Fraction(rng.randint(-bound, bound), denominator)


def random_mass(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, 100), rng.randint(1, 10))


def random_density(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(0, 50), rng.randint(1, 5))


def random_densities(rng: random.Random, count: int) -> List[Fraction]:
    return [random_density(rng) for _ in range(count)]


def random_ball(rng: random.Random, dimension: int, min_exponent: int = -40, max_exponent: int = 40) -> Ball:
    """Center with 20-bit binary coordinates in [-2^10, 2^10], radius log-uniform over [2^min, 2^max)."""
    center = Point(tuple(Fraction(rng.randint(-(1 << 30), 1 << 30), 1 << 20) for _ in range(dimension)))
    exponent = rng.randint(min_exponent, max_exponent - 1)
    mantissa = Fraction(rng.randint(1 << 20, (1 << 21) - 1), 1 << 20)
    return Ball(center, mantissa * power_of_two(exponent))


def _distinct_points(rng: random.Random, count: int, draw) -> List[Point]:
    seen = set()
    points: List[Point] = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 100 * count:
            raise HypothesisViolation(f"could not draw {count} distinct points")
        point = draw()
        if point not in seen:
            seen.add(point)
            points.append(point)
    return points


def random_measure(
    rng: random.Random,
    dimension: int,
    count: int,
    configuration: str = "uniform",
    zero_density_rate: float = 0.1,
) -> DiscreteMeasure:
    """A random atomic measure with random nonnegative f.

    Configurations:
    - uniform: coordinates spread over [-16, 16]; growth dimension n.
    - near_line: points on the line y = x/2 plus tiny noise (n = 2), growth dimension 1.
    - clustered: a few tight clusters; growth dimension n.
    """
    if configuration not in CONFIGURATIONS:
        raise HypothesisViolation(f"unknown configuration {configuration!r}")
    growth_dim = Fraction(dimension)

    if configuration == "near_line" and dimension >= 2:
        growth_dim = Fraction(1)

        def draw() -> Point:
            t = random_rational(rng)
            noise = [Fraction(rng.randint(-4, 4), 1 << 16) for _ in range(dimension - 1)]
            return Point((t, t / 2 + noise[0], *noise[1:]))

    elif configuration == "clustered":
        centers = [Point(tuple(random_rational(rng) for _ in range(dimension))) for _ in range(rng.randint(2, 4))]

        def draw() -> Point:
            base = rng.choice(centers)
            return Point(tuple(c + Fraction(rng.randint(-64, 64), 1 << 12) for c in base.coords))

    else:

        def draw() -> Point:
            return Point(tuple(random_rational(rng) for _ in range(dimension)))

    points = _distinct_points(rng, count, draw)
    atoms = tuple(
        Atom(p, random_mass(rng), Fraction(0) if rng.random() < zero_density_rate else random_density(rng))
        for p in points
    )
    return DiscreteMeasure(dimension, atoms, growth_dim)


def random_lambda(rng: random.Random, mu: DiscreteMeasure) -> Fraction:
    """A threshold strictly above ||f||_1 / ||mu||, between 1.01 and 6 times it."""
    floor = mu.f_l1 / mu.total_mass
    if floor == 0:
        return Fraction(rng.randint(1, 100), 100)
    return floor * Fraction(rng.randint(101, 600), 100)


def lipschitz_graph_measure(
    rng: random.Random,
    count: int,
    lipschitz: Fraction = Fraction(1),
    knots: int = 8,
) -> DiscreteMeasure:
    """Atoms on the graph of a random piecewise linear function over [0, 1] in the plane.

    Slopes are rationals in [-lipschitz, lipschitz]; the mass of an atom is its
    local spacing (half the gap between its neighbours), so the measure has
    linear growth. f is random in [0, 1].
    """
    lipschitz = Fraction(lipschitz)
    scale = 1 << 20
    abscissae = sorted(Fraction(t, scale) for t in rng.sample(range(scale + 1), count))
    slopes = [lipschitz * Fraction(rng.randint(-64, 64), 64) for _ in range(knots)]

    def height(t: Fraction) -> Fraction:
        y = Fraction(0)
        for piece, slope in enumerate(slopes):
            start = Fraction(piece, knots)
            if t <= start:
                break
            y += slope * (min(t, Fraction(piece + 1, knots)) - start)
        return y

    atoms = []
    for i, t in enumerate(abscissae):
        left = abscissae[i - 1] if i > 0 else t
        right = abscissae[i + 1] if i + 1 < count else t
        spacing = (right - left) / 2 if count > 1 else Fraction(1)
        if spacing == 0:
            spacing = Fraction(1, scale)
        atoms.append(Atom(Point((t, height(t))), spacing, Fraction(rng.randint(0, 64), 64)))
    return DiscreteMeasure(2, tuple(atoms), Fraction(1))


def annuli_pair(
    rng: random.Random,
    count: int = 40,
    params: Optional[DoublingParams] = None,
) -> Tuple[DiscreteMeasure, GridFamily, Box, CubeId, DoublingParams]:
    """A line-supported measure (n = 2, d = 1), a box Q around one of its atoms,
    and R = the smallest doubling cube of the family containing Q.

    No doubling cube strictly smaller than R contains Q, so the pair satisfies
    the annuli precondition by construction.
    """
    mu = random_measure(rng, 2, count, "near_line")
    family = GridFamily(2)
    params = params or DoublingParams.default(family, mu.growth_dim)
    anchor = rng.choice(mu.points)
    side = Fraction(rng.randint(1, 1 << 8), 1 << 12)
    q = Box.centered(anchor, side)
    r = smallest_doubling_container(mu, family, q, params)
    return mu, family, q, r, params
