import random
from fractions import Fraction

import pytest

from dyadic_cz.backend_utils.errors import HypothesisViolation
from dyadic_cz.backend_utils.geometry import box_contains_box
from dyadic_cz.backend_utils.instance_generators import (
    CONFIGURATIONS,
    annuli_pair,
    lipschitz_graph_measure,
    random_ball,
    random_lambda,
    random_measure,
)
from dyadic_cz.backend_utils.measure import is_doubling


@pytest.mark.parametrize("configuration", CONFIGURATIONS)
def test_random_measure_is_reproducible(configuration):
    first = random_measure(random.Random(3), 2, 25, configuration)
    second = random_measure(random.Random(3), 2, 25, configuration)
    assert first == second
    assert len(first) == 25


def test_near_line_has_linear_growth_dimension():
    assert random_measure(random.Random(0), 2, 10, "near_line").growth_dim == 1
    assert random_measure(random.Random(0), 3, 10, "uniform").growth_dim == 3


def test_unknown_configuration():
    with pytest.raises(HypothesisViolation):
        random_measure(random.Random(0), 2, 10, "spiral")


def test_random_ball_radius_range():
    rng = random.Random(1)
    for _ in range(200):
        ball = random_ball(rng, 3)
        assert Fraction(1, 2**40) <= ball.radius < Fraction(2**40)
        assert ball.dimension == 3


def test_random_lambda_exceeds_the_mean():
    rng = random.Random(5)
    for _ in range(20):
        mu = random_measure(rng, 1, 15)
        lam = random_lambda(rng, mu)
        assert lam > mu.f_l1 / mu.total_mass


def test_lipschitz_graph_measure():
    mu = lipschitz_graph_measure(random.Random(2), 50, Fraction(2))
    assert mu.dimension == 2 and mu.growth_dim == 1
    xs = [p[0] for p in mu.points]
    assert xs == sorted(xs)
    assert all(0 <= x <= 1 for x in xs)
    for a, b in zip(mu.points, mu.points[1:]):
        assert abs(b[1] - a[1]) <= 2 * (b[0] - a[0])
    assert mu.total_mass <= 1


def test_annuli_pair_contract():
    mu, family, q, r, params = annuli_pair(random.Random(11), count=15)
    r_box = family.cube_box(r)
    assert box_contains_box(r_box, q)
    assert is_doubling(mu, r_box, params)
    assert mu.atom_index(q.center) is not None
