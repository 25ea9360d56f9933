import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_measure
from dyadic_cz.backend_utils.acceptance_suite import brute_force_maximal_heavy, level_set_identity_holds
from dyadic_cz.backend_utils.errors import HypothesisViolation
from dyadic_cz.backend_utils.geometry import Box, Point, dilate
from dyadic_cz.backend_utils.grids import CubeId, GridFamily
from dyadic_cz.backend_utils.instance_generators import random_lambda, random_measure
from dyadic_cz.backend_utils.level_set import (
    GenerationWindow,
    LevelSet,
    check_threshold,
    heavy_cubes,
    maximal_function,
    maximal_heavy,
)


def test_window_of_three_atoms(three_atoms, line):
    window = GenerationWindow.for_measure(three_atoms, line)
    assert window == GenerationWindow(-5, 4)
    assert 3 * Fraction(1, 2**window.k_max) < three_atoms.min_sup_distance()
    # k_max is the smallest such generation: 3/8 is not below the gap 1/4
    assert 3 * Fraction(1, 2 ** (window.k_max - 1)) >= three_atoms.min_sup_distance()
    assert list(window.generations)[0] == 4
    assert GenerationWindow.for_measure(three_atoms, line, 2) == GenerationWindow(-7, 6)


def test_window_of_a_single_atom_at_the_origin(line):
    mu = make_measure(1, [((0,), 1, 1)])
    assert GenerationWindow.for_measure(mu, line) == GenerationWindow(0, 0)


def test_negative_padding_rejected(three_atoms, line):
    with pytest.raises(HypothesisViolation):
        GenerationWindow.for_measure(three_atoms, line, -1)


def test_maximal_function_values(three_atoms, line):
    assert maximal_function(three_atoms, line, 0) == 10
    assert maximal_function(three_atoms, line, Point.of("1/4")) == 5
    # [0, 8) holds atoms 0 and 4 while its double holds all three
    assert maximal_function(three_atoms, line, 2) == Fraction(11, 3)


def test_maximal_function_needs_an_atom(three_atoms, line):
    with pytest.raises(HypothesisViolation):
        maximal_function(three_atoms, line, Point.of(1))
    with pytest.raises(HypothesisViolation):
        maximal_function(three_atoms, line, 3)


def test_threshold_must_exceed_the_mean(three_atoms):
    with pytest.raises(HypothesisViolation):
        check_threshold(three_atoms, Fraction(11, 3))
    check_threshold(three_atoms, Fraction(4))


def test_maximal_heavy_cubes_of_three_atoms(three_atoms, line):
    level = maximal_heavy(three_atoms, line, Fraction(4))
    assert level.cubes == (CubeId(0, -1, (0,)), CubeId(1, -2, (0,)))
    assert level.members == ((0, 1), (0, 1))
    assert level.overlap == (2, 2, 0)
    assert level.covered_atoms == [0, 1]
    assert level.weight(0, 0) == Fraction(1, 2)
    assert level.weight(0, 2) == 0


def test_higher_threshold_isolates_the_heavy_atom(three_atoms, line):
    level = maximal_heavy(three_atoms, line, Fraction(8))
    assert level.cubes == (CubeId(0, 3, (0,)), CubeId(1, 2, (-2,)))
    assert level.covered_atoms == [0]


def test_heavy_cubes_are_heavy(three_atoms, line):
    for cube in heavy_cubes(three_atoms, line, Fraction(4)):
        box = line.cube_box(cube)
        assert three_atoms.integral(box) > 4 * three_atoms.box_mass(dilate(box, 2))


def test_empty_level_set_for_constant_density(line):
    mu = make_measure(1, [((i,), 1, 1) for i in range(5)])
    assert len(maximal_heavy(mu, line, Fraction(2))) == 0


def test_level_set_json(three_atoms, line):
    level = maximal_heavy(three_atoms, line, Fraction(4))
    data = level.to_json()
    assert data["lambda"] == "4"
    assert data["window"] == {"k_min": -5, "k_max": 4}
    assert LevelSet.from_json(data) == level


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=10**6), st.sampled_from([1, 2]), st.sampled_from(["uniform", "near_line", "clustered"]))
def test_maximal_heavy_matches_brute_force(seed, n, configuration):
    rng = random.Random(seed)
    mu = random_measure(rng, n, rng.randint(2, 15), configuration)
    if mu.f_l1 == 0:
        return
    family = GridFamily(n)
    lam = random_lambda(rng, mu)
    window = GenerationWindow.for_measure(mu, family)
    level = maximal_heavy(mu, family, lam, window)
    assert set(level.cubes) == brute_force_maximal_heavy(mu, family, lam, window)
    assert level_set_identity_holds(mu, family, lam, window)
    assert max(level.overlap) <= family.filtration_count


@settings(max_examples=10)
@given(st.integers(min_value=0, max_value=10**6))
def test_padding_does_not_change_the_level_set(seed):
    rng = random.Random(seed)
    mu = random_measure(rng, 2, 12, "clustered")
    if mu.f_l1 == 0:
        return
    family = GridFamily(2)
    lam = random_lambda(rng, mu)
    plain = maximal_heavy(mu, family, lam, GenerationWindow.for_measure(mu, family))
    padded = maximal_heavy(mu, family, lam, GenerationWindow.for_measure(mu, family, 4))
    assert plain.cubes == padded.cubes


def test_maximal_function_of_two_atoms(line):
    mu = make_measure(1, [((0,), 1, 4), ((1,), 1, 0)])
    assert maximal_function(mu, line, 0) == 4
    # the best cube at 1 holds both atoms: 4 / mu(2Q) = 4 / 2
    assert maximal_function(mu, line, 1) == 2
    assert maximal_function(mu, line, Point.of(1)) == 2


def test_level_set_leaves_the_far_atom_out(line):
    mu = make_measure(1, [((0,), 1, 10), (("1/100",), 1, 10), ((10,), 1, "1/10")])
    level = maximal_heavy(mu, line, Fraction(8))
    # [-8/3, 16/3) swallows the A_0 cube [0, 4); its double stops short of 10
    assert level.cubes == (CubeId(1, -3, (0,)),)
    assert line.cube_box(level.cubes[0]) == Box(Point.of("-8/3"), Fraction(8))
    assert level.members == ((0, 1),)
    assert level.overlap == (1, 1, 0)
    assert set(level.cubes) == brute_force_maximal_heavy(mu, line, Fraction(8), level.window)
