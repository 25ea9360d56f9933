import random
from fractions import Fraction

import pytest

from dyadic_cz.backend_utils.acceptance_suite import (
    CriterionResult,
    _grid_problem,
    annuli_criterion,
    covering_criterion,
    decomposition_criterion,
    lattice_criterion,
    optimality_criterion,
    oracle_criterion,
    run_suite,
    weak11_criterion,
)
from dyadic_cz.backend_utils.czd import SmallestDoublingRSelector
from dyadic_cz.backend_utils.grids import CubeId, GridFamily


TINY = Fraction(1, 1000)


def test_criterion_result_bookkeeping():
    result = CriterionResult(9, "demo")
    assert not result.passed
    result.trials = 3
    assert result.passed
    for i in range(12):
        result.fail(f"case {i}")
    assert result.failures == 12
    assert len(result.examples) == 10
    assert result.to_json()["criterion"] == 9


def test_covering_criterion():
    result = covering_criterion(0, TINY, dimensions=(1, 2, 3))
    assert result.passed
    assert result.trials == 300
    assert set(result.details["max_side_ratio"]) == {"1", "2", "3"}


def test_optimality_criterion():
    result = optimality_criterion(0, TINY, dimensions=(1, 2, 3))
    assert result.passed
    assert result.trials == 2 + 3 + 4


def test_lattice_criterion():
    assert lattice_criterion(0, TINY, max_dimension=3, max_generation=6).passed


def test_decomposition_and_window_criteria():
    decomposition, robustness = decomposition_criterion(1, Fraction(1, 200))
    assert decomposition.number == 4 and robustness.number == 8
    assert decomposition.failures == 0 and robustness.failures == 0


def test_decomposition_with_the_smallest_selector():
    decomposition, _ = decomposition_criterion(2, Fraction(1, 500), selector=SmallestDoublingRSelector(), window_check=False)
    assert decomposition.failures == 0


def test_oracle_criterion():
    result = oracle_criterion(3, Fraction(1, 20))
    assert result.failures == 0


def test_annuli_criterion():
    result = annuli_criterion(4, Fraction(1, 200))
    assert result.passed
    assert result.details["max_chain_length"] >= 1


def test_weak11_criterion():
    result = weak11_criterion(5, Fraction(1, 20), min_atoms=20, max_atoms=60)
    assert result.trials > 0
    assert not any("invariant" in example for example in result.examples)
    assert result.details["summary"]["count"] == result.trials


@pytest.mark.parametrize("seed", [0])
def test_run_suite_is_reproducible(seed):
    first = run_suite(seed, Fraction(1, 100000), weak11_min_atoms=10, weak11_max_atoms=20)
    second = run_suite(seed, Fraction(1, 100000), weak11_min_atoms=10, weak11_max_atoms=20)
    assert [r.number for r in first] == [1, 2, 3, 4, 5, 6, 7, 8]
    assert [r.to_json() for r in first] == [r.to_json() for r in second]


def test_lattice_check_looks_at_every_corner(monkeypatch):
    family = GridFamily(2)
    cube = CubeId(2, -1, (3, -4))
    rng = random.Random(0)
    assert _grid_problem(family, cube, rng) is None
    lower = family.cube_box(cube).lower
    monkeypatch.setattr(family, "in_lattice", lambda x, k: x == lower)
    assert _grid_problem(family, cube, rng) == "corner off the lattice"


def test_lattice_check_samples_the_partition(monkeypatch):
    family = GridFamily(1)
    cube = CubeId(1, 2, (5,))
    child_corners = {family.cube_box(c).lower for c in family.children(cube)}
    located = family.locate

    def skewed(m, k, x):
        if k == cube.k and x not in child_corners:
            return CubeId(m, k, (cube.j[0] + 1,))
        return located(m, k, x)

    monkeypatch.setattr(family, "locate", skewed)
    assert _grid_problem(family, cube, random.Random(1)).startswith("locate misplaces")
