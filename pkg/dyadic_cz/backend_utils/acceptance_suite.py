import itertools
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Set, Tuple

from tqdm import tqdm

from dyadic_cz.backend_utils.covering import cover_ball, fits, is_uncovered, ratio_bound, uncovered_witness
from dyadic_cz.backend_utils.czd import CZDecomposition, RSelector, czd
from dyadic_cz.backend_utils.czd_verification import annuli_bound_check, verify_czd
from dyadic_cz.backend_utils.czo import KernelFactory, apply_truncated, summarize_statistics, weak11_statistic
from dyadic_cz.backend_utils.errors import DyadicError
from dyadic_cz.backend_utils.geometry import Point, box_contains_box, dilate
from dyadic_cz.backend_utils.grids import CubeId, GridFamily, corner_points, vertex_coordinates_disjoint
from dyadic_cz.backend_utils.instance_generators import (
    annuli_pair,
    lipschitz_graph_measure,
    random_ball,
    random_lambda,
    random_measure,
)
from dyadic_cz.backend_utils.level_set import GenerationWindow, check_threshold, maximal_function, maximal_heavy
from dyadic_cz.backend_utils.measure import DiscreteMeasure


"""
Acceptance battery. Each criterion draws its instances from its own seeded
stream (seed, criterion number), so criteria can run alone and still
reproduce. Trial counts are multiplied by a scale factor in (0, 1]; scale 1
is the full desk-scale run.
"""


@dataclass
class CriterionResult:
    number: int
    name: str
    trials: int = 0
    failures: int = 0
    details: Dict[str, Any] = field(default_factory=dict)
    examples: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.trials > 0

    def fail(self, message: str) -> None:
        self.failures += 1
        if len(self.examples) < 10:
            self.examples.append(message)

    def to_json(self) -> Dict[str, Any]:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "trials": self.trials,
            "failures": self.failures,
            "details": self.details,
            "examples": self.examples,
        }


def _scaled(count: int, scale: Fraction) -> int:
    return max(1, math.ceil(count * scale))


def _stream(seed: int, criterion: int) -> random.Random:
    return random.Random(f"{seed}:{criterion}")


##### ORACLES

def brute_force_maximal_heavy(
    mu: DiscreteMeasure,
    family: GridFamily,
    lam: Fraction,
    window: GenerationWindow,
) -> Set[CubeId]:
    """Every nonempty cube of every filtration in the window, filtered to inclusion-maximal heavy ones."""
    candidates = {
        family.locate(m, k, x)
        for m in family.filtrations
        for k in window.generations
        for x in mu.points
    }
    heavy = []
    for cube in candidates:
        box = family.cube_box(cube)
        bottom = mu.box_mass(dilate(box, 2))
        if bottom and mu.integral(box) > lam * bottom:
            heavy.append((cube, box))
    return {
        cube
        for cube, box in heavy
        if not any(other != cube and box_contains_box(other_box, box) for other, other_box in heavy)
    }


def level_set_identity_holds(mu: DiscreteMeasure, family: GridFamily, lam: Fraction, window: GenerationWindow) -> bool:
    level = maximal_heavy(mu, family, lam, window)
    above = {i for i in range(len(mu)) if maximal_function(mu, family, i, window) > lam}
    return above == set(level.covered_atoms)


def same_decomposition(a: CZDecomposition, b: CZDecomposition) -> bool:
    return (
        a.level_set.cubes == b.level_set.cubes
        and a.records == b.records
        and a.order == b.order
        and a.g == b.g
        and a.b == b.b
    )


##### CRITERIA

def covering_criterion(seed: int, scale: Fraction, dimensions=(1, 2, 3, 4, 5), balls: int = 100_000) -> CriterionResult:
    result = CriterionResult(1, "covering")
    rng = _stream(seed, 1)
    worst: Dict[str, str] = {}
    for n in dimensions:
        family = GridFamily(n)
        largest = Fraction(0)
        for _ in tqdm(range(_scaled(balls, scale)), desc=f"cover n={n}", leave=False):
            ball = random_ball(rng, n)
            result.trials += 1
            try:
                cover = cover_ball(family, ball)
            except DyadicError as exc:
                result.fail(f"n={n} ball {ball.to_json()}: {exc}")
                continue
            if not fits(family, cover.query, cover.cube):
                result.fail(f"n={n} ball {ball.to_json()}: cube {cover.cube.to_json()} does not fit, ratio {cover.side_ratio}")
            largest = max(largest, cover.side_ratio)
        worst[str(n)] = str(largest)
    result.details["max_side_ratio"] = worst
    return result


def optimality_criterion(seed: int, scale: Fraction, dimensions=(1, 2, 3, 4)) -> CriterionResult:
    result = CriterionResult(2, "optimality")
    for n in dimensions:
        family = GridFamily(n)
        for subset in itertools.combinations(family.filtrations, n):
            result.trials += 1
            try:
                ball = uncovered_witness(family, subset, ratio_bound(family))
            except DyadicError as exc:
                result.fail(f"n={n} subset {subset}: {exc}")
                continue
            if ball is None or not is_uncovered(family, subset, ball, ratio_bound(family)):
                result.fail(f"n={n} subset {subset}: no certified witness")
    return result


def lattice_criterion(seed: int, scale: Fraction, max_dimension: int = 5, max_generation: int = 20, samples: int = 20) -> CriterionResult:
    result = CriterionResult(3, "lattice")
    rng = _stream(seed, 3)
    per_generation = _scaled(samples, scale)
    for n in range(1, max_dimension + 1):
        family = GridFamily(n)
        for k in range(-max_generation, max_generation + 1):
            for m1, m2 in itertools.combinations(family.filtrations, 2):
                result.trials += 1
                if not vertex_coordinates_disjoint(family, m1, m2, k):
                    result.fail(f"n={n} k={k}: filtrations {m1}, {m2} share a vertex coordinate")
            for m in family.filtrations:
                for _ in range(per_generation):
                    result.trials += 1
                    cube = CubeId(m, k, tuple(rng.randint(-(1 << 16), 1 << 16) for _ in range(n)))
                    problem = _grid_problem(family, cube, rng)
                    if problem:
                        result.fail(f"n={n} {cube}: {problem}")
    return result


def _grid_problem(family: GridFamily, cube: CubeId, rng: random.Random, points: int = 4) -> Optional[str]:
    box = family.cube_box(cube)
    parent_box = family.cube_box(family.parent(cube))
    if not box_contains_box(parent_box, box) or parent_box.side != 2 * box.side:
        return "not nested in its parent"
    children = family.children(cube)
    if len(children) != 2 ** family.dimension or len(set(children)) != len(children):
        return "wrong number of children"
    child_boxes = [family.cube_box(c) for c in children]
    if any(not box_contains_box(box, c) or c.side * 2 != box.side for c in child_boxes):
        return "children do not tile the cube"
    if any(family.parent(c) != cube for c in children):
        return "child with a different parent"
    if any(not family.in_lattice(corner, cube.k) for corner in corner_points(family, [cube])):
        return "corner off the lattice"
    if family.locate(cube.m, cube.k, box.lower) != cube:
        return "locate disagrees with cube_box"
    denominator = 1 << 20
    for _ in range(points):
        x = Point(tuple(lo + box.side * Fraction(rng.randrange(denominator), denominator) for lo in box.lower.coords))
        if family.locate(cube.m, cube.k, x) != cube:
            return f"locate misplaces {x.to_json()}"
        for axis in range(family.dimension):
            for step in (-1, 1):
                j = list(cube.j)
                j[axis] += step
                if family.cube_box(CubeId(cube.m, cube.k, tuple(j))).contains_point(x):
                    return f"neighbour {j} also holds {x.to_json()}"
    return None


def decomposition_criterion(
    seed: int,
    scale: Fraction,
    instances: int = 1000,
    selector: Optional[RSelector] = None,
    window_padding: int = 0,
    window_check: bool = True,
) -> Tuple[CriterionResult, CriterionResult]:
    """Criteria 4 and 8 share their instances."""
    result = CriterionResult(4, "decomposition")
    robust = CriterionResult(8, "window_robustness")
    rng = _stream(seed, 4)
    total_pieces = 0
    for _ in tqdm(range(_scaled(instances, scale)), desc="czd", leave=False):
        n = rng.choice((1, 2))
        configuration = rng.choice(("uniform", "near_line", "clustered"))
        mu = random_measure(rng, n, rng.randint(20, 200), configuration)
        if mu.f_l1 == 0:
            continue
        lam = random_lambda(rng, mu)
        family = GridFamily(n)
        window = GenerationWindow.for_measure(mu, family, window_padding)
        result.trials += 1
        try:
            dec = czd(mu, family, lam, selector=selector, window=window)
        except DyadicError as exc:
            result.fail(f"czd raised {type(exc).__name__}: {exc}")
            continue
        report = verify_czd(mu, family, dec)
        total_pieces += len(dec.records)
        if not report.passed:
            result.fail(f"checks failed: {[c.name for c in report.failed]}")
        if window_check:
            robust.trials += 1
            wider = GenerationWindow(window.k_min - 5, window.k_max + 5)
            try:
                again = czd(mu, family, lam, selector=selector, window=wider)
            except DyadicError as exc:
                robust.fail(f"padded window raised {exc}")
                continue
            if not same_decomposition(dec, again):
                robust.fail(f"padded window changed the output at lambda={lam}")
    result.details["pieces"] = total_pieces
    return result, robust


def oracle_criterion(seed: int, scale: Fraction, instances: int = 200) -> CriterionResult:
    result = CriterionResult(5, "oracle")
    rng = _stream(seed, 5)
    for _ in tqdm(range(_scaled(instances, scale)), desc="oracle", leave=False):
        n = rng.choice((1, 2))
        mu = random_measure(rng, n, rng.randint(2, 30), rng.choice(("uniform", "near_line", "clustered")))
        if mu.f_l1 == 0:
            continue
        lam = random_lambda(rng, mu)
        family = GridFamily(n)
        window = GenerationWindow.for_measure(mu, family)
        result.trials += 1
        check_threshold(mu, lam)
        fast = set(maximal_heavy(mu, family, lam, window).cubes)
        slow = brute_force_maximal_heavy(mu, family, lam, window)
        if fast != slow:
            result.fail(f"maximal heavy mismatch at lambda={lam}: {len(fast)} vs {len(slow)}")
        if not level_set_identity_holds(mu, family, lam, window):
            result.fail(f"level set identity fails at lambda={lam}")
    return result


def annuli_criterion(seed: int, scale: Fraction, pairs: int = 1000) -> CriterionResult:
    result = CriterionResult(6, "annuli")
    rng = _stream(seed, 6)
    chain_lengths: List[int] = []
    for _ in tqdm(range(_scaled(pairs, scale)), desc="annuli", leave=False):
        result.trials += 1
        try:
            mu, family, q, r, params = annuli_pair(rng)
            report = annuli_bound_check(mu, family, q, r, params)
        except DyadicError as exc:
            result.fail(f"{type(exc).__name__}: {exc}")
            continue
        chain_lengths.append(report.values["N"])
        if not report.passed:
            result.fail(f"R={r}: {[c.name for c in report.failed]}")
    result.details["max_chain_length"] = max(chain_lengths, default=0)
    return result


def weak11_criterion(
    seed: int,
    scale: Fraction,
    instances: int = 100,
    min_atoms: int = 50,
    max_atoms: int = 500,
    lipschitz: Fraction = Fraction(1),
) -> CriterionResult:
    result = CriterionResult(7, "weak11")
    rng = _stream(seed, 7)
    kernel = KernelFactory.get_kernel("cauchy_real", 2, Fraction(1))
    statistics: List[float] = []
    count = _scaled(instances, scale)
    for index in tqdm(range(count), desc="weak11", leave=False):
        size = min_atoms + (max_atoms - min_atoms) * index // max(count - 1, 1)
        mu = lipschitz_graph_measure(rng, size, lipschitz)
        if mu.f_l1 == 0:
            continue
        result.trials += 1
        values = apply_truncated(mu, kernel)
        statistic = weak11_statistic(mu, values.values, mu.f_l1)
        doubled = [2 * f for f in mu.densities]
        scaled_values = apply_truncated(mu, kernel, values.eps, doubled)
        if weak11_statistic(mu, scaled_values.values, 2 * mu.f_l1) != statistic:
            result.fail(f"statistic not invariant under f -> 2f at {size} atoms")
        statistics.append(statistic)
    summary = summarize_statistics(statistics)
    result.details["summary"] = summary
    if summary and not summary["max_over_median"] < 10:
        result.fail(f"max/median {summary['max_over_median']:.3g} is not below 10")
    return result


def run_suite(
    seed: int,
    scale: Fraction = Fraction(1),
    selector: Optional[RSelector] = None,
    window_padding: int = 0,
    weak11_min_atoms: int = 50,
    weak11_max_atoms: int = 500,
    lipschitz: Fraction = Fraction(1),
) -> List[CriterionResult]:
    """Run criteria 1-8 and return their results in order."""
    scale = Fraction(scale)
    results = [covering_criterion(seed, scale), optimality_criterion(seed, scale), lattice_criterion(seed, scale)]
    decomposition, robustness = decomposition_criterion(seed, scale, selector=selector, window_padding=window_padding)
    results.append(decomposition)
    results.append(oracle_criterion(seed, scale))
    results.append(annuli_criterion(seed, scale))
    results.append(weak11_criterion(seed, scale, min_atoms=weak11_min_atoms, max_atoms=weak11_max_atoms, lipschitz=lipschitz))
    results.append(robustness)
    for r in results:
        logging.info("criterion %d (%s): %s, %d trials, %d failures", r.number, r.name, "pass" if r.passed else "FAIL", r.trials, r.failures)
    return results
