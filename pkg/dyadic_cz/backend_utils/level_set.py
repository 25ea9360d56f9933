import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from dyadic_cz.backend_utils.errors import HypothesisViolation, TheoremContradiction
from dyadic_cz.backend_utils.exact_powers import floor_log2, power_of_two
from dyadic_cz.backend_utils.geometry import Point, box_contains_box, dilate, format_rational, parse_rational
from dyadic_cz.backend_utils.grids import CubeId, GridFamily
from dyadic_cz.backend_utils.measure import DiscreteMeasure


"""
Maximal function M f(x) = sup over cubes Q of A containing x of (1/mu(2Q)) * int_Q f dmu,
and its level set {M f > lambda} written as a union of maximal heavy cubes.

Generation window [k_min, k_max]:
- k_max: 3 * 2^-k_max is below the smallest sup-distance between atoms. A cube
  of that size or smaller containing x has Q and 2Q inside the sup-ball of
  radius 1.5 * side around x, so both trap the single atom x and the ratio is
  f(x) for every deeper cube. Deeper cubes add nothing to the supremum and a
  deeper heavy cube always sits strictly inside its heavy k_max ancestor.
- k_min: 2^-k_min >= 2 * diam(support) and 2^-k_min >= 2 p * max|x|. Then 2Q
  swallows the support, and the support trace of Q no longer changes when
  climbing (shifted filtrations keep the origin 2^-k / p away from their
  boundaries; A_0 stays in one closed orthant). The ratio is at most
  ||f||_1 / ||mu|| < lambda there and constant, so the supremum and all heavy
  cubes live inside the window.
"""


@dataclass(frozen=True)
class GenerationWindow:
    k_min: int
    k_max: int

    @classmethod
    def for_measure(cls, mu: DiscreteMeasure, family: GridFamily, padding: int = 0) -> "GenerationWindow":
        gap = mu.min_sup_distance()
        if gap is None:
            k_max = 0
        else:
            e = floor_log2(gap / 3)
            k_max = -e if power_of_two(e) < gap / 3 else -e + 1

        reach = max(2 * mu.sup_diameter(), 2 * family.p * mu.sup_radius())
        if reach == 0:
            k_min = k_max
        else:
            e = floor_log2(reach)
            if power_of_two(e) < reach:
                e += 1
            k_min = min(-e, k_max)
        if padding < 0:
            raise HypothesisViolation(f"window padding must be nonnegative, got {padding}")
        window = cls(k_min - padding, k_max + padding)
        logging.debug("generation window [%d, %d] for %d atoms", window.k_min, window.k_max, len(mu))
        return window

    @property
    def generations(self) -> range:
        """Fine to coarse."""
        return range(self.k_max, self.k_min - 1, -1)

    def to_json(self) -> Dict[str, int]:
        return {"k_min": self.k_min, "k_max": self.k_max}


@dataclass(frozen=True)
class CubeStats:
    members: Tuple[int, ...]
    halo: Tuple[int, ...]
    ratio: Fraction


class CubeStatsCache:
    """Per-call memo of cube traces and ratios int_Q f / mu(2Q)."""

    def __init__(self, mu: DiscreteMeasure, family: GridFamily) -> None:
        self.mu = mu
        self.family = family
        self._stats: Dict[CubeId, CubeStats] = {}

    def __call__(self, cube: CubeId) -> CubeStats:
        found = self._stats.get(cube)
        if found is None:
            box = self.family.cube_box(cube)
            members = tuple(self.mu.atoms_in_box(box))
            halo = tuple(self.mu.atoms_in_box(dilate(box, 2)))
            atoms = self.mu.atoms
            top = sum((atoms[i].f * atoms[i].mass for i in members), Fraction(0))
            bottom = sum((atoms[i].mass for i in halo), Fraction(0))
            ratio = top / bottom if bottom else Fraction(0)
            found = CubeStats(members, halo, ratio)
            self._stats[cube] = found
        return found


def _resolve_atom(mu: DiscreteMeasure, x: Union[int, Point]) -> int:
    if isinstance(x, int):
        if not 0 <= x < len(mu):
            raise HypothesisViolation(f"atom index {x} out of range")
        return x
    index = mu.atom_index(x)
    if index is None:
        raise HypothesisViolation(f"{x.to_json()} is not in the support")
    return index


def maximal_function(
    mu: DiscreteMeasure,
    family: GridFamily,
    x: Union[int, Point],
    window: Optional[GenerationWindow] = None,
    cache: Optional[CubeStatsCache] = None,
) -> Fraction:
    """Exact M f at an atom (given by index or point)."""
    index = _resolve_atom(mu, x)
    window = window or GenerationWindow.for_measure(mu, family)
    cache = cache or CubeStatsCache(mu, family)
    point = mu.atoms[index].point
    return max(
        cache(family.locate(m, k, point)).ratio
        for m in family.filtrations
        for k in window.generations
    )


def check_threshold(mu: DiscreteMeasure, lam: Fraction) -> None:
    floor = mu.f_l1 / mu.total_mass
    if Fraction(lam) <= floor:
        raise HypothesisViolation(
            f"lambda={format_rational(lam)} must exceed ||f||_1/||mu|| = {format_rational(floor)}"
        )


def heavy_cubes(
    mu: DiscreteMeasure,
    family: GridFamily,
    lam: Fraction,
    window: Optional[GenerationWindow] = None,
    cache: Optional[CubeStatsCache] = None,
) -> List[CubeId]:
    """Heavy cubes of the window, one per (filtration, support trace) run.

    Along a chain, consecutive cubes with the same Q and 2Q support traces have
    the same ratio; only the coarsest of such a run is kept.
    """
    lam = Fraction(lam)
    check_threshold(mu, lam)
    window = window or GenerationWindow.for_measure(mu, family)
    cache = cache or CubeStatsCache(mu, family)
    found = set()
    for atom in mu.atoms:
        if atom.f == 0:
            continue
        for m in family.filtrations:
            previous: Optional[Tuple[CubeId, CubeStats]] = None
            for k in window.generations:
                cube = family.locate(m, k, atom.point)
                stats = cache(cube)
                if previous is not None:
                    prev_cube, prev_stats = previous
                    same_run = prev_stats.members == stats.members and prev_stats.halo == stats.halo
                    if not same_run and prev_stats.ratio > lam:
                        found.add(prev_cube)
                previous = (cube, stats)
            if previous is not None and previous[1].ratio > lam:
                found.add(previous[0])
    return sorted(found)


@dataclass(frozen=True)
class LevelSet:
    """Threshold, maximal heavy cubes Q_j, their atoms and the overlap count per atom."""

    lambda_level: Fraction
    cubes: Tuple[CubeId, ...]
    members: Tuple[Tuple[int, ...], ...]
    overlap: Tuple[int, ...]
    window: GenerationWindow

    def __len__(self) -> int:
        return len(self.cubes)

    @property
    def covered_atoms(self) -> List[int]:
        return [i for i, count in enumerate(self.overlap) if count > 0]

    def weight(self, j: int, atom: int) -> Fraction:
        """w_j = chi_Qj / sum_k chi_Qk at an atom."""
        if atom not in self.members[j]:
            return Fraction(0)
        return Fraction(1, self.overlap[atom])

    def to_json(self) -> Dict[str, Any]:
        return {
            "lambda": format_rational(self.lambda_level),
            "cubes": [c.to_json() for c in self.cubes],
            "members": [list(m) for m in self.members],
            "overlap": list(self.overlap),
            "window": self.window.to_json(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "LevelSet":
        return cls(
            parse_rational(data["lambda"]),
            tuple(CubeId.from_json(c) for c in data["cubes"]),
            tuple(tuple(int(i) for i in m) for m in data["members"]),
            tuple(int(c) for c in data["overlap"]),
            GenerationWindow(int(data["window"]["k_min"]), int(data["window"]["k_max"])),
        )


def maximal_heavy(
    mu: DiscreteMeasure,
    family: GridFamily,
    lam: Fraction,
    window: Optional[GenerationWindow] = None,
) -> LevelSet:
    lam = Fraction(lam)
    window = window or GenerationWindow.for_measure(mu, family)
    cache = CubeStatsCache(mu, family)
    heavy = heavy_cubes(mu, family, lam, window, cache)

    by_atom: Dict[int, List[CubeId]] = {}
    for cube in heavy:
        for atom in cache(cube).members:
            by_atom.setdefault(atom, []).append(cube)

    maximal: List[CubeId] = []
    for cube in heavy:
        box = family.cube_box(cube)
        anchor = cache(cube).members[0]
        dominated = any(
            other.k < cube.k and box_contains_box(family.cube_box(other), box)
            for other in by_atom[anchor]
        )
        if not dominated:
            maximal.append(cube)

    overlap = [0] * len(mu)
    members = []
    for cube in maximal:
        inside = cache(cube).members
        members.append(inside)
        for atom in inside:
            overlap[atom] += 1
    worst = max(overlap, default=0)
    if worst > family.filtration_count:
        raise TheoremContradiction(
            "maximal heavy cubes overlap more than n+1 times",
            {"overlap": worst, "cubes": [c.to_json() for c in maximal]},
        )
    logging.info("level set at lambda=%s: %d maximal heavy cubes", format_rational(lam), len(maximal))
    return LevelSet(lam, tuple(maximal), tuple(members), tuple(overlap), window)
