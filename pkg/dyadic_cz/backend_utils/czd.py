import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from dyadic_cz.backend_utils.covering import cover_box
from dyadic_cz.backend_utils.errors import HypothesisViolation, InputFormatError, TheoremContradiction
from dyadic_cz.backend_utils.geometry import box_contains_box, dilate, format_rational, parse_rational
from dyadic_cz.backend_utils.grids import CubeId, GridFamily
from dyadic_cz.backend_utils.level_set import (
    GenerationWindow,
    LevelSet,
    check_threshold,
    maximal_heavy,
)
from dyadic_cz.backend_utils.measure import (
    DiscreteMeasure,
    DoublingParams,
    doubling_ancestor,
    is_doubling,
    smallest_doubling_container,
)


"""
In this file the dyadic nondoubling Calderon-Zygmund decomposition is implemented.

Steps of czd():
1- Level set: maximal heavy cubes Q_j with overlap weights w_j (level_set.py).
2- R_j: an (alpha, beta)-doubling cube of the family with 3Q_j inside, chosen by an RSelector.
3- Order: R_j sorted by side length (then m, k, j of R_j, then Q_j) so sides never decrease.
4- Induction: for each R_l, the earlier R_s meeting it define a partial sum of phi_s.
   A_l is the part of R_l where that partial sum is <= 2 beta lambda, and
   gamma_l = (int f w_l dmu) / mu(A_l). The construction asserts
   mu(A_l) >= mu(R_l)/2 and gamma_l <= 2 beta lambda; a failure means the
   constants are misconfigured and is never clamped away.
5- g = f on atoms outside every Q_j plus sum phi_j, b = sum (f w_j - phi_j).

Design:
The R_j selection follows the strategy pattern. To add a selector, subclass
RSelector, implement select(), and register it in RSelectorFactory.
The induction itself is order dependent and runs single threaded.
"""


class RSelector(ABC):
    """Strategy choosing the doubling cube R_j around a maximal heavy cube Q_j."""

    name = "abstract"

    @abstractmethod
    def select(self, mu: DiscreteMeasure, family: GridFamily, q: CubeId, params: DoublingParams) -> CubeId:
        """Return an (alpha, beta)-doubling cube of the family containing 3Q."""


class DefaultRSelector(RSelector):
    """Cover 3Q_j by one cube of the family, then climb to the first doubling ancestor."""

    name = "default"

    def __init__(self, step_limit: int = 4096) -> None:
        self.step_limit = step_limit

    def select(self, mu: DiscreteMeasure, family: GridFamily, q: CubeId, params: DoublingParams) -> CubeId:
        covering = cover_box(family, dilate(family.cube_box(q), 3)).cube
        return doubling_ancestor(mu, family, covering, params, self.step_limit)


class SmallestDoublingRSelector(RSelector):
    """Smallest doubling cube of any filtration containing 3Q_j."""

    name = "smallest"

    def __init__(self, step_limit: int = 4096) -> None:
        self.step_limit = step_limit

    def select(self, mu: DiscreteMeasure, family: GridFamily, q: CubeId, params: DoublingParams) -> CubeId:
        return smallest_doubling_container(mu, family, dilate(family.cube_box(q), 3), params, self.step_limit)


class RSelectorFactory:
    """Factory for R selectors by name."""

    @staticmethod
    def get_selector(name: str, step_limit: int = 4096) -> RSelector:
        if name == DefaultRSelector.name:
            return DefaultRSelector(step_limit)
        elif name == SmallestDoublingRSelector.name:
            return SmallestDoublingRSelector(step_limit)
        else:
            raise InputFormatError(f"unknown R selector {name!r}")


def default_r_selector(mu: DiscreteMeasure, family: GridFamily, q: CubeId, params: DoublingParams) -> CubeId:
    return DefaultRSelector().select(mu, family, q, params)


@dataclass(frozen=True)
class CZRecord:
    """One piece of the decomposition: phi_j = gamma_j * chi_{A_j}."""

    q: CubeId
    r: CubeId
    atoms: Tuple[int, ...]
    gamma: Fraction
    target: Fraction
    s_cube: Optional[CubeId] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "Q": self.q.to_json(),
            "R": self.r.to_json(),
            "A": list(self.atoms),
            "gamma": format_rational(self.gamma),
            "target": format_rational(self.target),
            "S": self.s_cube.to_json() if self.s_cube is not None else None,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CZRecord":
        try:
            return cls(
                CubeId.from_json(data["Q"]),
                CubeId.from_json(data["R"]),
                tuple(int(i) for i in data["A"]),
                parse_rational(data["gamma"]),
                parse_rational(data["target"]),
                CubeId.from_json(data["S"]) if data.get("S") is not None else None,
            )
        except (KeyError, TypeError) as exc:
            raise InputFormatError(f"malformed decomposition record {data!r}") from exc


@dataclass(frozen=True)
class CZDecomposition:
    level_set: LevelSet
    params: DoublingParams
    records: Tuple[CZRecord, ...]
    order: Tuple[int, ...]
    g: Tuple[Fraction, ...]
    b: Tuple[Fraction, ...]
    selector: str = DefaultRSelector.name

    @property
    def lambda_level(self) -> Fraction:
        return self.level_set.lambda_level

    def phi(self, j: int, atom: int) -> Fraction:
        record = self.records[j]
        return record.gamma if atom in record.atoms else Fraction(0)

    def phi_sum(self, atom: int) -> Fraction:
        return sum((r.gamma for r in self.records if atom in r.atoms), Fraction(0))

    def to_json(self) -> Dict[str, Any]:
        return {
            "level_set": self.level_set.to_json(),
            "params": self.params.to_json(),
            "records": [r.to_json() for r in self.records],
            "order": list(self.order),
            "g": [format_rational(v) for v in self.g],
            "b": [format_rational(v) for v in self.b],
            "selector": self.selector,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CZDecomposition":
        try:
            return cls(
                LevelSet.from_json(data["level_set"]),
                DoublingParams.from_json(data["params"]),
                tuple(CZRecord.from_json(r) for r in data["records"]),
                tuple(int(i) for i in data["order"]),
                tuple(parse_rational(v) for v in data["g"]),
                tuple(parse_rational(v) for v in data["b"]),
                str(data.get("selector", DefaultRSelector.name)),
            )
        except (KeyError, TypeError) as exc:
            raise InputFormatError(f"malformed decomposition: {exc}") from exc


def overlap_targets(mu: DiscreteMeasure, level: LevelSet) -> List[Fraction]:
    """int f w_j dmu for every j."""
    atoms = mu.atoms
    return [
        sum((atoms[i].f * atoms[i].mass / level.overlap[i] for i in inside), Fraction(0))
        for inside in level.members
    ]


def _validated_r(
    mu: DiscreteMeasure,
    family: GridFamily,
    selector: RSelector,
    q: CubeId,
    params: DoublingParams,
) -> CubeId:
    r = selector.select(mu, family, q, params)
    box = family.cube_box(r)
    if not box_contains_box(box, dilate(family.cube_box(q), 3)):
        raise HypothesisViolation(f"selector {selector.name} returned {r} which does not contain 3Q for {q}")
    if not is_doubling(mu, box, params):
        raise HypothesisViolation(f"selector {selector.name} returned the non-doubling cube {r}")
    return r


def czd(
    mu: DiscreteMeasure,
    family: GridFamily,
    lam: Fraction,
    params: Optional[DoublingParams] = None,
    selector: Optional[RSelector] = None,
    window: Optional[GenerationWindow] = None,
) -> CZDecomposition:
    """Decompose f = g + b at level lambda.

    Parameters:
    mu (DiscreteMeasure): measure carrying the nonnegative density f.
    family (GridFamily): the n+1 filtrations.
    lam (Fraction): threshold, must exceed ||f||_1 / ||mu||.
    params (DoublingParams): alpha, beta; defaults to the safe constants of the family.
    selector (RSelector): R_j strategy; defaults to cover-then-ascend.
    window (GenerationWindow): generation window; defaults to the one derived from mu.

    Returns:
    CZDecomposition: records per Q_j and the values of g and b at every atom.
    """
    lam = Fraction(lam)
    check_threshold(mu, lam)
    params = params or DoublingParams.default(family, mu.growth_dim)
    selector = selector or DefaultRSelector()
    level = maximal_heavy(mu, family, lam, window)
    atoms = mu.atoms

    if not level.cubes:
        logging.info("empty level set: g = f, b = 0")
        return CZDecomposition(level, params, (), (), tuple(a.f for a in atoms), tuple(Fraction(0) for _ in atoms), selector.name)

    targets = overlap_targets(mu, level)
    rs = [_validated_r(mu, family, selector, q, params) for q in level.cubes]
    r_boxes = [family.cube_box(r) for r in rs]
    order = sorted(
        range(len(rs)),
        key=lambda j: (rs[j].side(), rs[j].m, rs[j].k, rs[j].j, level.cubes[j]),
    )

    cap = 2 * params.beta * lam
    chosen: Dict[int, Tuple[Tuple[int, ...], Fraction]] = {}
    done: List[int] = []
    for ell in order:
        inside = mu.atoms_in_box(r_boxes[ell])
        inside_set = set(inside)
        partial: Dict[int, Fraction] = {}
        for s in done:
            if not r_boxes[s].intersects(r_boxes[ell]):
                continue
            a_s, gamma_s = chosen[s]
            for i in a_s:
                if i in inside_set:
                    partial[i] = partial.get(i, Fraction(0)) + gamma_s
        a_ell = tuple(i for i in inside if partial.get(i, Fraction(0)) <= cap)
        mass_r = sum((atoms[i].mass for i in inside), Fraction(0))
        mass_a = sum((atoms[i].mass for i in a_ell), Fraction(0))
        if 2 * mass_a < mass_r:
            raise TheoremContradiction(
                "mu(A_l) < mu(R_l)/2",
                {"l": ell, "R": rs[ell].to_json(), "mu_A": format_rational(mass_a), "mu_R": format_rational(mass_r)},
            )
        gamma = targets[ell] / mass_a
        if gamma > cap:
            raise TheoremContradiction(
                "gamma_l exceeds 2 beta lambda",
                {"l": ell, "gamma": format_rational(gamma), "cap": format_rational(cap)},
            )
        chosen[ell] = (a_ell, gamma)
        done.append(ell)

    records = tuple(
        CZRecord(
            level.cubes[j],
            rs[j],
            chosen[j][0],
            chosen[j][1],
            targets[j],
            cover_box(family, dilate(r_boxes[j], 3)).cube,
        )
        for j in range(len(rs))
    )

    phi_sum = [Fraction(0)] * len(atoms)
    weight_sum = [Fraction(0)] * len(atoms)
    for j, record in enumerate(records):
        for i in record.atoms:
            phi_sum[i] += record.gamma
        for i in level.members[j]:
            weight_sum[i] += level.weight(j, i)
    g = tuple(
        (atoms[i].f if level.overlap[i] == 0 else Fraction(0)) + phi_sum[i]
        for i in range(len(atoms))
    )
    b = tuple(atoms[i].f * weight_sum[i] - phi_sum[i] for i in range(len(atoms)))
    logging.info("decomposition built: %d pieces, cap 2*beta*lambda=%s", len(records), format_rational(cap))
    return CZDecomposition(level, params, records, tuple(order), g, b, selector.name)
