import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from dyadic_cz.backend_utils.covering import cover_box, safe_covering_constant
from dyadic_cz.backend_utils.czd import CZDecomposition
from dyadic_cz.backend_utils.errors import HypothesisViolation, TheoremContradiction
from dyadic_cz.backend_utils.exact_powers import (
    DEFAULT_PRECISION_BITS,
    distance_power,
    floor_log2,
    power_of_two,
    rational_power,
)
from dyadic_cz.backend_utils.geometry import Box, box_contains_box, dilate, format_rational
from dyadic_cz.backend_utils.grids import CubeId, GridFamily
from dyadic_cz.backend_utils.measure import DiscreteMeasure, DoublingParams, is_doubling


"""
Exhaustive verification of a decomposition, plus the annuli-bound diagnostic.

Every check is an exact rational comparison. A check records its worst slack
(rhs - lhs over all instances, 0 for identities) and the first few failures.
Failures are reported, never raised: the caller turns them into an exit code.
"""


MAX_LISTED_FAILURES = 20


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    slack: Optional[Fraction]
    failure_count: int = 0
    failures: Tuple[str, ...] = ()

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "slack": format_rational(self.slack) if self.slack is not None else None,
            "failure_count": self.failure_count,
            "failures": list(self.failures),
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: Tuple[CheckResult, ...]
    values: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "values": dict(self.values),
        }


class _Check:
    """Accumulates comparisons for one named check."""

    def __init__(self, name: str) -> None:
        self.name = name
        self.slack: Optional[Fraction] = None
        self.failures: List[str] = []
        self.failure_count = 0

    def _record(self, slack: Fraction) -> None:
        if self.slack is None or slack < self.slack:
            self.slack = slack

    def _fail(self, message: str) -> None:
        self.failure_count += 1
        if len(self.failures) < MAX_LISTED_FAILURES:
            self.failures.append(message)

    def leq(self, lhs: Fraction, rhs: Fraction, where: str) -> None:
        slack = Fraction(rhs) - Fraction(lhs)
        self._record(slack)
        if slack < 0:
            self._fail(f"{where}: {format_rational(lhs)} > {format_rational(rhs)}")

    def less(self, lhs: Fraction, rhs: Fraction, where: str) -> None:
        slack = Fraction(rhs) - Fraction(lhs)
        self._record(slack)
        if slack <= 0:
            self._fail(f"{where}: {format_rational(lhs)} >= {format_rational(rhs)}")

    def equal(self, lhs: Fraction, rhs: Fraction, where: str) -> None:
        gap = abs(Fraction(lhs) - Fraction(rhs))
        self._record(-gap)
        if gap:
            self._fail(f"{where}: {format_rational(lhs)} != {format_rational(rhs)}")

    def holds(self, condition: bool, where: str) -> None:
        if not condition:
            self._fail(where)

    def result(self) -> CheckResult:
        return CheckResult(self.name, self.failure_count == 0, self.slack, self.failure_count, tuple(self.failures))


def _overlap_counts(mu: DiscreteMeasure, boxes: List[Box]) -> List[int]:
    counts = [0] * len(mu)
    for box in boxes:
        for i in mu.atoms_in_box(box):
            counts[i] += 1
    return counts


def verify_czd(mu: DiscreteMeasure, family: GridFamily, dec: CZDecomposition) -> VerificationReport:
    """Re-check every quantitative claim of a decomposition from scratch.

    Weights, targets and integrals are recomputed from the cube ids and the
    measure; nothing cached in the decomposition is trusted except the pieces
    under test (R_j, A_j, gamma_j, g, b).
    """
    lam = dec.lambda_level
    beta = dec.params.beta
    alpha = dec.params.alpha
    atoms = mu.atoms
    q_boxes = [family.cube_box(c) for c in dec.level_set.cubes]
    overlap = _overlap_counts(mu, q_boxes)
    inside_q = [mu.atoms_in_box(b) for b in q_boxes]

    def weight(j: int, i: int) -> Fraction:
        return Fraction(1, overlap[i]) if i in inside_q[j] else Fraction(0)

    phi_sum = [Fraction(0)] * len(atoms)
    for record in dec.records:
        for i in record.atoms:
            phi_sum[i] += record.gamma

    gamma_bound = _Check("gamma_bound")
    phi_sum_bound = _Check("phi_sum_bound")
    support = _Check("support_in_R")
    mass_identity = _Check("gamma_mass_identity")
    target_range = _Check("target_range")
    g_plus_b = _Check("g_plus_b_equals_f")
    b_mean_zero = _Check("b_j_mean_zero")
    b_l1 = _Check("b_l1_bound")
    g_bound = _Check("g_bound")
    chebyshev = _Check("covering_step")
    heavy = _Check("cubes_heavy")
    overlap_check = _Check("overlap_bound")
    target_total = _Check("target_total")

    n = family.dimension
    for j, record in enumerate(dec.records):
        where = f"j={j}"
        q_integral = mu.integral(q_boxes[j])
        r_box = family.cube_box(record.r)
        mass_r = mu.box_mass(r_box)
        mass_a = sum((atoms[i].mass for i in record.atoms), Fraction(0))
        target = sum((atoms[i].f * atoms[i].mass * weight(j, i) for i in inside_q[j]), Fraction(0))

        heavy.less(lam * mu.box_mass(dilate(q_boxes[j], 2)), q_integral, where)
        if mass_r == 0:
            gamma_bound.holds(False, f"{where}: mu(R_j) = 0")
        else:
            gamma_bound.leq(record.gamma, 2 * q_integral / mass_r, f"{where} (2/mu(R_j)) int_Qj f")
        gamma_bound.leq(record.gamma, 2 * beta * lam, f"{where} 2 beta lambda")

        for i in record.atoms:
            support.holds(r_box.contains_point(atoms[i].point), f"{where}: atom {i} outside R_j")
        support.holds(len(set(record.atoms)) == len(record.atoms), f"{where}: repeated atoms in A_j")

        mass_identity.equal(record.gamma * mass_a, target, where)
        mass_identity.equal(record.target, target, f"{where} stored target")

        target_range.leq(q_integral / (n + 1), target, f"{where} lower")
        target_range.leq(target, q_integral, f"{where} upper")

        b_j = sum(
            (atoms[i].f * weight(j, i) * atoms[i].mass for i in inside_q[j]),
            Fraction(0),
        ) - record.gamma * mass_a
        b_mean_zero.equal(b_j, Fraction(0), where)

        tripled = dilate(r_box, 3)
        s_cube = cover_box(family, tripled).cube
        s_box = family.cube_box(s_cube)
        chebyshev.leq(mu.integral(tripled), lam * mu.box_mass(dilate(s_box, 2)), f"{where} int_3R f <= lambda mu(2S)")
        chebyshev.holds(box_contains_box(dilate(r_box, alpha), dilate(s_box, 2)), f"{where}: 2S_l not inside alpha R_l")
        if record.s_cube is not None:
            chebyshev.holds(record.s_cube == s_cube, f"{where}: stored S_l differs from cover_box(3R_l)")

    for i, atom in enumerate(atoms):
        where = f"atom {i}"
        phi_sum_bound.leq(phi_sum[i], 4 * beta * lam, where)
        g_plus_b.equal(dec.g[i] + dec.b[i], atom.f, where)
        g_bound.leq(abs(dec.g[i]), (1 + 4 * beta) * lam, where)
        overlap_check.leq(Fraction(overlap[i]), Fraction(family.filtration_count), where)

    b_norm = sum((abs(dec.b[i]) * atoms[i].mass for i in range(len(atoms))), Fraction(0))
    b_l1.leq(b_norm, 2 * mu.f_l1, "||b||_1 <= 2||f||_1")

    union_integral = sum((atoms[i].f * atoms[i].mass for i in range(len(atoms)) if overlap[i] > 0), Fraction(0))
    target_total.equal(sum((r.target for r in dec.records), Fraction(0)), union_integral, "sum target_j")

    checks = (
        gamma_bound, phi_sum_bound, support, mass_identity, target_range, g_plus_b,
        b_mean_zero, b_l1, g_bound, chebyshev, heavy, overlap_check, target_total,
    )
    report = VerificationReport(
        tuple(c.result() for c in checks),
        {"pieces": len(dec.records), "b_l1": format_rational(b_norm), "f_l1": format_rational(mu.f_l1)},
    )
    if report.passed:
        logging.info("all %d checks passed for %d pieces", len(report.checks), len(dec.records))
    else:
        logging.warning("failed checks: %s", ", ".join(c.name for c in report.failed))
    return report


##### ANNULI BOUND

def _between_cubes(family: GridFamily, q: Box, r: CubeId) -> List[CubeId]:
    """Cubes of every filtration that contain Q and are strictly smaller than R."""
    e = floor_log2(q.side)
    if power_of_two(e) < q.side:
        e += 1
    k_first = -e
    found = []
    for k in range(k_first, r.k, -1):
        for m in family.filtrations:
            cube = family.locate(m, k, q.lower)
            if box_contains_box(family.cube_box(cube), q):
                found.append(cube)
    return found


def chain_constant_lower(
    growth_dim: Fraction,
    scale: Fraction,
    beta: Fraction,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> Fraction:
    """Lower bound for (2L)^d (1/(1 - L^d/beta) + beta/L^d) with L = c* alpha.

    Raises HypothesisViolation unless L^d < beta, where the geometric series diverges.
    """
    power_up = rational_power(scale, growth_dim, "up", precision_bits)
    if power_up >= beta:
        raise HypothesisViolation(
            f"(c* alpha)^d = {format_rational(power_up)} is not below beta = {format_rational(beta)}"
        )
    power_down = rational_power(scale, growth_dim, "down", precision_bits)
    front = rational_power(2 * scale, growth_dim, "down", precision_bits)
    return front * (1 / (1 - power_down / beta) + beta / power_up)


def annuli_bound_check(
    mu: DiscreteMeasure,
    family: GridFamily,
    q: Box,
    r: CubeId,
    params: DoublingParams,
    step_limit: int = 4096,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> VerificationReport:
    """Chain estimate for int_{R minus Q} dmu(x) / |x - x_Q|^d.

    Q_j = (c* alpha)^j Q, and N is the first j >= 1 with Q_j doubling at
    (c* alpha, beta). Between 1 and N the masses grow by more than beta per
    step, so the annuli Q_j minus Q_{j-1} contribute a geometric series
    dominated by the last one. Q itself may be doubling; the chain never
    stops at j = 0.

    Preconditions: Q inside R, and no (alpha, beta)-doubling cube of the
    family containing Q is strictly smaller than R.
    """
    r_box = family.cube_box(r)
    if not box_contains_box(r_box, q):
        raise HypothesisViolation(f"Q {q.to_json()} is not inside R {r.to_json()}")
    for cube in _between_cubes(family, q, r):
        if is_doubling(mu, family.cube_box(cube), params):
            raise HypothesisViolation(
                f"doubling cube {cube.to_json()} lies strictly between Q and R {r.to_json()}"
            )

    d = mu.growth_dim
    scale = safe_covering_constant(family) * params.alpha
    chain_params = DoublingParams(scale, params.beta)
    constant = chain_constant_lower(d, scale, params.beta, precision_bits)

    chain_boxes = [q, dilate(q, scale)]
    masses = [mu.box_mass(q), mu.box_mass(chain_boxes[1])]
    while not is_doubling(mu, chain_boxes[-1], chain_params):
        if len(chain_boxes) > step_limit:
            raise TheoremContradiction(
                "annuli chain did not reach a doubling cube",
                {"Q": q.to_json(), "R": r.to_json(), "step_limit": step_limit},
            )
        chain_boxes.append(dilate(chain_boxes[-1], scale))
        masses.append(mu.box_mass(chain_boxes[-1]))
    n_chain = len(chain_boxes) - 1
    q_n = chain_boxes[-1]
    q_next = dilate(q_n, scale)

    chain = _Check("chain_growth")
    # j = 0 is excluded: Q need not be non-doubling
    for j in range(1, n_chain):
        chain.leq(masses[j], masses[j + 1] / params.beta, f"j={j}")
    containment = _Check("chain_containment")
    tripled = dilate(q_n, 3 * safe_covering_constant(family))
    containment.holds(box_contains_box(tripled, r_box), "R not inside 3c* Q_N")
    containment.holds(box_contains_box(q_next, tripled), "3c* Q_N not inside Q_N+1")

    center = q.center
    integral_upper = Fraction(0)
    for i in mu.atoms_in_box(r_box):
        atom = mu.atoms[i]
        if q.contains_point(atom.point):
            continue
        integral_upper += atom.mass / distance_power(center.squared_distance(atom.point), d, "down", precision_bits)
    side_power = rational_power(q_n.side, d, "up", precision_bits)
    bound_lower = constant * masses[-1] / side_power

    bound = _Check("annuli_bound")
    bound.leq(integral_upper, bound_lower, "I <= C mu(Q_N)/l(Q_N)^d")

    report = VerificationReport(
        (chain.result(), containment.result(), bound.result()),
        {
            "N": n_chain,
            "integral_upper": format_rational(integral_upper),
            "bound_lower": format_rational(bound_lower),
            "chain_constant": format_rational(constant),
            "mu_Q_N": format_rational(masses[-1]),
        },
    )
    logging.debug("annuli check for R=%s: N=%d passed=%s", r.to_json(), n_chain, report.passed)
    return report
