import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from dyadic_cz.backend_utils.errors import HypothesisViolation, InputFormatError
from dyadic_cz.backend_utils.exact_powers import sqrt_bound
from dyadic_cz.backend_utils.geometry import Point, format_rational
from dyadic_cz.backend_utils.measure import DiscreteMeasure


"""
Calderon-Zygmund kernels over discrete measures and the weak-(1,1) experiment.

This is the only floating point module. Kernel values involve |x - y|, which is
irrational, and nothing here feeds back into the exact decomposition.

Two evaluation paths:
- precision_bits <= 53: numpy float64, vectorised per target atom.
- precision_bits > 53: mpmath at the requested working precision, pair by pair.
Both return a per-atom error bound next to the values.

Kernels follow the strategy pattern. To add one, subclass Kernel, implement
evaluate(), and register it in KernelFactory.
"""


FLOAT_EPSILON = 2.0 ** -53
# Relative slack below each |value| when scanning weak-type thresholds.
THRESHOLD_NUDGE = 2.0 ** -20


class Kernel(ABC):
    """K(x, y) with |K(x, y)| <= size_constant / |x - y|^d."""

    kind = "abstract"
    smoothness_delta = Fraction(1)
    size_constant = Fraction(1)

    def __init__(self, dimension: int, growth_dim: Fraction) -> None:
        self.dimension = dimension
        self.growth_dim = Fraction(growth_dim)
        if not 0 < self.growth_dim <= dimension:
            raise HypothesisViolation(f"kernel growth dimension {self.growth_dim} outside (0, {dimension}]")

    @property
    def smoothness_constant(self) -> Fraction:
        """Constant of |K(x,y) - K(x,y')| + |K(y,x) - K(y',x)| <= C |y-y'| / |x-y|^(d+1) for |y-y'| <= |x-y|/2."""
        d = self.growth_dim
        return 2 * (d + 2) * 2 ** (math.ceil(d) + 1)

    @abstractmethod
    def evaluate(self, diff: Sequence[Any], squared: Any) -> Any:
        """K from the difference vector x - y and |x - y|^2; works on mpf scalars and numpy arrays."""

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "growth_dim": format_rational(self.growth_dim),
            "smoothness_delta": format_rational(self.smoothness_delta),
            "size_constant": format_rational(self.size_constant),
            "smoothness_constant": format_rational(self.smoothness_constant),
        }


class RieszKernel(Kernel):
    """(x_1 - y_1) / |x - y|^(d+1)."""

    kind = "riesz"

    def evaluate(self, diff: Sequence[Any], squared: Any) -> Any:
        exponent = (self.growth_dim + 1) / 2
        if isinstance(squared, np.ndarray):
            return diff[0] / squared ** float(exponent)
        return diff[0] / squared ** (mpmath.mpf(exponent.numerator) / exponent.denominator)


class CauchyRealKernel(RieszKernel):
    """Real part of the Cauchy kernel in the plane: (x_1 - y_1) / |x - y|^2."""

    kind = "cauchy_real"

    def __init__(self, dimension: int = 2, growth_dim: Fraction = Fraction(1)) -> None:
        if dimension != 2 or Fraction(growth_dim) != 1:
            raise HypothesisViolation(f"cauchy_real needs n=2 and d=1, got n={dimension}, d={growth_dim}")
        super().__init__(dimension, growth_dim)

    def evaluate(self, diff: Sequence[Any], squared: Any) -> Any:
        return diff[0] / squared


class KernelFactory:
    """Factory for the built-in kernels by name."""

    @staticmethod
    def get_kernel(name: str, dimension: int, growth_dim: Fraction) -> Kernel:
        if name == CauchyRealKernel.kind:
            return CauchyRealKernel(dimension, growth_dim)
        elif name == RieszKernel.kind or name.startswith("riesz_"):
            d = Fraction(growth_dim) if name == RieszKernel.kind else Fraction(name[len("riesz_"):])
            return RieszKernel(dimension, d)
        else:
            raise InputFormatError(f"unknown kernel {name!r}")


def _mpf(value: Fraction) -> mpmath.mpf:
    return mpmath.mpf(value.numerator) / value.denominator


@dataclass(frozen=True)
class KernelValue:
    value: mpmath.mpf
    error_bound: mpmath.mpf


def kernel_eval(ker: Kernel, x: Point, y: Point, precision_bits: int = 113) -> KernelValue:
    """K(x, y) at the given working precision with a relative error bound."""
    if x == y:
        raise HypothesisViolation("kernel evaluated on the diagonal x = y")
    if x.dimension != ker.dimension or y.dimension != ker.dimension:
        raise HypothesisViolation(f"kernel of dimension {ker.dimension} applied to points of dimension {x.dimension}")
    with mpmath.workprec(precision_bits):
        diff = [_mpf(a - b) for a, b in zip(x, y)]
        value = ker.evaluate(diff, _mpf(x.squared_distance(y)))
        # a handful of correctly rounded operations, each off by at most one ulp
        error = abs(value) * mpmath.ldexp(1, -(precision_bits - 5))
    return KernelValue(value, error)


@dataclass(frozen=True)
class TruncatedValues:
    values: np.ndarray
    error_bounds: np.ndarray
    eps: Fraction
    precision_bits: int
    high_precision: Optional[Tuple[mpmath.mpf, ...]] = None


def default_truncation(mu: DiscreteMeasure) -> Fraction:
    """Half the smallest atom spacing, rounded down; 1 for a single atom."""
    squared = mu.min_squared_distance()
    if squared is None:
        return Fraction(1)
    return sqrt_bound(squared, "down") / 2


def _pair_mask(
    mu: DiscreteMeasure,
    target: int,
    squared: np.ndarray,
    eps_squared: Fraction,
    scale: float,
) -> np.ndarray:
    """Exact |x_i - x_j| > eps, with float screening and exact rechecks near the cut.

    Rounding the coordinates moves a float squared distance by up to a few ulps
    of scale^2, so the recheck band is absolute in scale as well as relative to
    the cut.
    """
    cut = float(eps_squared)
    band = 32.0 * FLOAT_EPSILON * mu.dimension * (cut + 4.0 * scale * scale)
    mask = squared > cut
    close = np.nonzero(np.abs(squared - cut) <= max(band, 1e-300))[0]
    point = mu.atoms[target].point
    for j in close:
        mask[j] = point.squared_distance(mu.atoms[int(j)].point) > eps_squared
    mask[target] = False
    return mask


def apply_truncated(
    mu: DiscreteMeasure,
    ker: Kernel,
    eps: Optional[Fraction] = None,
    densities: Optional[Sequence[Fraction]] = None,
    precision_bits: int = 53,
) -> TruncatedValues:
    """T_eps f(x_i) = sum over |x_i - x_j| > eps of K(x_i, x_j) f(x_j) m_j, for every atom.

    Parameters:
    mu (DiscreteMeasure): atoms and masses; f defaults to the measure's densities.
    ker (Kernel): one of the built-in kernels.
    eps (Fraction): truncation radius, defaults to half the smallest spacing.
    densities (Sequence[Fraction]): f values overriding the measure's own.
    precision_bits (int): 53 or less selects the numpy path, more selects mpmath.

    Returns:
    TruncatedValues: float64 values with per-atom absolute error bounds.
    """
    eps = default_truncation(mu) if eps is None else Fraction(eps)
    if eps <= 0:
        raise HypothesisViolation(f"truncation radius must be positive, got {eps}")
    if mu.dimension != ker.dimension:
        raise HypothesisViolation(f"kernel of dimension {ker.dimension} on a measure of dimension {mu.dimension}")
    f = list(mu.densities if densities is None else densities)
    if len(f) != len(mu):
        raise InputFormatError(f"{len(f)} densities for {len(mu)} atoms")
    eps_squared = eps * eps

    if precision_bits <= 53:
        return _apply_float(mu, ker, eps, eps_squared, f)
    return _apply_mp(mu, ker, eps, eps_squared, f, precision_bits)


def _apply_float(
    mu: DiscreteMeasure,
    ker: Kernel,
    eps: Fraction,
    eps_squared: Fraction,
    f: List[Fraction],
) -> TruncatedValues:
    coords = np.array([[float(c) for c in p.coords] for p in mu.points], dtype=np.float64)
    weights = np.array([float(fi * m) for fi, m in zip(f, mu.masses)], dtype=np.float64)
    scale = float(np.max(np.abs(coords))) if coords.size else 0.0
    count = len(mu)
    values = np.zeros(count)
    errors = np.zeros(count)
    conditioning = 8.0 + 4.0 * float(ker.growth_dim + 2)
    for i in range(count):
        diff = coords[i] - coords
        squared = np.sum(diff * diff, axis=1)
        mask = _pair_mask(mu, i, squared, eps_squared, scale)
        if not mask.any():
            continue
        kernel = ker.evaluate([diff[mask, axis] for axis in range(ker.dimension)], squared[mask])
        terms = kernel * weights[mask]
        values[i] = float(np.sum(terms))
        # coordinate rounding is amplified by scale / distance; summation adds count ulps
        relative = FLOAT_EPSILON * (conditioning * (1.0 + scale / np.sqrt(squared[mask])) + count)
        errors[i] = float(np.sum(np.abs(terms) * relative))
    return TruncatedValues(values, errors, eps, 53)


def _apply_mp(
    mu: DiscreteMeasure,
    ker: Kernel,
    eps: Fraction,
    eps_squared: Fraction,
    f: List[Fraction],
    precision_bits: int,
) -> TruncatedValues:
    count = len(mu)
    atoms = mu.atoms
    exact_values: List[mpmath.mpf] = []
    errors = np.zeros(count)
    with mpmath.workprec(precision_bits):
        ulp = mpmath.ldexp(1, -(precision_bits - 5))
        for i in range(count):
            total = mpmath.mpf(0)
            magnitude = mpmath.mpf(0)
            for j in range(count):
                if j == i:
                    continue
                squared = atoms[i].point.squared_distance(atoms[j].point)
                if squared <= eps_squared:
                    continue
                diff = [_mpf(a - b) for a, b in zip(atoms[i].point, atoms[j].point)]
                term = ker.evaluate(diff, _mpf(squared)) * _mpf(f[j] * atoms[j].mass)
                total += term
                magnitude += abs(term)
            exact_values.append(total)
            errors[i] = float(magnitude * ulp * (count + 1)) + abs(float(total)) * FLOAT_EPSILON
    values = np.array([float(v) for v in exact_values], dtype=np.float64)
    return TruncatedValues(values, errors, eps, precision_bits, tuple(exact_values))


def weak11_statistic(mu: DiscreteMeasure, values: Iterable[float], f_l1: Fraction) -> float:
    """max over t in {|T f(x_i)|} of t * mu{|T f| > t (1 - 2^-20)} / ||f||_1.

    The relative nudge puts the threshold just below each attained value, so the
    empirical distribution function is taken at the closed level set.
    """
    if f_l1 <= 0:
        raise HypothesisViolation(f"weak-(1,1) statistic needs ||f||_1 > 0, got {f_l1}")
    magnitudes = np.abs(np.asarray(list(values), dtype=np.float64))
    if magnitudes.shape[0] != len(mu):
        raise InputFormatError(f"{magnitudes.shape[0]} values for {len(mu)} atoms")
    masses = np.array([float(m) for m in mu.masses], dtype=np.float64)
    order = np.argsort(magnitudes, kind="stable")
    ascending = magnitudes[order]
    tail_mass = np.concatenate([np.cumsum(masses[order][::-1])[::-1], [0.0]])
    thresholds = ascending * (1.0 - THRESHOLD_NUDGE)
    # first index with |v| > threshold
    start = np.searchsorted(ascending, thresholds, side="right")
    scores = ascending * tail_mass[start]
    best = float(np.max(scores)) if scores.size else 0.0
    return best / float(f_l1)


##### KERNEL CONDITIONS

def sampled_size_ratio(ker: Kernel, pairs: Iterable[Tuple[Point, Point]], precision_bits: int = 113) -> mpmath.mpf:
    """max |K(x,y)| |x-y|^d over the sample; at most size_constant for the built-ins."""
    worst = mpmath.mpf(0)
    with mpmath.workprec(precision_bits):
        exponent = _mpf(ker.growth_dim / 2)
        for x, y in pairs:
            value = kernel_eval(ker, x, y, precision_bits).value
            ratio = abs(value) * _mpf(x.squared_distance(y)) ** exponent
            worst = max(worst, ratio)
    return worst


def sampled_smoothness_ratio(
    ker: Kernel,
    triples: Iterable[Tuple[Point, Point, Point]],
    precision_bits: int = 113,
) -> mpmath.mpf:
    """max (|K(x,y)-K(x,y')| + |K(y,x)-K(y',x)|) |x-y|^(d+delta) / |y-y'|^delta over triples with |y-y'| <= |x-y|/2."""
    worst = mpmath.mpf(0)
    delta = ker.smoothness_delta
    with mpmath.workprec(precision_bits):
        for x, y, y_prime in triples:
            near = y.squared_distance(y_prime)
            far = x.squared_distance(y)
            if near == 0 or 4 * near > far:
                continue
            left = abs(kernel_eval(ker, x, y, precision_bits).value - kernel_eval(ker, x, y_prime, precision_bits).value)
            right = abs(kernel_eval(ker, y, x, precision_bits).value - kernel_eval(ker, y_prime, x, precision_bits).value)
            ratio = (left + right) * _mpf(far) ** _mpf((ker.growth_dim + delta) / 2) / _mpf(near) ** _mpf(delta / 2)
            worst = max(worst, ratio)
    return worst


def summarize_statistics(stats: Sequence[float]) -> Dict[str, float]:
    data = np.asarray(stats, dtype=np.float64)
    if data.size == 0:
        return {}
    q10, q50, q90 = np.quantile(data, [0.1, 0.5, 0.9])
    median = float(q50)
    summary = {
        "count": float(data.size),
        "min": float(np.min(data)),
        "q10": float(q10),
        "median": median,
        "q90": float(q90),
        "max": float(np.max(data)),
    }
    summary["max_over_median"] = summary["max"] / median if median > 0 else float("inf")
    logging.info("weak-(1,1) statistic over %d runs: median %.4g, max %.4g", data.size, median, summary["max"])
    return summary
