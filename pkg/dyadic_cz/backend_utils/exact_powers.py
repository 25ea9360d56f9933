import math
from fractions import Fraction
from typing import Literal, Optional

from mpmath.libmp.libelefun import mpf_nthroot
from mpmath.libmp.libmpf import (
    from_rational,
    mpf_pow_int,
    round_ceiling,
    round_floor,
    to_rational,
)

from dyadic_cz.backend_utils.errors import HypothesisViolation


"""
Exact helpers for powers of two and certified rational powers.

Everything the CZ construction compares is exact. The only irrational
quantities are r^d for fractional exponents (Euclidean distances, fractional
growth dimensions). Those are bracketed here: mpmath's raw mpf layer computes
with directed rounding at a fixed precision and the result is then re-checked
with exact Fraction arithmetic, so a 'down' value is a proven lower bound and
an 'up' value a proven upper bound.
"""


Rounding = Literal["down", "up"]

DEFAULT_PRECISION_BITS = 128


def power_of_two(exponent: int) -> Fraction:
    """2**exponent as an exact rational, for any integer exponent."""
    if exponent >= 0:
        return Fraction(1 << exponent)
    return Fraction(1, 1 << -exponent)


def floor_log2(x: Fraction) -> int:
    """The unique integer e with 2**e <= x < 2**(e+1)."""
    x = Fraction(x)
    if x <= 0:
        raise HypothesisViolation(f"floor_log2 needs a positive argument, got {x}")
    e = x.numerator.bit_length() - x.denominator.bit_length()
    while power_of_two(e) > x:
        e -= 1
    while power_of_two(e + 1) <= x:
        e += 1
    return e


def rational_power(
    base: Fraction,
    exponent: Fraction,
    rounding: Rounding = "down",
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> Fraction:
    """Bracket base**exponent by a rational.

    Parameters:
    base (Fraction): positive base.
    exponent (Fraction): any rational exponent.
    rounding (str): 'down' for a certified lower bound, 'up' for an upper bound.
    precision_bits (int): working precision of the mpmath step.

    Returns:
    Fraction: exact value when the exponent is an integer, otherwise a bound
    within a relative 2**-(precision_bits - 8) of the true value.
    """
    base = Fraction(base)
    exponent = Fraction(exponent)
    if base <= 0:
        raise HypothesisViolation(f"rational_power needs a positive base, got {base}")
    if exponent == 0:
        return Fraction(1)
    if exponent < 0:
        # x**-e is decreasing in x**e, so the rounding direction flips.
        flipped: Rounding = "up" if rounding == "down" else "down"
        return 1 / rational_power(base, -exponent, flipped, precision_bits)
    if exponent.denominator == 1:
        return base ** exponent.numerator

    num, den = exponent.numerator, exponent.denominator
    if den == 2:
        root = _exact_square_root(base)
        if root is not None:
            return root ** num
    rnd = round_floor if rounding == "down" else round_ceiling
    # floor/ceiling at every step keeps the composition monotone in the right direction
    raw = from_rational(base.numerator, base.denominator, precision_bits, rnd)
    raw = mpf_pow_int(raw, num, precision_bits, rnd)
    raw = mpf_nthroot(raw, den, precision_bits, rnd)
    p, q = to_rational(raw)
    value = Fraction(p, q)

    target = base ** num
    nudge = Fraction(1, 1 << max(precision_bits - 8, 8))
    if rounding == "down":
        while value ** den > target:
            value *= 1 - nudge
    else:
        while value ** den < target:
            value *= 1 + nudge
    return value


def _exact_square_root(x: Fraction) -> Optional[Fraction]:
    top, bottom = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if top * top == x.numerator and bottom * bottom == x.denominator:
        return Fraction(top, bottom)
    return None


def distance_power(
    squared_distance: Fraction,
    growth_dim: Fraction,
    rounding: Rounding = "down",
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> Fraction:
    """Bracket |x - y|**d given the exact squared distance |x - y|**2."""
    return rational_power(squared_distance, Fraction(growth_dim) / 2, rounding, precision_bits)


def sqrt_bound(x: Fraction, rounding: Rounding = "down", precision_bits: int = DEFAULT_PRECISION_BITS) -> Fraction:
    return rational_power(x, Fraction(1, 2), rounding, precision_bits)
