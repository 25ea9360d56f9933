import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_measure
from dyadic_cz.backend_utils.czo import (
    CauchyRealKernel,
    KernelFactory,
    RieszKernel,
    apply_truncated,
    default_truncation,
    kernel_eval,
    sampled_size_ratio,
    sampled_smoothness_ratio,
    summarize_statistics,
    weak11_statistic,
)
from dyadic_cz.backend_utils.errors import HypothesisViolation, InputFormatError
from dyadic_cz.backend_utils.geometry import Point
from dyadic_cz.backend_utils.instance_generators import lipschitz_graph_measure


planar = st.tuples(
    st.fractions(min_value=-50, max_value=50, max_denominator=64),
    st.fractions(min_value=-50, max_value=50, max_denominator=64),
).map(lambda xy: Point(xy))


def exact_truncated(mu, eps, densities=None):
    """Direct sum with the rational planar Cauchy kernel."""
    f = mu.densities if densities is None else densities
    out = []
    for x in mu.atoms:
        total = Fraction(0)
        for j, y in enumerate(mu.atoms):
            squared = x.point.squared_distance(y.point)
            if squared > eps * eps:
                total += (x.point[0] - y.point[0]) / squared * f[j] * y.mass
        out.append(total)
    return out


def test_riesz_kernel_on_the_line():
    ker = KernelFactory.get_kernel("riesz_1", 1, Fraction(1))
    assert kernel_eval(ker, Point.of(1), Point.of(0)).value == 1
    assert kernel_eval(ker, Point.of(0), Point.of(2)).value == mpmath.mpf(-1) / 2


def test_kernel_factory():
    assert isinstance(KernelFactory.get_kernel("cauchy_real", 2, Fraction(1)), CauchyRealKernel)
    riesz = KernelFactory.get_kernel("riesz_1/2", 2, Fraction(1))
    assert isinstance(riesz, RieszKernel) and riesz.growth_dim == Fraction(1, 2)
    assert KernelFactory.get_kernel("riesz", 3, Fraction(2)).growth_dim == 2
    with pytest.raises(InputFormatError):
        KernelFactory.get_kernel("hilbert", 1, Fraction(1))
    with pytest.raises(HypothesisViolation):
        KernelFactory.get_kernel("cauchy_real", 3, Fraction(1))
    with pytest.raises(HypothesisViolation):
        KernelFactory.get_kernel("riesz_3", 2, Fraction(1))


def test_describe_carries_the_constants():
    data = CauchyRealKernel().describe()
    assert data["kind"] == "cauchy_real"
    assert data["size_constant"] == "1"
    assert data["smoothness_constant"] == "24"


def test_kernel_refuses_the_diagonal():
    with pytest.raises(HypothesisViolation):
        kernel_eval(CauchyRealKernel(), Point.of(1, 1), Point.of(1, 1))


@given(planar, planar)
def test_antisymmetry(x, y):
    if x == y:
        return
    ker = CauchyRealKernel()
    forward = kernel_eval(ker, x, y)
    backward = kernel_eval(ker, y, x)
    with mpmath.workprec(113):
        assert forward.value + backward.value == 0


@given(st.lists(st.tuples(planar, planar), min_size=1, max_size=10))
def test_size_condition(pairs):
    pairs = [(x, y) for x, y in pairs if x != y]
    if not pairs:
        return
    ker = KernelFactory.get_kernel("riesz", 2, Fraction(3, 2))
    assert sampled_size_ratio(ker, pairs) <= 1 + mpmath.mpf(2) ** -100


@given(st.lists(st.tuples(planar, planar, planar), min_size=1, max_size=10))
def test_smoothness_condition(triples):
    ker = CauchyRealKernel()
    assert sampled_smoothness_ratio(ker, triples) <= float(ker.smoothness_constant)


def test_truncation_excludes_near_pairs():
    mu = make_measure(2, [((0, 0), 1, 1), ((1, 0), 1, 1), ((3, 0), 1, 1)], growth_dim=1)
    assert default_truncation(mu) == Fraction(1, 2)
    values = apply_truncated(mu, CauchyRealKernel(), Fraction(1))
    # atom 0 only sees the atom at 3: (0 - 3) / 9
    assert values.values[0] == pytest.approx(-1 / 3, abs=1e-15)
    assert values.values[1] == pytest.approx(-1 / 2, abs=1e-15)
    assert values.values[2] == pytest.approx(1 / 3 + 1 / 2, abs=1e-15)


def test_truncation_is_exact_for_large_coordinates():
    # 2**53 + 3 rounds to 2**53 + 4, so the float distance 4 overshoots the cut 7/2
    far = 2**53
    mu = make_measure(1, [((far,), 1, 1), ((far + 3,), 1, 1)])
    ker = KernelFactory.get_kernel("riesz_1", 1, Fraction(1))
    excluded = apply_truncated(mu, ker, Fraction(7, 2))
    assert list(excluded.values) == [0.0, 0.0]
    included = apply_truncated(mu, ker, Fraction(5, 2))
    assert included.values[0] < 0 < included.values[1]


@settings(max_examples=20)
@given(st.integers(min_value=0, max_value=10**6))
def test_float_path_matches_the_exact_sum(seed):
    rng = random.Random(seed)
    mu = lipschitz_graph_measure(rng, 30)
    eps = default_truncation(mu)
    values = apply_truncated(mu, CauchyRealKernel(), eps)
    exact = exact_truncated(mu, eps)
    for value, bound, expected in zip(values.values, values.error_bounds, exact):
        assert abs(value - float(expected)) <= bound + 1e-300 + abs(float(expected)) * 2.0 ** -52


def test_high_precision_path_agrees():
    rng = random.Random(7)
    mu = lipschitz_graph_measure(rng, 25)
    low = apply_truncated(mu, CauchyRealKernel(), precision_bits=53)
    high = apply_truncated(mu, CauchyRealKernel(), precision_bits=113)
    assert high.high_precision is not None
    exact = exact_truncated(mu, low.eps)
    with mpmath.workprec(113):
        for value, expected in zip(high.high_precision, exact):
            gap = abs(value - mpmath.mpf(expected.numerator) / expected.denominator)
            assert gap <= mpmath.mpf(2) ** -80 * (1 + abs(value))
    assert np.allclose(low.values, high.values, rtol=1e-9, atol=1e-12)


def test_truncated_rejects_bad_input():
    mu = make_measure(2, [((0, 0), 1, 1), ((1, 0), 1, 1)], growth_dim=1)
    with pytest.raises(HypothesisViolation):
        apply_truncated(mu, CauchyRealKernel(), Fraction(0))
    with pytest.raises(InputFormatError):
        apply_truncated(mu, CauchyRealKernel(), densities=[Fraction(1)])
    with pytest.raises(HypothesisViolation):
        apply_truncated(make_measure(1, [((0,), 1, 1)]), CauchyRealKernel())


def test_weak11_statistic_examples():
    mu = make_measure(1, [((0,), 1, 0), ((1,), 1, 0), ((2,), 1, 0)])
    # thresholds 1, 2, 3 keep 3, 2, 1 atoms
    assert weak11_statistic(mu, [1.0, -2.0, 3.0], Fraction(1)) == 4.0
    assert weak11_statistic(mu, [2.0, 2.0, 2.0], Fraction(2)) == 3.0
    assert weak11_statistic(mu, [0.0, 0.0, 0.0], Fraction(1)) == 0.0
    with pytest.raises(HypothesisViolation):
        weak11_statistic(mu, [1.0, 1.0, 1.0], Fraction(0))
    with pytest.raises(InputFormatError):
        weak11_statistic(mu, [1.0], Fraction(1))


@settings(max_examples=10)
@given(st.integers(min_value=0, max_value=10**6))
def test_weak11_statistic_is_scale_invariant(seed):
    rng = random.Random(seed)
    mu = lipschitz_graph_measure(rng, 40)
    if mu.f_l1 == 0:
        return
    ker = CauchyRealKernel()
    once = apply_truncated(mu, ker)
    twice = apply_truncated(mu, ker, once.eps, [2 * f for f in mu.densities])
    assert weak11_statistic(mu, twice.values, 2 * mu.f_l1) == weak11_statistic(mu, once.values, mu.f_l1)


def test_summarize_statistics():
    summary = summarize_statistics([1.0, 2.0, 3.0, 4.0])
    assert summary["count"] == 4.0
    assert summary["min"] == 1.0 and summary["max"] == 4.0
    assert summary["median"] == 2.5
    assert summary["max_over_median"] == pytest.approx(1.6)
    assert summarize_statistics([]) == {}
