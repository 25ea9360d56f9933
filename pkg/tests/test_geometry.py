from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dyadic_cz.backend_utils.errors import DimensionMismatchError, HypothesisViolation, InputFormatError
from dyadic_cz.backend_utils.geometry import (
    Ball,
    Box,
    Point,
    bounding_box_side,
    box_contains_box,
    circumscribed_box,
    dilate,
    format_rational,
    parse_rational,
)


rationals = st.fractions(min_value=-1000, max_value=1000, max_denominator=1000)
sides = st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=1000)


def test_parse_rational_forms():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational(" -2 ") == Fraction(-2)
    assert parse_rational("0.125") == Fraction(1, 8)
    assert parse_rational(7) == Fraction(7)


@pytest.mark.parametrize("bad", [0.5, True, "", "1/0", "abc", None])
def test_parse_rational_rejects(bad):
    with pytest.raises(InputFormatError):
        parse_rational(bad)


def test_format_rational_is_lowest_terms():
    assert format_rational(Fraction(6, 8)) == "3/4"
    assert format_rational(Fraction(-4, 2)) == "-2"


def test_half_open_membership():
    box = Box(Point.of(0, 0), Fraction(1))
    assert box.contains_point(Point.of(0, 0))
    assert box.contains_point(Point.of("1/2", "99/100"))
    assert not box.contains_point(Point.of(1, "1/2"))
    assert not box.contains_point(Point.of("1/2", 1))


def test_adjacent_boxes_do_not_intersect():
    left = Box(Point.of(0), Fraction(1))
    right = Box(Point.of(1), Fraction(1))
    assert not left.intersects(right)
    assert left.intersects(Box(Point.of("1/2"), Fraction(1)))


def test_dilate_keeps_center():
    box = Box(Point.of(1, 2), Fraction(2))
    grown = dilate(box, 3)
    assert grown.side == 6
    assert grown.center == box.center
    assert box_contains_box(grown, box)


def test_dilate_refuses_shrinking():
    with pytest.raises(HypothesisViolation):
        dilate(Box(Point.of(0), Fraction(1)), Fraction(1, 2))


def test_nonpositive_sizes_rejected():
    with pytest.raises(HypothesisViolation):
        Box(Point.of(0), Fraction(0))
    with pytest.raises(HypothesisViolation):
        Ball(Point.of(0), Fraction(-1))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        Box(Point.of(0), Fraction(1)).contains_point(Point.of(0, 0))


def test_circumscribed_box_of_ball():
    box = circumscribed_box(Ball(Point.of("1/2", "1/2"), Fraction(1, 100)))
    assert box.lower == Point.of("49/100", "49/100")
    assert box.side == Fraction(1, 50)


def test_corners_count():
    assert len(list(Box(Point.of(0, 0, 0), Fraction(1)).corners())) == 8


def test_bounding_box_side():
    assert bounding_box_side([Point.of(0, 0)]) == 0
    assert bounding_box_side([Point.of(0, 5), Point.of(3, 1)]) == 4


@given(st.lists(rationals, min_size=1, max_size=4), sides)
def test_centered_box_contains_its_center(coords, side):
    center = Point(tuple(coords))
    box = Box.centered(center, side)
    assert box.center == center
    assert box.contains_point(center)


@given(st.lists(rationals, min_size=2, max_size=2), sides, st.fractions(min_value=1, max_value=50, max_denominator=10))
def test_containment_is_transitive_under_dilation(coords, side, factor):
    box = Box(Point(tuple(coords)), side)
    once = dilate(box, factor)
    twice = dilate(once, 2)
    assert box_contains_box(once, box)
    assert box_contains_box(twice, box)


def test_box_json_round_trip():
    box = Box(Point.of("-1/3", "2"), Fraction(5, 7))
    assert Box.from_json(box.to_json()) == box
    with pytest.raises(InputFormatError):
        Box.from_json({"lower": ["0"]})
