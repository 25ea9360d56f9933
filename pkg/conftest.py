import os
from fractions import Fraction

import hypothesis
import numpy as np
import pytest

from dyadic_cz.backend_utils.geometry import Point
from dyadic_cz.backend_utils.grids import GridFamily
from dyadic_cz.backend_utils.measure import Atom, DiscreteMeasure
from dyadic_cz.parameter_controller import ParameterController

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=1000, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_measure(dimension, records, growth_dim=None):
    """records: (coords, mass, f) triples with rational-like entries."""
    atoms = tuple(
        Atom(Point.of(*coords), Fraction(mass), Fraction(f))
        for coords, mass, f in records
    )
    return DiscreteMeasure(dimension, atoms, Fraction(dimension if growth_dim is None else growth_dim))


@pytest.fixture
def plane():
    return GridFamily(2)


@pytest.fixture
def line():
    return GridFamily(1)


@pytest.fixture
def three_atoms():
    """Unit masses at 0, 1/4 and 4 on the line, f = (10, 0, 1)."""
    return make_measure(1, [((0,), 1, 10), ((Fraction(1, 4),), 1, 0), ((4,), 1, 1)])


@pytest.fixture
def controller():
    controller = ParameterController()
    controller.setup_default_parameters()
    return controller
