from fractions import Fraction

import pytest
from pydantic import ValidationError

from dyadic_cz.run_config import RunConfig


def test_cover_config_parses_rationals():
    config = RunConfig(command="cover", center="1/2,1/2", radius="1/100")
    assert config.center == [Fraction(1, 2), Fraction(1, 2)]
    assert config.radius == Fraction(1, 100)


def test_witness_keep_list():
    config = RunConfig(command="witness", dimension=2, keep="0,2")
    assert config.keep == [0, 2]


def test_witness_exclude_keeps_the_rest():
    assert RunConfig(command="witness", dimension=2, exclude=1).keep == [0, 2]
    assert RunConfig(command="witness", dimension=1, exclude=0).keep == [1]


@pytest.mark.parametrize("options", [
    {"command": "launch"},
    {"command": "cover", "center": "0"},
    {"command": "cover", "center": "0", "radius": "-1"},
    {"command": "cover", "center": "0", "radius": "0.5.5"},
    {"command": "cover", "center": "0,0", "radius": "1", "dimension": 3},
    {"command": "czd", "input_path": "mu.json"},
    {"command": "czd", "input_path": "mu.json", "lambda_level": "4", "alpha": "3"},
    {"command": "czd", "input_path": "mu.json", "lambda_level": "4", "beta": "1"},
    {"command": "verify"},
    {"command": "grid"},
    {"command": "witness", "dimension": 2, "keep": "0,1", "exclude": 2},
    {"command": "witness", "dimension": 2, "exclude": 3},
    {"command": "witness", "dimension": 2, "exclude": -1},
    {"command": "weak11", "input_path": "mu.json"},
    {"command": "annuli"},
    {"command": "suite", "seed": 1, "trials": 0},
    {"command": "suite", "seed": 1, "colour": "red"},
])
def test_invalid_configs(options):
    with pytest.raises(ValidationError):
        RunConfig(**options)


def test_randomized_commands_accept_a_seed():
    assert RunConfig(command="annuli", seed=0).seed == 0
    assert RunConfig(command="suite", seed=4, scale="1/100").scale == Fraction(1, 100)
