from fractions import Fraction

import pytest

from dyadic_cz.backend_utils.errors import ParameterError


def test_defaults(controller):
    assert controller.value("window_padding") == 0
    assert controller.value("selector") == "default"
    assert controller.value("suite_scale") == Fraction(1)
    assert controller.get_parameter("kernel_precision_bits")["default"] == 113
    assert controller.get_parameter("missing") == {}
    assert "lipschitz_constant" in controller.get_all_parameters()


def test_set_parameter_coerces_strings(controller):
    controller.set_parameter("window_padding", "3")
    controller.set_parameter("suite_scale", "1/10")
    assert controller.value("window_padding") == 3
    assert controller.value("suite_scale") == Fraction(1, 10)


@pytest.mark.parametrize("name, value", [
    ("window_padding", -1),
    ("window_padding", "x"),
    ("window_padding", True),
    ("selector", "largest"),
    ("suite_scale", "2"),
    ("unknown", 1),
])
def test_set_parameter_rejects(controller, name, value):
    with pytest.raises(ParameterError):
        controller.set_parameter(name, value)


def test_environment_overrides(controller, monkeypatch, tmp_path):
    monkeypatch.setenv("DYADIC_SELECTOR", "smallest")
    env_file = tmp_path / ".env"
    env_file.write_text("DYADIC_WINDOW_PADDING=2\n", encoding="utf-8")
    # setenv first so teardown also removes what the .env file sets
    monkeypatch.setenv("DYADIC_WINDOW_PADDING", "0")
    monkeypatch.delenv("DYADIC_WINDOW_PADDING")
    applied = controller.apply_environment_overrides(str(env_file))
    assert applied == {"selector": "smallest", "window_padding": 2}
    assert controller.value("window_padding") == 2


def test_bad_environment_value(controller, monkeypatch):
    monkeypatch.setenv("DYADIC_SUITE_SCALE", "0")
    with pytest.raises(ParameterError):
        controller.apply_environment_overrides()
