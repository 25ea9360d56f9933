import logging
import os
from fractions import Fraction
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from dyadic_cz.backend_utils.errors import ParameterError
from dyadic_cz.backend_utils.geometry import parse_rational


"""
ParameterController keeps the tunables of a run in one registry. Every
parameter is registered with its type, default and description plus optional
min/max bounds or a list of choices; set_parameter validates against them.

Environment overrides: variables named DYADIC_<PARAMETER NAME IN CAPS>, read
from the process environment and from a .env file when present.
"""


ENV_PREFIX = "DYADIC_"


class ParameterController:
    def __init__(self) -> None:
        self.parameters: Dict[str, Dict[str, Any]] = {}

    def register_parameter(self, name: str, type: Any, default: Any, description: Optional[str] = None, **kwargs: Any) -> None:
        parameter_info = {
            "type": type,
            "default": default,
            "value": default,
            "description": description,
        }
        parameter_info.update(kwargs)
        self.parameters[name] = parameter_info

    def get_parameter(self, name: str) -> Dict[str, Any]:
        return self.parameters.get(name, {})

    def value(self, name: str) -> Any:
        if name not in self.parameters:
            raise ParameterError(f"Parameter {name} is not registered.")
        return self.parameters[name]["value"]

    def set_parameter(self, name: str, value: Any) -> None:
        if name not in self.parameters:
            raise ParameterError(f"Parameter {name} is not registered.")
        info = self.parameters[name]
        coerced = self._coerce(name, info["type"], value)
        if "min" in info and coerced < info["min"]:
            raise ParameterError(f"Parameter {name}={coerced} is below its minimum {info['min']}")
        if "max" in info and coerced > info["max"]:
            raise ParameterError(f"Parameter {name}={coerced} is above its maximum {info['max']}")
        if "choices" in info and coerced not in info["choices"]:
            raise ParameterError(f"Parameter {name}={coerced!r} is not one of {info['choices']}")
        info["value"] = coerced

    @staticmethod
    def _coerce(name: str, type: Any, value: Any) -> Any:
        try:
            if type is Fraction:
                return parse_rational(value)
            if type is int and isinstance(value, str):
                return int(value.strip())
            if type is int and isinstance(value, bool):
                raise ValueError("booleans are not integers here")
            return type(value)
        except Exception as exc:
            raise ParameterError(f"Parameter {name} cannot take the value {value!r}: {exc}") from exc

    def get_all_parameters(self) -> Dict[str, Dict[str, Any]]:
        return self.parameters

    def apply_environment_overrides(self, dotenv_path: Optional[str] = None) -> Dict[str, Any]:
        """Apply DYADIC_* variables; returns the overrides that were applied."""
        load_dotenv(dotenv_path=dotenv_path, override=False)
        applied = {}
        for name in self.parameters:
            raw = os.environ.get(ENV_PREFIX + name.upper())
            if raw is not None:
                self.set_parameter(name, raw)
                applied[name] = self.parameters[name]["value"]
        if applied:
            logging.info("environment overrides: %s", applied)
        return applied

    def setup_default_parameters(self) -> None:
        self.register_parameter("window_padding", int, 0, "Extra generations added on both sides of the maximal-function window", min=0, max=64)
        self.register_parameter("power_precision_bits", int, 128, "Working precision of certified fractional powers", min=64, max=4096)
        self.register_parameter("kernel_precision_bits", int, 113, "Working precision of kernel evaluation; 53 or less uses numpy floats", min=24, max=4096)
        self.register_parameter("witness_max_halvings", int, 128, "Radius halvings tried by the optimality witness search", min=1, max=4096)
        self.register_parameter("ancestor_step_limit", int, 4096, "Steps allowed in doubling-cube searches", min=16, max=1 << 20)
        self.register_parameter("selector", str, "default", "Strategy choosing R_j around each maximal heavy cube", choices=["default", "smallest"])
        self.register_parameter("suite_scale", Fraction, Fraction(1), "Factor applied to the acceptance trial counts", min=Fraction(1, 100000), max=Fraction(1))
        self.register_parameter("weak11_min_atoms", int, 50, "Smallest instance of the weak-(1,1) experiment", min=2, max=100000)
        self.register_parameter("weak11_max_atoms", int, 500, "Largest instance of the weak-(1,1) experiment", min=2, max=100000)
        self.register_parameter("lipschitz_constant", Fraction, Fraction(1), "Slope bound of the random Lipschitz graphs", min=Fraction(0), max=Fraction(1000))
