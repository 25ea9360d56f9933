from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, root_validator, validator

from dyadic_cz.backend_utils.errors import InputFormatError
from dyadic_cz.backend_utils.geometry import parse_rational


COMMANDS = ("cover", "grid", "witness", "czd", "verify", "weak11", "annuli", "suite")
RANDOMIZED_COMMANDS = ("weak11", "annuli", "suite")


def _rational(value):
    if value is None or isinstance(value, Fraction):
        return value
    try:
        return parse_rational(value)
    except InputFormatError as exc:
        raise ValueError(str(exc)) from exc


class RunConfig(BaseModel):
    """One validated CLI invocation."""

    command: str
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    report_path: Optional[str] = None
    dimension: Optional[int] = None
    center: Optional[List[Fraction]] = None
    radius: Optional[Fraction] = None
    lambda_level: Optional[Fraction] = None
    alpha: Optional[Fraction] = None
    beta: Optional[Fraction] = None
    seed: Optional[int] = None
    trials: int = 1
    keep: Optional[List[int]] = None
    exclude: Optional[int] = None
    max_ratio: Optional[Fraction] = None
    filtration: int = 0
    generation: int = 0
    window_lower: Optional[List[Fraction]] = None
    window_side: Optional[Fraction] = None
    kernel: str = "cauchy_real"
    eps: Optional[Fraction] = None
    window_padding: Optional[int] = None
    selector: Optional[str] = None
    scale: Optional[Fraction] = None
    allow_signed: bool = True

    class Config:
        arbitrary_types_allowed = True
        extra = "forbid"

    @validator("command")
    def known_command(cls, value):
        if value not in COMMANDS:
            raise ValueError(f"unknown command {value!r}, expected one of {COMMANDS}")
        return value

    @validator("radius", "lambda_level", "alpha", "beta", "max_ratio", "window_side", "eps", "scale", pre=True)
    def parse_scalar(cls, value):
        return _rational(value)

    @validator("center", "window_lower", pre=True)
    def parse_vector(cls, value):
        if value is None:
            return None
        if isinstance(value, str):
            value = [part for part in value.split(",") if part.strip()]
        return [_rational(v) for v in value]

    @validator("keep", pre=True)
    def parse_keep(cls, value):
        if isinstance(value, str):
            return [int(part) for part in value.split(",") if part.strip()]
        return value

    @validator("dimension")
    def positive_dimension(cls, value):
        if value is not None and value < 1:
            raise ValueError("dimension must be at least 1")
        return value

    @validator("alpha")
    def alpha_above_three(cls, value):
        if value is not None and value <= 3:
            raise ValueError("alpha must exceed 3")
        return value

    @validator("beta")
    def beta_above_one(cls, value):
        if value is not None and value <= 1:
            raise ValueError("beta must exceed 1")
        return value

    @validator("radius", "window_side", "eps", "scale", "lambda_level", "max_ratio")
    def positive_scalar(cls, value):
        if value is not None and value <= 0:
            raise ValueError("must be positive")
        return value

    @validator("trials")
    def positive_trials(cls, value):
        if value < 1:
            raise ValueError("trials must be at least 1")
        return value

    @root_validator(skip_on_failure=True)
    def command_requirements(cls, values):
        command = values.get("command")
        if command in RANDOMIZED_COMMANDS and values.get("seed") is None:
            raise ValueError(f"{command} is randomized and needs an explicit --seed")
        if command == "cover" and (values.get("center") is None or values.get("radius") is None):
            raise ValueError("cover needs --center and --radius")
        if command == "czd" and (values.get("input_path") is None or values.get("lambda_level") is None):
            raise ValueError("czd needs --input and --lambda")
        if command == "verify" and values.get("report_path") is None:
            raise ValueError("verify needs --report")
        if command == "weak11" and values.get("input_path") is None:
            raise ValueError("weak11 needs --input")
        if command in ("grid", "witness") and values.get("dimension") is None:
            raise ValueError(f"{command} needs --dim")
        exclude = values.get("exclude")
        if exclude is not None:
            if values.get("keep") is not None:
                raise ValueError("--keep and --exclude are mutually exclusive")
            if values.get("dimension") is None or not 0 <= exclude <= values["dimension"]:
                raise ValueError(f"--exclude must name a filtration in 0..n, got {exclude}")
            values["keep"] = [m for m in range(values["dimension"] + 1) if m != exclude]
        center = values.get("center")
        dimension = values.get("dimension")
        if center is not None and dimension is not None and len(center) != dimension:
            raise ValueError(f"center has {len(center)} coordinates, expected {dimension}")
        return values
