import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple

from pydantic import ValidationError

from dyadic_cz.backend_utils.acceptance_suite import run_suite
from dyadic_cz.backend_utils.covering import cover_ball, ratio_bound, uncovered_witness
from dyadic_cz.backend_utils.czd import RSelectorFactory, czd
from dyadic_cz.backend_utils.czd_verification import annuli_bound_check, verify_czd
from dyadic_cz.backend_utils.czo import KernelFactory, apply_truncated, summarize_statistics, weak11_statistic
from dyadic_cz.backend_utils.errors import HypothesisViolation, InputFormatError, TheoremContradiction
from dyadic_cz.backend_utils.file_handlers import FileHandlerFactory, write_artifact
from dyadic_cz.backend_utils.geometry import Ball, Box, Point, format_rational
from dyadic_cz.backend_utils.grids import GridFamily, lattice_separation
from dyadic_cz.backend_utils.instance_generators import annuli_pair, random_densities
from dyadic_cz.backend_utils.level_set import GenerationWindow
from dyadic_cz.backend_utils.measure import DiscreteMeasure, DoublingParams
from dyadic_cz.parameter_controller import ParameterController
from dyadic_cz.run_config import RunConfig


"""
flow_coordinator.py serves as the central orchestration module. It is the bridge between the
command line and the backend modules, and it is not tied to the CLI framework: as long as a
RunConfig is provided, run() dispatches the command and returns an exit code with its artifact.

Design:
Flow Coordinator doesn't own any of the numerical implementation.
It composes the backend modules and maps their failures onto exit codes.

## Backend Utils
Covering and grids: cover_ball, uncovered_witness and the grid queries of GridFamily.
Decomposition: czd() with an R selector from RSelectorFactory, then verify_czd().
Singular integrals: KernelFactory, apply_truncated() and weak11_statistic().
Artifacts: FileHandlerFactory reads measures and reports; write_artifact writes JSON.

## Param Controller:
A ParameterController instance is passed in; its registered parameters (precision, window
padding, step limits, selector, suite scale) control the behaviour of every command.

## Logging and Error Handling:
logging is configured once here. Errors map onto exit codes:
0 ok, 1 verification failures, 2 input or parse errors, 3 hypothesis violations,
4 theorem contradictions (the artifact then carries the full diagnostic).
"""


EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_HYPOTHESIS_VIOLATION = 3
EXIT_THEOREM_CONTRADICTION = 4


@dataclass
class RunOutcome:
    exit_code: int
    artifact: Dict[str, Any]


class FlowCoordinator:
    def __init__(self, param_controller: ParameterController) -> None:
        """Constructor for FlowCoordinator"""
        self.param_controller = param_controller

        logging.basicConfig(level=logging.INFO)

        self.file_factory = FileHandlerFactory()

    def run_from_options(self, **options: Any) -> RunOutcome:
        """Validate raw options into a RunConfig, then run it."""
        try:
            config = RunConfig(**options)
        except ValidationError as ve:
            logging.error("invalid configuration: %s", ve)
            return RunOutcome(EXIT_INPUT_ERROR, {"error": "invalid configuration", "details": ve.errors()})
        return self.run(config)

    def run(self, config: RunConfig) -> RunOutcome:
        """Dispatch one command and map its failures onto the exit-code taxonomy."""
        self.apply_config_overrides(config)
        handler = getattr(self, f"run_{config.command}")
        try:
            exit_code, artifact = handler(config)
        except InputFormatError as exc:
            logging.error("input error: %s", exc)
            return RunOutcome(EXIT_INPUT_ERROR, {"error": "input", "message": str(exc)})
        except HypothesisViolation as exc:
            logging.error("hypothesis violation: %s", exc)
            return RunOutcome(EXIT_HYPOTHESIS_VIOLATION, {"error": "hypothesis", "message": str(exc)})
        except TheoremContradiction as exc:
            logging.critical("theorem contradiction: %s", exc)
            return RunOutcome(
                EXIT_THEOREM_CONTRADICTION,
                {"error": "theorem_contradiction", "message": str(exc), "diagnostic": exc.diagnostic},
            )
        if config.output_path:
            write_artifact(config.output_path, artifact)
        return RunOutcome(exit_code, artifact)

    def apply_config_overrides(self, config: RunConfig) -> None:
        if config.window_padding is not None:
            self.param_controller.set_parameter("window_padding", config.window_padding)
        if config.selector is not None:
            self.param_controller.set_parameter("selector", config.selector)
        if config.scale is not None:
            self.param_controller.set_parameter("suite_scale", config.scale)

    def _param(self, name: str) -> Any:
        return self.param_controller.value(name)

    ##### COVERING AND GRIDS

    def run_cover(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        family = GridFamily(len(config.center))
        ball = Ball(Point(tuple(config.center)), config.radius)
        result = cover_ball(family, ball)
        artifact = result.to_json(family)
        artifact["ball"] = ball.to_json()
        return EXIT_OK, artifact

    def run_grid(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        family = GridFamily(config.dimension)
        k = config.generation
        artifact: Dict[str, Any] = {
            "dimension": family.dimension,
            "p": family.p,
            "generation": k,
            "offsets": {str(m): format_rational(family.offset(m, k)) for m in family.filtrations},
            "lattice_separation": format_rational(lattice_separation(family, k)),
        }
        if config.window_lower is not None and config.window_side is not None:
            window = Box(Point(tuple(config.window_lower)), config.window_side)
            cubes = list(family.cubes_in_window(config.filtration, k, window))
            artifact["cubes"] = [{"id": c.to_json(), "box": family.cube_box(c).to_json()} for c in cubes]
        return EXIT_OK, artifact

    def run_witness(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        family = GridFamily(config.dimension)
        keep = config.keep if config.keep is not None else list(range(family.dimension))
        max_ratio = config.max_ratio if config.max_ratio is not None else ratio_bound(family)
        ball = uncovered_witness(family, keep, max_ratio, self._param("witness_max_halvings"))
        return EXIT_OK, {
            "dimension": family.dimension,
            "keep": sorted(set(keep)),
            "max_ratio": format_rational(max_ratio),
            "ball": ball.to_json() if ball is not None else None,
            "found": ball is not None,
        }

    ##### DECOMPOSITION

    def doubling_params(self, config: RunConfig, family: GridFamily, mu: DiscreteMeasure) -> DoublingParams:
        defaults = DoublingParams.default(family, mu.growth_dim, self._param("power_precision_bits"))
        return DoublingParams(
            config.alpha if config.alpha is not None else defaults.alpha,
            config.beta if config.beta is not None else defaults.beta,
        )

    def decompose(self, config: RunConfig, mu: DiscreteMeasure) -> Tuple[bool, Dict[str, Any]]:
        family = GridFamily(mu.dimension)
        params = self.doubling_params(config, family, mu)
        selector = RSelectorFactory.get_selector(self._param("selector"), self._param("ancestor_step_limit"))
        window = GenerationWindow.for_measure(mu, family, self._param("window_padding"))
        dec = czd(mu, family, config.lambda_level, params, selector, window)
        report = verify_czd(mu, family, dec)
        part = {
            "measure": mu.to_json(),
            "decomposition": dec.to_json(),
            "verification": report.to_json(),
            "growth_constant": format_rational(mu.growth_constant(precision_bits=self._param("power_precision_bits"))),
        }
        return report.passed, part

    def run_czd(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        handler = self.file_factory.get_file_handler("measure")
        if not config.allow_signed:
            passed, part = self.decompose(config, handler.read_file(config.input_path))
            return (EXIT_OK if passed else EXIT_VERIFICATION_FAILED), part
        positive, negative = handler.read_signed(config.input_path)
        if negative.f_l1 == 0:
            passed, part = self.decompose(config, positive)
            return (EXIT_OK if passed else EXIT_VERIFICATION_FAILED), part
        logging.info("signed density: decomposing f+ and f- separately")
        parts: Dict[str, Any] = {}
        all_passed = True
        for name, mu in (("positive", positive), ("negative", negative)):
            if mu.f_l1 == 0:
                continue
            passed, parts[name] = self.decompose(config, mu)
            all_passed = all_passed and passed
        return (EXIT_OK if all_passed else EXIT_VERIFICATION_FAILED), {"parts": parts}

    def run_verify(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        parts = self.file_factory.get_file_handler("report").read_file(config.report_path)
        reports = {}
        for name, (mu, family, dec) in parts.items():
            reports[name] = verify_czd(mu, family, dec).to_json()
        passed = all(r["passed"] for r in reports.values())
        return (EXIT_OK if passed else EXIT_VERIFICATION_FAILED), {"passed": passed, "reports": reports}

    ##### EXPERIMENTS

    def run_weak11(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        mu = self.file_factory.get_file_handler("measure").read_file(config.input_path)
        kernel = KernelFactory.get_kernel(config.kernel, mu.dimension, mu.growth_dim)
        rng = random.Random(config.seed)
        statistics = []
        trials = []
        for trial in range(config.trials):
            densities = random_densities(rng, len(mu))
            f_l1 = sum((f * m for f, m in zip(densities, mu.masses)), Fraction(0))
            if f_l1 == 0:
                trials.append({"trial": trial, "skipped": "f vanishes"})
                continue
            values = apply_truncated(mu, kernel, config.eps, densities, self._param("kernel_precision_bits"))
            statistic = weak11_statistic(mu, values.values, f_l1)
            statistics.append(statistic)
            trials.append({
                "trial": trial,
                "statistic": statistic,
                "eps": format_rational(values.eps),
                "max_error_bound": float(values.error_bounds.max()) if len(mu) else 0.0,
            })
        return EXIT_OK, {"kernel": kernel.describe(), "trials": trials, "summary": summarize_statistics(statistics)}

    def run_annuli(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        rng = random.Random(config.seed)
        records = []
        failures = 0
        for trial in range(config.trials):
            mu, family, q, r, params = annuli_pair(rng)
            report = annuli_bound_check(mu, family, q, r, params, self._param("ancestor_step_limit"), self._param("power_precision_bits"))
            failures += 0 if report.passed else 1
            records.append({"trial": trial, "Q": q.to_json(), "R": r.to_json(), "report": report.to_json()})
        return (EXIT_OK if failures == 0 else EXIT_VERIFICATION_FAILED), {"failures": failures, "pairs": records}

    def run_suite(self, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        selector = RSelectorFactory.get_selector(self._param("selector"), self._param("ancestor_step_limit"))
        results = run_suite(
            config.seed,
            self._param("suite_scale"),
            selector,
            self._param("window_padding"),
            self._param("weak11_min_atoms"),
            self._param("weak11_max_atoms"),
            self._param("lipschitz_constant"),
        )
        passed = all(r.passed for r in results)
        return (EXIT_OK if passed else EXIT_VERIFICATION_FAILED), {
            "seed": config.seed,
            "scale": format_rational(self._param("suite_scale")),
            "passed": passed,
            "criteria": [r.to_json() for r in results],
        }
