import sys
from typing import Any

import click
from rich.console import Console

from dyadic_cz.backend_utils.errors import ParameterError
from dyadic_cz.backend_utils.file_handlers import dump_artifact
from dyadic_cz.cli_modules.cli_components import render_error, render_suite_table, render_verification
from dyadic_cz.flow_coordinator import EXIT_INPUT_ERROR, FlowCoordinator
from dyadic_cz.parameter_controller import ParameterController


console = Console(stderr=True)


@click.group()
@click.option("--env-file", default=None, help="Path of a .env file with DYADIC_* parameter overrides.")
@click.pass_context
def main(ctx: click.Context, env_file: str) -> None:
    """Shifted dyadic filtrations, covering queries and the nondoubling Calderon-Zygmund decomposition."""
    ## Instantiating a ParameterController instance to be used in the flow_coordinator.
    param_controller = ParameterController()

    ## Registering default parameters, then the environment on top.
    param_controller.setup_default_parameters()
    try:
        param_controller.apply_environment_overrides(env_file)
    except ParameterError as exc:
        console.print(f"[bold red]invalid parameter override[/bold red]: {exc}")
        ctx.exit(EXIT_INPUT_ERROR)

    ## Instantiating the Flow Coordinator
    ctx.obj = FlowCoordinator(param_controller)


def _execute(ctx: click.Context, command: str, **options: Any) -> None:
    coordinator: FlowCoordinator = ctx.obj
    options = {name: value for name, value in options.items() if value is not None}
    outcome = coordinator.run_from_options(command=command, **options)
    if outcome.exit_code >= 2:
        render_error(console, outcome.exit_code, outcome.artifact)
    elif command == "suite":
        render_suite_table(console, outcome.artifact)
    else:
        render_verification(console, command, outcome.artifact)
    if outcome.exit_code >= 2 or not options.get("output_path"):
        sys.stdout.write(dump_artifact(outcome.artifact))
    ctx.exit(outcome.exit_code)


@main.command()
@click.option("--dim", "dimension", type=int, default=None)
@click.option("--center", required=True, help="Comma separated rationals, e.g. 1/2,1/2")
@click.option("--radius", required=True)
@click.option("--output", "output_path", default=None)
@click.pass_context
def cover(ctx: click.Context, **options: Any) -> None:
    """Cover a ball by one cube of the n+1 filtrations."""
    _execute(ctx, "cover", **options)


@main.command()
@click.option("--dim", "dimension", type=int, required=True)
@click.option("--m", "filtration", type=int, default=0)
@click.option("--k", "generation", type=int, default=0)
@click.option("--window-lower", default=None, help="Lower corner of a window whose cubes are listed")
@click.option("--window-side", default=None)
@click.option("--output", "output_path", default=None)
@click.pass_context
def grid(ctx: click.Context, **options: Any) -> None:
    """Offsets of generation k and, optionally, the cubes of A_m(k) meeting a window."""
    _execute(ctx, "grid", **options)


@main.command()
@click.option("--dim", "dimension", type=int, required=True)
@click.option("--keep", default=None, help="Comma separated filtration indices, at most n of them")
@click.option("--exclude", type=int, default=None, help="Keep every filtration except this one")
@click.option("--max-ratio", default=None, help="Side ratio to beat; defaults to 2p")
@click.option("--output", "output_path", default=None)
@click.pass_context
def witness(ctx: click.Context, **options: Any) -> None:
    """Find a ball that the kept filtrations cannot cover."""
    _execute(ctx, "witness", **options)


@main.command()
@click.option("--input", "input_path", required=True)
@click.option("--lambda", "lambda_level", required=True)
@click.option("--alpha", default=None)
@click.option("--beta", default=None)
@click.option("--selector", type=click.Choice(["default", "smallest"]), default=None)
@click.option("--window-padding", type=int, default=None)
@click.option("--unsigned", is_flag=True, default=False, help="Reject negative f instead of splitting it")
@click.option("--output", "output_path", default=None)
@click.pass_context
def czd(ctx: click.Context, unsigned: bool, **options: Any) -> None:
    """Calderon-Zygmund decomposition of a measure file at level lambda, verified."""
    _execute(ctx, "czd", allow_signed=not unsigned, **options)


@main.command()
@click.option("--report", "report_path", required=True)
@click.option("--output", "output_path", default=None)
@click.pass_context
def verify(ctx: click.Context, **options: Any) -> None:
    """Re-verify a decomposition report."""
    _execute(ctx, "verify", **options)


@main.command()
@click.option("--input", "input_path", required=True)
@click.option("--kernel", default="cauchy_real", help="cauchy_real, riesz or riesz_<d>")
@click.option("--eps", default="auto")
@click.option("--trials", type=int, default=1)
@click.option("--seed", type=int, default=None)
@click.option("--output", "output_path", default=None)
@click.pass_context
def weak11(ctx: click.Context, eps: str, **options: Any) -> None:
    """Empirical weak-(1,1) statistic of the truncated operator for random f."""
    _execute(ctx, "weak11", eps=None if eps == "auto" else eps, **options)


@main.command()
@click.option("--trials", type=int, default=10)
@click.option("--seed", type=int, default=None)
@click.option("--output", "output_path", default=None)
@click.pass_context
def annuli(ctx: click.Context, **options: Any) -> None:
    """Annuli-bound diagnostic over generated (Q, R) pairs."""
    _execute(ctx, "annuli", **options)


@main.command()
@click.option("--seed", type=int, default=None)
@click.option("--scale", default=None, help="Factor in (0, 1] applied to every trial count")
@click.option("--selector", type=click.Choice(["default", "smallest"]), default=None)
@click.option("--window-padding", type=int, default=None)
@click.option("--output", "output_path", default=None)
@click.pass_context
def suite(ctx: click.Context, **options: Any) -> None:
    """Run the full acceptance battery."""
    _execute(ctx, "suite", **options)


if __name__ == "__main__":
    main()
