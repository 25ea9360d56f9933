from typing import Any, Dict, List

from rich.console import Console
from rich.table import Table


def render_suite_table(console: Console, artifact: Dict[str, Any]) -> None:
    ##### ACCEPTANCE SUMMARY
    table = Table(title=f"Acceptance suite (seed {artifact['seed']}, scale {artifact['scale']})")
    table.add_column("#", justify="right")
    table.add_column("criterion")
    table.add_column("trials", justify="right")
    table.add_column("failures", justify="right")
    table.add_column("result")
    for criterion in artifact["criteria"]:
        table.add_row(
            str(criterion["criterion"]),
            criterion["name"],
            str(criterion["trials"]),
            str(criterion["failures"]),
            "[green]pass[/green]" if criterion["passed"] else "[red]FAIL[/red]",
        )
    console.print(table)


def render_checks_table(console: Console, title: str, checks: List[Dict[str, Any]]) -> None:
    table = Table(title=title)
    table.add_column("check")
    table.add_column("slack", justify="right")
    table.add_column("failures", justify="right")
    table.add_column("result")
    for check in checks:
        table.add_row(
            check["name"],
            check["slack"] if check["slack"] is not None else "-",
            str(check["failure_count"]),
            "[green]pass[/green]" if check["passed"] else "[red]FAIL[/red]",
        )
    console.print(table)


def render_verification(console: Console, command: str, artifact: Dict[str, Any]) -> None:
    """Tables for czd and verify artifacts; other commands print nothing here."""
    if command == "verify":
        for name, report in artifact["reports"].items():
            render_checks_table(console, f"verification of {name}", report["checks"])
    elif command == "czd":
        parts = artifact.get("parts", {"f": artifact})
        for name, part in parts.items():
            pieces = len(part["decomposition"]["records"])
            render_checks_table(console, f"decomposition of {name}: {pieces} pieces", part["verification"]["checks"])


def render_error(console: Console, exit_code: int, artifact: Dict[str, Any]) -> None:
    console.print(f"[bold red]exit {exit_code}[/bold red]: {artifact.get('error')}: {artifact.get('message', '')}")
