from typing import Optional

from rich.table import Table

from fracsource.core.abstract import formatters
from fracsource.core.models.result import CheckResult, Result

PASS_LITERAL = "[green]pass[/green]"
FAIL_LITERAL = "[bold red]FAIL[/bold red]"
NONE_LITERAL = "-"


def _format_number(value: Optional[float]) -> str:
    return NONE_LITERAL if value is None else f"{value:.4g}"


def _format_status(check: CheckResult) -> str:
    return PASS_LITERAL if check.passed else FAIL_LITERAL


@formatters.register(rich_console=True)
def table(result: Result) -> Table:
    """Format the checks of a result as a rich table, one row per check."""

    rows = result.all_checks
    failed = sum(not check.passed for _, check in rows)

    caption = f"{len(rows) - failed}/{len(rows)} checks passed"
    if result.scenario_hash:
        caption += f" - scenario {result.scenario_hash[:12]}"

    table = Table(
        show_header=True,
        header_style="bold magenta",
        title=f"\n{result.description}\n" if result.description else None,
        title_justify="left",
        title_style="",
        caption=caption,
    )

    table.add_column("Number", justify="right", no_wrap=True)
    table.add_column("Suite", style="cyan")
    table.add_column("Check", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("Status")
    table.add_column("Detail", style="grey50")

    previous = None
    for i, (group, check) in enumerate(rows):
        table.add_row(
            f"{i + 1}.",
            group if group != previous else "",
            check.name,
            _format_number(check.value),
            _format_number(check.threshold),
            _format_status(check),
            check.detail or "",
            end_section=i + 1 < len(rows) and rows[i + 1][0] != group,
        )
        previous = group

    return table
