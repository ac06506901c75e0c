from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

import typer
from pydantic import ValidationError

from fracsource import formatters as concrete_formatters  # noqa: F401
from fracsource.core.abstract import formatters
from fracsource.core.abstract.suites import BaseSuite
from fracsource.core.exceptions import NumericalFailure
from fracsource.core.models.config import Config
from fracsource.core.models.enum import Experiment
from fracsource.core.numerics.special_functions import MLParams, evaluate_mittag_leffler
from fracsource.core.runner import Runner
from fracsource.utils.version import get_version

app = typer.Typer(
    pretty_exceptions_show_locals=False,
    pretty_exceptions_short=True,
    no_args_is_help=True,
    help="Forward solvers and inverse-source experiments for time-fractional evolution equations.",
)

logger = logging.getLogger("fracsource")

# experiments with a command of their own; every other experiment runs through `experiment`
EXPERIMENT_COMMANDS = (Experiment.FORWARD, Experiment.INVERT_H, Experiment.INVERT_MU_H)


@app.command(rich_help_panel="Utils")
def version() -> None:
    typer.echo(get_version())


@app.command("ml-eval", rich_help_panel="Utils")
def ml_eval(
    alpha: float = typer.Argument(..., help="Order α ∈ (0, 2]."),
    beta: float = typer.Argument(..., help="Second parameter β > 0."),
    z: str = typer.Argument(..., help="Argument, as a Python complex literal such as -3 or 1+2j."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose mode", rich_help_panel="Logging Settings"),
) -> None:
    """Evaluate E_{α,β}(z) and print the value and the regime that produced it."""

    try:
        argument = complex(z.replace(" ", ""))
    except ValueError:
        raise typer.BadParameter(f"{z!r} is not a complex number", param_hint="Z")

    Config.set_config(Config(verbose=verbose, log_to_stderr=True))
    try:
        value, regime = evaluate_mittag_leffler(MLParams(alpha=alpha, beta=beta), argument)
    except (ValidationError, ValueError) as e:
        logger.critical(e)
        raise typer.Exit(code=2)
    except NumericalFailure as e:
        logger.critical(e)
        raise typer.Exit(code=3)

    typer.echo(f"value: {value!r}")
    typer.echo(f"regime: {regime.value}")


def _start(
    command: str,
    *,
    experiment: Optional[Experiment] = None,
    suite: Optional[str] = None,
    **options: Any,
) -> None:
    try:
        config = Config(**options)
        Config.set_config(config)
    except ValidationError:
        logger.exception("Error occured while parsing arguments")
        raise typer.Exit(code=2)
    else:
        runner = Runner(command, experiment=experiment, suite=suite)
        exit_code = runner.run()
        raise typer.Exit(code=exit_code)


def _scenario_option(required: bool) -> Any:
    return typer.Option(
        ... if required else None,
        "--scenario",
        help="Path to the scenario YAML file." if required else "Path to a scenario YAML file; built-in defaults if omitted.",
        rich_help_panel="Run Settings",
    )


def _shared_options() -> dict[str, Any]:
    return dict(
        out_dir=typer.Option(
            None,
            "--out",
            "-o",
            help="Directory for the CSV/JSON artifacts and the run manifest.",
            rich_help_panel="Run Settings",
        ),
        seed=typer.Option(
            None,
            "--seed",
            help="Seed of every random draw; overrides the scenario seed.",
            rich_help_panel="Run Settings",
        ),
        threads=typer.Option(
            1,
            "--threads",
            envvar="FRACSOURCE_THREADS",
            help="Worker threads for contour solves and sensitivity columns.",
            rich_help_panel="Run Settings",
        ),
        format=typer.Option(
            "table",
            "--formatter",
            "-f",
            help=f"Output formatter ({', '.join(formatters.list_available())})",
            rich_help_panel="Logging Settings",
        ),
        verbose=typer.Option(False, "--verbose", "-v", help="Enable verbose mode", rich_help_panel="Logging Settings"),
        quiet=typer.Option(False, "--quiet", "-q", help="Enable quiet mode", rich_help_panel="Logging Settings"),
        log_to_stderr=typer.Option(
            False, "--logtostderr", help="Pass logs to stderr", rich_help_panel="Logging Settings"
        ),
        width=typer.Option(None, "--width", help="Width of the output.", rich_help_panel="Logging Settings"),
    )


def load_commands() -> None:
    shared = _shared_options()

    for experiment in EXPERIMENT_COMMANDS:
        # NOTE: This wrapper here is needed to avoid the experiment being overwritten in the loop
        def experiment_wrapper(_experiment: Experiment = experiment):
            def run_experiment(
                scenario_path: Path = _scenario_option(required=True),
                out_dir: Optional[Path] = shared["out_dir"],
                seed: Optional[int] = shared["seed"],
                threads: int = shared["threads"],
                format: str = shared["format"],
                verbose: bool = shared["verbose"],
                quiet: bool = shared["quiet"],
                log_to_stderr: bool = shared["log_to_stderr"],
                width: Optional[int] = shared["width"],
            ) -> None:
                _start(
                    _experiment.value,
                    experiment=_experiment,
                    scenario_path=scenario_path,
                    out_dir=out_dir,
                    seed=seed,
                    threads=threads,
                    format=format,
                    verbose=verbose,
                    quiet=quiet,
                    log_to_stderr=log_to_stderr,
                    width=width,
                )

            run_experiment.__name__ = _experiment.value
            run_experiment.__doc__ = f"Run the `{_experiment.value}` experiment on a scenario file."
            app.command(_experiment.value, rich_help_panel="Experiments")(run_experiment)

        experiment_wrapper()


@app.command("experiment", rich_help_panel="Experiments")
def experiment(
    scenario_path: Path = _scenario_option(required=True),
    out_dir: Optional[Path] = _shared_options()["out_dir"],
    seed: Optional[int] = _shared_options()["seed"],
    threads: int = _shared_options()["threads"],
    format: str = _shared_options()["format"],
    verbose: bool = _shared_options()["verbose"],
    quiet: bool = _shared_options()["quiet"],
    log_to_stderr: bool = _shared_options()["log_to_stderr"],
    width: Optional[int] = _shared_options()["width"],
) -> None:
    """Run the experiment named by the scenario's `experiment` field."""
    _start(
        "experiment",
        scenario_path=scenario_path,
        out_dir=out_dir,
        seed=seed,
        threads=threads,
        format=format,
        verbose=verbose,
        quiet=quiet,
        log_to_stderr=log_to_stderr,
        width=width,
    )


@app.command("verify", rich_help_panel="Verification")
def verify(
    suite: str = typer.Option(
        ...,
        "--suite",
        "-s",
        help=f"Verification suite ({', '.join(BaseSuite.get_all())}).",
        rich_help_panel="Run Settings",
    ),
    scenario_path: Optional[Path] = _scenario_option(required=False),
    out_dir: Optional[Path] = _shared_options()["out_dir"],
    seed: Optional[int] = _shared_options()["seed"],
    threads: int = _shared_options()["threads"],
    format: str = _shared_options()["format"],
    verbose: bool = _shared_options()["verbose"],
    quiet: bool = _shared_options()["quiet"],
    log_to_stderr: bool = _shared_options()["log_to_stderr"],
    width: Optional[int] = _shared_options()["width"],
) -> None:
    """Run a verification suite on a scenario, or on the suite's defaults."""
    try:
        BaseSuite.find(suite)
    except ValueError as e:
        raise typer.BadParameter(str(e), param_hint="--suite")

    _start(
        f"verify --suite {suite}",
        suite=suite,
        scenario_path=scenario_path,
        out_dir=out_dir,
        seed=seed,
        threads=threads,
        format=format,
        verbose=verbose,
        quiet=quiet,
        log_to_stderr=log_to_stderr,
        width=width,
    )


def run() -> None:
    load_commands()
    app()


if __name__ == "__main__":
    run()
