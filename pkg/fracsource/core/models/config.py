from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional

import pydantic as pd
from rich.console import Console
from rich.logging import RichHandler

from fracsource.core.abstract import formatters

logger = logging.getLogger("fracsource")


class Config(pd.BaseSettings):
    """Process-wide settings of one CLI invocation.

    Numerical code never reads these; they only steer the runner, the console and the artifacts.
    """

    quiet: bool = pd.Field(False)
    verbose: bool = pd.Field(False)

    # Output
    format: str = pd.Field("table", description="Name of a registered result formatter.")
    log_to_stderr: bool = pd.Field(False)
    width: Optional[int] = pd.Field(None, ge=1, description="Console width; detected when not given.")

    # Run
    threads: int = pd.Field(1, ge=1, env="FRACSOURCE_THREADS")
    seed: Optional[int] = pd.Field(None, ge=0, description="Overrides the scenario seed.")
    scenario_path: Optional[Path] = pd.Field(None)
    out_dir: Optional[Path] = pd.Field(None)

    _console: Optional[Console] = pd.PrivateAttr(None)

    @pd.validator("format")
    def validate_format(cls, v: str) -> str:
        formatters.find(v)
        return v

    @property
    def formatter(self) -> formatters.FormatterFunc:
        return formatters.find(self.format)

    @property
    def logging_console(self) -> Console:
        if self._console is None:
            self._console = Console(file=sys.stderr if self.log_to_stderr else sys.stdout, width=self.width)
        return self._console

    @property
    def log_level(self) -> int:
        if self.verbose:
            return logging.DEBUG
        return logging.CRITICAL if self.quiet else logging.INFO

    @staticmethod
    def set_config(config: Config) -> None:
        """Install `config` for the `settings` proxy and route the package logger through rich."""

        global _config
        _config = config

        logging.basicConfig(
            level="NOTSET",
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler(console=config.logging_console, show_path=config.verbose)],
        )
        logging.getLogger("").setLevel(logging.CRITICAL)
        logger.setLevel(config.log_level)

    @staticmethod
    def get_config() -> Optional[Config]:
        return _config


class _SettingsProxy(Config):
    """Forwards attribute access to the installed `Config`; import `settings` instead of passing configs around."""

    def __init__(self) -> None:
        pass

    @property
    def logging_console(self) -> Console:
        # cached on the installed config, which owns the stream
        return getattr(_config, "logging_console")

    def __getattr__(self, name: str):
        if _config is None:
            raise AttributeError(f"No config installed, cannot read {name!r}")
        return getattr(_config, name)


_config: Optional[Config] = None
settings = _SettingsProxy()
