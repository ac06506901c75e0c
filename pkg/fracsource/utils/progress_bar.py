from typing import Any

from alive_progress import alive_bar

from fracsource.core.models.config import Config


class ProgressBar:
    """
    Progress bar for long sweeps (sensitivity columns, certificate sweeps, suite checks).

    Use `ProgressBar` as a context manager and call `progress` once per finished item.
    The bar is hidden without an installed config, in quiet mode and when logs go to stderr.
    """

    def __init__(self, **kwargs: Any) -> None:
        config = Config.get_config()
        self.show_bar = config is not None and not config.quiet and not config.log_to_stderr
        if self.show_bar:
            self.alive_bar = alive_bar(**kwargs, enrich_print=False)

    def __enter__(self) -> "ProgressBar":
        if self.show_bar:
            self.bar = self.alive_bar.__enter__()
        return self

    def progress(self) -> None:
        if self.show_bar:
            self.bar()

    def __exit__(self, *args: Any) -> None:
        if self.show_bar:
            self.alive_bar.__exit__(*args)
