from __future__ import annotations

from datetime import datetime
from typing import Any, Optional, Union

import pydantic as pd

from fracsource.core.abstract import formatters
from fracsource.core.models.enum import Experiment
from fracsource.core.numerics.inverse import InverseReport


class CheckResult(pd.BaseModel):
    """One acceptance check: `value` compared against `threshold`."""

    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: Optional[str] = None

    @classmethod
    def at_most(cls, name: str, value: float, threshold: float, detail: Optional[str] = None) -> CheckResult:
        return cls(name=name, passed=bool(value <= threshold), value=value, threshold=threshold, detail=detail)

    @classmethod
    def at_least(cls, name: str, value: float, threshold: float, detail: Optional[str] = None) -> CheckResult:
        return cls(name=name, passed=bool(value >= threshold), value=value, threshold=threshold, detail=detail)

    @classmethod
    def holds(cls, name: str, condition: bool, detail: Optional[str] = None) -> CheckResult:
        return cls(name=name, passed=bool(condition), detail=detail)


class SuiteResult(pd.BaseModel):
    name: str
    settings: dict[str, Any] = {}
    checks: list[CheckResult] = []
    details: dict[str, Any] = {}

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class Result(pd.BaseModel):
    name: str
    description: Optional[str] = None
    experiment: Optional[Experiment] = None
    scenario_hash: Optional[str] = None
    seed: Optional[int] = None
    hypotheses: list[str] = []
    checks: list[CheckResult] = []
    suites: list[SuiteResult] = []
    report: Optional[InverseReport] = None
    details: dict[str, Any] = {}
    passed: bool = True

    def __init__(self, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self.passed = self.__calculate_passed()

    def __calculate_passed(self) -> bool:
        checks_passed = all(check.passed for check in self.checks)
        suites_passed = all(suite.passed for suite in self.suites)
        return checks_passed and suites_passed

    @property
    def all_checks(self) -> list[tuple[str, CheckResult]]:
        """Every check paired with the name of the suite it belongs to."""
        rows = [(self.name, check) for check in self.checks]
        for suite in self.suites:
            rows.extend((suite.name, check) for check in suite.checks)
        return rows

    def format(self, formatter: Union[formatters.FormatterFunc, str]) -> Any:
        """Format the result.

        Args:
            formatter: The formatter to use.

        Returns:
            The formatted result.
        """

        formatter = formatters.find(formatter) if isinstance(formatter, str) else formatter
        return formatter(self)


class RunManifest(pd.BaseModel):
    """Provenance of one CLI run. Timestamps live here only, never in the artifacts."""

    command: str
    scenario_hash: Optional[str] = None
    scenario_path: Optional[str] = None
    version: str
    seed: Optional[int] = None
    threads: int = 1
    started_at: datetime
    finished_at: Optional[datetime] = None
    outputs: dict[str, str] = {}
    validation_log: list[str] = []
    exit_code: Optional[int] = None
    errors: list[dict[str, Any]] = []
