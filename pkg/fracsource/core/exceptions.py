from __future__ import annotations

from typing import Any, Optional


class FracSourceError(Exception): ...


class HypothesisViolation(FracSourceError):
    """A modelling hypothesis of the selected experiment does not hold.

    `condition` is the short tag of the violated condition (for example `eq-rho` or `vo`),
    `value` is the offending value as it was found in the input.
    """

    def __init__(self, condition: str, message: str, value: Any = None) -> None:
        self.condition = condition
        self.value = value
        super().__init__(f"[{condition}] {message}" + (f" (got {value!r})" if value is not None else ""))


class ScenarioParseError(FracSourceError):
    def __init__(self, path: str, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        self.column = column
        position = f":{line}:{column}" if line is not None else ""
        super().__init__(f"{path}{position}: {message}")


class NumericalFailure(FracSourceError, ArithmeticError): ...


class ResolventError(NumericalFailure):
    def __init__(self, p: complex, condition_estimate: float, message: str = "resolvent system is singular") -> None:
        self.p = p
        self.condition_estimate = condition_estimate
        super().__init__(f"{message} at p={p:.6g} (condition estimate {condition_estimate:.3e})")


class EigenSolverError(NumericalFailure): ...


class MittagLefflerConvergenceError(NumericalFailure): ...


class RankDeficiencyError(NumericalFailure): ...


class SpecialFunctionError(ValueError): ...


__all__ = [
    "FracSourceError",
    "HypothesisViolation",
    "ScenarioParseError",
    "NumericalFailure",
    "ResolventError",
    "EigenSolverError",
    "MittagLefflerConvergenceError",
    "RankDeficiencyError",
    "SpecialFunctionError",
]
