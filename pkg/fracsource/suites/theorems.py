import logging
from typing import Any

import pydantic as pd

from fracsource.core.abstract.suites import BaseSuite, SuiteSettings
from fracsource.core.exceptions import HypothesisViolation
from fracsource.core.models.enum import Experiment
from fracsource.core.models.result import CheckResult, Result, SuiteResult
from fracsource.core.models.scenario import Scenario, build_problem, check_hypotheses
from fracsource.core.runner import run_experiment
from fracsource.utils.progress_bar import ProgressBar

logger = logging.getLogger("fracsource")

VARIABLE_ORDER_GEOMETRY: dict[str, Any] = {
    "experiment": Experiment.VARIABLE_ORDER.value,
    "order": {
        "alpha": None,
        "partition": [{"region": [[0.0, 0.5]], "alpha": 0.4}, {"region": [[0.5, 1.0]], "alpha": 0.6}],
    },
    "source": {"h": [{"kind": "bump", "support": [[0.05, 0.35]]}]},
    "observation": {"omega": [[0.8, 1.0]], "obstacle": [[0.4, 0.9]], "t1": 0.25},
}

# name -> scenario updates of experiments expected to succeed
RECOVERIES: dict[str, dict[str, Any]] = {
    "invert-h": {"experiment": "invert-h", "order": {"alpha": 0.5, "partition": None}, "observation": {"t1": 0.25}},
    "invert-h-alpha-1": {
        "experiment": "invert-h",
        "order": {"alpha": 1.0, "partition": None},
        "observation": {"t1": 0.0},
    },
    "invert-mu-h": {
        "experiment": "invert-mu-h",
        "order": {"alpha": 0.5, "partition": None},
        "source": {"mu": [{"kind": "bump", "support": [[0.0, 0.8]]}]},
        "observation": {"t1": 0.0},
    },
    "variable-order": VARIABLE_ORDER_GEOMETRY,
    "delayed-window": {"experiment": "delayed-window", "order": {"alpha": 0.5, "partition": None}},
}

HYPERBOLIC = {"experiment": "hyperbolic", "order": {"alpha": 2.0, "partition": None}}

# name -> (scenario updates, condition tag the run must be rejected with)
REJECTIONS: dict[str, tuple[dict[str, Any], str]] = {
    "interface-outside-obstacle": ({"observation": {"obstacle": [[0.6, 0.9]]}}, "t3b"),
    "omega-misses-obstacle": ({"observation": {"obstacle": [[0.4, 0.7]]}}, "t3aa"),
    "inadmissible-orders": (
        {
            "order": {
                "partition": [{"region": [[0.0, 0.5]], "alpha": 0.3}, {"region": [[0.5, 1.0]], "alpha": 0.7}],
            }
        },
        "vo",
    ),
}


class TheoremsSuiteSettings(SuiteSettings):
    hyperbolic: bool = pd.Field(True, description="Include the hyperbolic uniqueness experiment.")
    rejections: bool = pd.Field(True, description="Include the geometries that must be rejected.")


class TheoremsSuite(BaseSuite[TheoremsSuiteSettings]):
    """Uniqueness results: recovery of h and (μ, h) for constant and variable orders, and rejected geometries.

    Every recovery experiment runs end to end on a scenario derived from the given one; the geometries
    violating the variable-order hypotheses must be rejected with the tag of the violated condition.
    """

    display_name = "theorems"

    def default_scenario(self) -> Scenario:
        return Scenario.default(Experiment.INVERT_H)

    def recover(self, name: str, scenario: Scenario, updates: dict[str, Any], threads: int) -> CheckResult:
        try:
            result, _ = run_experiment(scenario.derive(**updates), threads=threads)
        except HypothesisViolation as e:
            logger.warning(f"{name}: {e}")
            return CheckResult.holds(name, False, detail=str(e))
        return CheckResult.holds(name, result.passed, detail=self._summary(result))

    @staticmethod
    def _summary(result: Result) -> str:
        failed = [check.name for check in result.checks if not check.passed]
        if failed:
            return "failed: " + ", ".join(failed)
        errors = result.report.errors if result.report is not None else {}
        return ", ".join(f"{key} error {value:.2e}" for key, value in errors.items()) or "passed"

    def reject(self, name: str, scenario: Scenario, updates: dict[str, Any], condition: str) -> CheckResult:
        try:
            check_hypotheses(build_problem(scenario.derive(**VARIABLE_ORDER_GEOMETRY).derive(**updates)))
        except HypothesisViolation as e:
            return CheckResult.holds(f"rejects_{name}", e.condition == condition, detail=f"[{e.condition}]")
        return CheckResult.holds(f"rejects_{name}", False, detail=f"accepted, expected [{condition}]")

    def run(self, scenario: Scenario, *, threads: int = 1) -> SuiteResult:
        settings = self.settings
        one_dimensional = scenario.mesh.dimension == 1
        cases = {name: updates for name, updates in RECOVERIES.items() if one_dimensional or name != "variable-order"}
        if settings.hyperbolic and one_dimensional:
            cases["hyperbolic"] = HYPERBOLIC

        checks = []
        with ProgressBar(total=len(cases), title="Recoveries") as bar:
            for name, updates in cases.items():
                checks.append(self.recover(name, scenario, updates, threads))
                bar.progress()

        if settings.rejections and one_dimensional:
            checks += [
                self.reject(name, scenario, updates, condition) for name, (updates, condition) in REJECTIONS.items()
            ]

        logger.info(f"Theorems: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
        return SuiteResult(name=self.display_name, settings=settings.dict(), checks=checks)
