import json

import pytest
import yaml
from rich.console import Console

from fracsource.core.abstract import formatters
from fracsource.core.models.enum import Experiment
from fracsource.core.models.result import CheckResult, Result, SuiteResult


@pytest.fixture
def result() -> Result:
    return Result(
        name="forward",
        description="Forward solve",
        experiment=Experiment.FORWARD,
        scenario_hash="0123456789abcdef",
        checks=[CheckResult.holds("causal", True)],
        suites=[
            SuiteResult(
                name="operators",
                checks=[
                    CheckResult.at_most("residue_one_over_p", 1e-12, 1e-8),
                    CheckResult.at_least("ml_decay_slope", 0.2, 0.5),
                ],
            )
        ],
    )


def test_passed_follows_checks(result):
    assert not result.passed
    assert Result(name="empty").passed


def test_json_formatter(result):
    data = json.loads(result.format("json"))
    assert data["passed"] is False
    assert data["experiment"] == "forward"
    assert [check["name"] for check in data["suites"][0]["checks"]] == ["residue_one_over_p", "ml_decay_slope"]


def test_yaml_formatter(result):
    data = yaml.safe_load(result.format("yaml"))
    assert data["name"] == "forward"
    assert data["checks"][0]["passed"] is True


def test_table_formatter(result):
    console = Console(width=160, record=True)
    console.print(result.format("table"))
    text = console.export_text()
    assert "residue_one_over_p" in text
    assert "FAIL" in text
    assert "2/3 checks passed" in text


def test_unknown_formatter(result):
    with pytest.raises(ValueError):
        result.format("csv")
    assert set(formatters.list_available()) >= {"json", "yaml", "table"}
