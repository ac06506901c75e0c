from __future__ import annotations

import abc
from typing import Generic, Optional, TypeVar, get_args

import pydantic as pd

from fracsource.core.models.result import SuiteResult
from fracsource.core.models.scenario import Scenario


class SuiteSettings(pd.BaseModel):
    """Knobs of a verification suite.

    Every field needs a default: suites run without any configuration.
    Description is used to document the settings in the report.
    """

    seed: int = pd.Field(0, ge=0, description="Seed of every random draw in the suite.")


SelfBS = TypeVar("SelfBS", bound="BaseSuite")
_SuiteSettings = TypeVar("_SuiteSettings", bound=SuiteSettings)


class BaseSuite(abc.ABC, Generic[_SuiteSettings]):
    """An abstract base class for verification suites.

    The class is generic over its settings type, which is instantiated from defaults and the run seed.
    A suite runs on a scenario; when none is given it uses the scenario returned by `default_scenario`.

    Suites register themselves through the __subclasses__ mechanism and are found by `display_name`.
    """

    display_name: str

    def __init__(self, settings: _SuiteSettings):
        self.settings = settings

    def __str__(self) -> str:
        return self.display_name

    @property
    def description(self) -> Optional[str]:
        return self.__doc__.strip().splitlines()[0] if self.__doc__ else None

    def default_scenario(self) -> Scenario:
        return Scenario.default()

    @abc.abstractmethod
    def run(self, scenario: Scenario, *, threads: int = 1) -> SuiteResult:
        pass

    @classmethod
    def find(cls: type[SelfBS], name: str) -> type[SelfBS]:
        suites = cls.get_all()
        if name.lower() in suites:
            return suites[name.lower()]

        raise ValueError(f"Unknown suite name: {name}. Available suites: {', '.join(suites)}")

    @classmethod
    def get_all(cls: type[SelfBS]) -> dict[str, type[SelfBS]]:
        from fracsource import suites as _  # noqa: F401

        return {sub_cls.display_name.lower(): sub_cls for sub_cls in cls.__subclasses__()}

    @classmethod
    def get_settings_type(cls) -> type[SuiteSettings]:
        return get_args(cls.__orig_bases__[0])[0]  # type: ignore


AnySuite = BaseSuite[SuiteSettings]


__all__ = ["AnySuite", "BaseSuite", "SuiteSettings"]
