from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Dict, List
import math

from .hazards import BaselineHazard
from .value_objects import (
    CensoringSpec,
    DependenceKind,
    EventDependenceSpec,
    FrailtySpec,
    IntensityModel,
    ScenarioConfig,
    Timescale,
)


class BaselineClass(Enum):
    CONSTANT = "ConstantBaseline"
    GAP_TIME = "GapTimeBaseline"
    CALENDAR_TIME = "CalendarTimeBaseline"


class PopulationClass(Enum):
    HOMOGENEOUS = "Homogeneous"
    HETEROGENEOUS = "Heterogeneous"


class DependenceClass(Enum):
    NONE = "None"
    EVENT_DEPENDENT = "EventDependent"


@dataclass(frozen=True)
class TaxonomyCell:
    baseline: BaselineClass
    population: PopulationClass
    dependence: DependenceClass

    @property
    def label(self) -> str:
        return f"{self.baseline.value}/{self.population.value}/{self.dependence.value}"


def classify_model(model: IntensityModel) -> TaxonomyCell:
    dependence = model.dependence
    if dependence.kind is DependenceKind.GENERAL:
        if not dependence.g0.is_constant:
            baseline = BaselineClass.CALENDAR_TIME
        elif not dependence.g1.is_constant:
            baseline = BaselineClass.GAP_TIME
        else:
            baseline = BaselineClass.CONSTANT
    elif model.baseline.is_constant_rate:
        # a constant hazard reads the same on either clock
        baseline = BaselineClass.CONSTANT
    elif model.timescale is Timescale.GAP:
        baseline = BaselineClass.GAP_TIME
    else:
        baseline = BaselineClass.CALENDAR_TIME

    population = (
        PopulationClass.HOMOGENEOUS
        if model.frailty.is_degenerate
        else PopulationClass.HETEROGENEOUS
    )
    dependence_class = (
        DependenceClass.EVENT_DEPENDENT
        if dependence.is_event_dependent
        else DependenceClass.NONE
    )
    return TaxonomyCell(baseline, population, dependence_class)


def classify_scenario(config: ScenarioConfig) -> TaxonomyCell:
    return classify_model(config.model)


class ScenarioCatalog:

    @staticmethod
    def get_cells() -> List[TaxonomyCell]:
        return [
            TaxonomyCell(b, p, d)
            for b, p, d in product(BaselineClass, PopulationClass, DependenceClass)
        ]

    @staticmethod
    def get_selecting_keys(cell: TaxonomyCell) -> Dict[str, str]:
        keys: Dict[str, str] = {}
        if cell.baseline is BaselineClass.CONSTANT:
            keys["model.baseline.kind"] = "constant"
        else:
            keys["model.timescale"] = (
                "gap" if cell.baseline is BaselineClass.GAP_TIME else "calendar"
            )
            keys["model.baseline.kind"] = "weibull"
            keys["model.baseline.nu"] = "!= 1"

        if cell.population is PopulationClass.HOMOGENEOUS:
            keys["frailty.kind"] = "none"
        else:
            keys["frailty.kind"] = "gamma | lognormal | binary"

        if cell.dependence is DependenceClass.NONE:
            keys["dependence.kind"] = "none"
        else:
            kinds = ["count", "capped_count", "decayed_count", "windowed_rate", "general"]
            if cell.baseline is not BaselineClass.CALENDAR_TIME:
                kinds.insert(0, "gap_multiplier")
            keys["dependence.kind"] = " | ".join(kinds)
        return keys

    @staticmethod
    def get_recommended_battery() -> Dict[str, ScenarioConfig]:
        """Processes a simulation study should include, one scenario each."""
        censoring = CensoringSpec.fixed(2.0)
        weibull = BaselineHazard.weibull(1.0, 2.0)
        constant = BaselineHazard.constant(1.0)

        def scenario(model: IntensityModel) -> ScenarioConfig:
            return ScenarioConfig(
                model=model, censoring=censoring, n_subjects=1000, seed=1
            )

        return {
            "constant-baseline": scenario(
                IntensityModel(Timescale.CALENDAR, constant)
            ),
            "mixed-poisson": scenario(
                IntensityModel(
                    Timescale.CALENDAR, constant, frailty=FrailtySpec.gamma(0.5)
                )
            ),
            "weibull-calendar": scenario(IntensityModel(Timescale.CALENDAR, weibull)),
            "weibull-gap": scenario(IntensityModel(Timescale.GAP, weibull)),
            "count-dependence": scenario(
                IntensityModel(
                    Timescale.CALENDAR,
                    constant,
                    dependence=EventDependenceSpec(
                        kind=DependenceKind.CAPPED_COUNT, phi=math.log(1.5), cap=4
                    ),
                )
            ),
        }
