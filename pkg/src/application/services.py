from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import groupby
from typing import Dict, List, Optional, Sequence
import asyncio
import logging

from ..domain.entities import CountingProcessRecord, EventHistory, ValidationReport
from ..domain.exceptions import IncompatibleEngineError
from ..domain.intensity import DEFAULT_TOLERANCES
from ..domain.taxonomy import ScenarioCatalog, TaxonomyCell, classify_scenario
from ..domain.value_objects import (
    CensoringKind,
    DependenceKind,
    EngineKind,
    IntensityModel,
    ScenarioConfig,
    Timescale,
    Tolerances,
)
from .engines import build_engine, simulate_subject
from .validation import count_moment_check, engine_agreement, time_rescaling_check


logger = logging.getLogger(__name__)

BLOCKS_PER_WORKER = 4


def simulate_block(
    config: ScenarioConfig,
    tolerances: Tolerances,
    start: int,
    stop: int
) -> List[EventHistory]:
    engine = build_engine(config.engine, tolerances, config.dt)
    return [simulate_subject(config, engine, i) for i in range(start, stop)]


@dataclass(frozen=True)
class CohortSummary:
    n_subjects: int
    total_events: int

    @property
    def mean_events(self) -> float:
        return self.total_events / self.n_subjects if self.n_subjects else 0.0

    @classmethod
    def of(cls, cohort: Sequence[EventHistory]) -> "CohortSummary":
        return cls(len(cohort), sum(h.n_events for h in cohort))


class SimulationService:

    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES, workers: int = 1):
        self.tolerances = tolerances
        self.workers = workers

    async def simulate_cohort(self, config: ScenarioConfig) -> List[EventHistory]:
        logger.info(
            f"Simulating {config.n_subjects} subjects with the {config.engine.value} "
            f"engine (seed {config.seed}, workers {self.workers})"
        )
        build_engine(config.engine, self.tolerances, config.dt).check_supports(
            config.model
        )

        n = config.n_subjects
        if self.workers <= 1 or n < self.workers:
            cohort = simulate_block(config, self.tolerances, 0, n)
        else:
            cohort = await self._simulate_parallel(config)

        summary = CohortSummary.of(cohort)
        logger.info(
            f"Cohort done: {summary.total_events} events, "
            f"{summary.mean_events:.4f} per subject"
        )
        return cohort

    async def _simulate_parallel(self, config: ScenarioConfig) -> List[EventHistory]:
        n = config.n_subjects
        n_blocks = min(n, self.workers * BLOCKS_PER_WORKER)
        edges = [round(k * n / n_blocks) for k in range(n_blocks + 1)]
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            parts = await asyncio.gather(*(
                loop.run_in_executor(
                    pool, simulate_block, config, self.tolerances, start, stop
                )
                for start, stop in zip(edges, edges[1:])
            ))
        return [history for part in parts for history in part]


class CountingProcessService:

    @staticmethod
    def to_counting_process(
        cohort: Sequence[EventHistory],
        emit_frailty: bool = False
    ) -> List[CountingProcessRecord]:
        records: List[CountingProcessRecord] = []
        for history in sorted(cohort, key=lambda h: h.subject_id):
            frailty = history.frailty if emit_frailty else None
            start = 0.0
            for j, stop in enumerate(history.event_times, start=1):
                records.append(CountingProcessRecord(
                    subject_id=history.subject_id,
                    event_number=j,
                    start=start,
                    stop=stop,
                    status=1,
                    covariates=history.covariates,
                    frailty=frailty,
                ))
                start = stop
            records.append(CountingProcessRecord(
                subject_id=history.subject_id,
                event_number=history.n_events + 1,
                start=start,
                stop=history.censoring_time,
                status=0,
                covariates=history.covariates,
                frailty=frailty,
            ))
        return records

    @staticmethod
    def from_counting_process(
        records: Sequence[CountingProcessRecord],
        engine: EngineKind
    ) -> List[EventHistory]:
        cohort: List[EventHistory] = []
        ordered = sorted(records, key=lambda r: (r.subject_id, r.event_number))
        for subject_id, rows in groupby(ordered, key=lambda r: r.subject_id):
            rows = list(rows)
            last = rows[-1]
            if last.status != 0 or any(r.status != 1 for r in rows[:-1]):
                raise ValueError(
                    f"Subject {subject_id} must end with exactly one censored row"
                )
            cohort.append(EventHistory(
                subject_id=subject_id,
                event_times=tuple(r.stop for r in rows[:-1]),
                censoring_time=last.stop,
                frailty=last.frailty,
                covariates=last.covariates,
                engine=engine,
            ))
        return cohort


class ValidationService:

    def __init__(
        self,
        simulation_service: SimulationService,
        significance: float = 0.01,
        discrete_significance: float = 0.001,
        moment_tolerance: float = 3.0,
        agreement_sample_size: Optional[int] = None
    ):
        self.simulation = simulation_service
        self.significance = significance
        self.discrete_significance = discrete_significance
        self.moment_tolerance = moment_tolerance
        self.agreement_sample_size = agreement_sample_size

    @property
    def tolerances(self) -> Tolerances:
        return self.simulation.tolerances

    async def run_suite(
        self,
        config: ScenarioConfig,
        oracle_model: Optional[IntensityModel] = None
    ) -> List[ValidationReport]:
        model = oracle_model or config.model
        cell = classify_scenario(config)
        logger.info(f"Running oracle suite for {cell.label}")

        cohort = await self.simulation.simulate_cohort(config)
        reports = [
            time_rescaling_check(cohort, model, self.significance, self.tolerances)
        ]

        if self._supports_moments(model):
            if config.censoring.kind is CensoringKind.FIXED:
                reports.append(count_moment_check(
                    cohort, model, config.censoring.value, self.moment_tolerance
                ))
            else:
                logger.warning(
                    "Skipping count moments: needs fixed censoring, "
                    f"got {config.censoring.kind.value}"
                )

        partner = (
            EngineKind.THINNING
            if config.engine is EngineKind.INVERSION
            else EngineKind.INVERSION
        )
        try:
            build_engine(partner, self.tolerances).check_supports(config.model)
        except IncompatibleEngineError as e:
            logger.warning(f"Skipping engine agreement: {e}")
        else:
            uses_grid = EngineKind.DISCRETE in (config.engine, partner)
            reports.append(engine_agreement(
                config,
                config.engine,
                partner,
                self.agreement_sample_size or config.n_subjects,
                dt=config.dt,
                significance=(
                    self.discrete_significance if uses_grid else self.significance
                ),
                tolerances=self.tolerances,
            ))

        failed = [r.name for r in reports if not r.passed]
        if failed:
            logger.warning(f"Failed checks: {', '.join(failed)}")
        else:
            logger.info(f"All {len(reports)} checks passed")
        return reports

    @staticmethod
    def _supports_moments(model: IntensityModel) -> bool:
        if model.dependence.kind is not DependenceKind.NONE:
            return False
        return model.timescale is Timescale.CALENDAR or model.baseline.is_constant_rate


class ReportFormatterService:

    @staticmethod
    def format_report(report: ValidationReport) -> str:
        verdict = "✅ PASS" if report.passed else "❌ FAIL"
        return (
            f"{verdict} {report.name}\n"
            f"    n={report.sample_size} statistic={report.statistic:.6g} "
            f"threshold={report.threshold:.6g}\n"
            f"    {report.detail}"
        )

    @staticmethod
    def format_summary_line(report: ValidationReport) -> str:
        verdict = "pass" if report.passed else "fail"
        return f"{report.name}\t{report.statistic!r}\t{report.threshold!r}\t{verdict}"

    @staticmethod
    def format_suite(reports: Sequence[ValidationReport]) -> str:
        passed = sum(r.passed for r in reports)
        body = "\n".join(ReportFormatterService.format_report(r) for r in reports)
        return f"{body}\n\n{passed}/{len(reports)} checks passed"

    @staticmethod
    def format_cohort_summary(summary: CohortSummary) -> str:
        return (
            f"subjects={summary.n_subjects} events={summary.total_events} "
            f"mean_events_per_subject={summary.mean_events:.6g}"
        )

    @staticmethod
    def format_taxonomy() -> str:
        lines = []
        for cell in ScenarioCatalog.get_cells():
            keys = ScenarioCatalog.get_selecting_keys(cell)
            selection = ", ".join(f"{k}={v}" for k, v in keys.items())
            lines.append(f"{cell.label}\n    {selection}")
        return "\n".join(lines)

    @staticmethod
    def format_battery(battery: Dict[str, ScenarioConfig]) -> str:
        lines = []
        for name, config in battery.items():
            cell: TaxonomyCell = classify_scenario(config)
            lines.append(f"{name}: {cell.label}")
        return "\n".join(lines)
