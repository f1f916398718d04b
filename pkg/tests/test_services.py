import math

import pytest

from src.application.services import (
    CohortSummary,
    CountingProcessService,
    ReportFormatterService,
    SimulationService,
    ValidationService,
    simulate_block,
)
from src.domain.entities import CountingProcessRecord, EventHistory, ValidationReport
from src.domain.hazards import BaselineHazard
from src.domain.intensity import DEFAULT_TOLERANCES
from src.domain.taxonomy import ScenarioCatalog
from src.domain.value_objects import (
    CensoringSpec,
    DependenceKind,
    EngineKind,
    EventDependenceSpec,
    FrailtySpec,
    IntensityModel,
    ScenarioConfig,
    Timescale,
)
from src.infrastructure.writers import render_dataset


def poisson_config(n: int = 200, seed: int = 1, **kwargs) -> ScenarioConfig:
    model = IntensityModel(Timescale.CALENDAR, BaselineHazard.constant(1.0))
    return ScenarioConfig(model, CensoringSpec.fixed(2.0), n, seed=seed, **kwargs)


class TestSimulationService:

    @pytest.mark.asyncio
    async def test_simulate_cohort(self):
        config = poisson_config(n=100, seed=9)
        service = SimulationService()

        cohort = await service.simulate_cohort(config)

        assert len(cohort) == 100
        assert [h.subject_id for h in cohort] == list(range(100))
        assert cohort == simulate_block(config, DEFAULT_TOLERANCES, 0, 100)

    @pytest.mark.asyncio
    async def test_parallel_matches_serial(self):
        config = poisson_config(n=60, seed=10)

        serial = await SimulationService(workers=1).simulate_cohort(config)
        parallel = await SimulationService(workers=2).simulate_cohort(config)

        assert parallel == serial

    @pytest.mark.asyncio
    async def test_run_twice_identical(self):
        config = poisson_config(n=1000, seed=123)
        service = SimulationService()

        assert await service.simulate_cohort(config) == await service.simulate_cohort(config)

    def test_cohort_summary(self):
        cohort = [
            EventHistory(0, (1.0, 3.0), 5.0, None, (), EngineKind.INVERSION),
            EventHistory(1, (), 2.0, None, (), EngineKind.INVERSION),
        ]

        summary = CohortSummary.of(cohort)

        assert summary.n_subjects == 2
        assert summary.total_events == 2
        assert summary.mean_events == 1.0


class TestCountingProcessService:

    def test_rows_for_events(self):
        history = EventHistory(0, (1.0, 3.0), 5.0, 1.3, (0.5,), EngineKind.INVERSION)

        records = CountingProcessService.to_counting_process([history])

        assert [(r.start, r.stop, r.status) for r in records] == [
            (0.0, 1.0, 1), (1.0, 3.0, 1), (3.0, 5.0, 0)
        ]
        assert [r.event_number for r in records] == [1, 2, 3]
        assert all(r.covariates == (0.5,) for r in records)
        assert all(r.frailty is None for r in records)

    def test_censored_only_subject(self):
        history = EventHistory(4, (), 2.0, 1.0, (), EngineKind.THINNING)

        records = CountingProcessService.to_counting_process([history], emit_frailty=True)

        assert records == [CountingProcessRecord(4, 1, 0.0, 2.0, 0, (), 1.0)]

    def test_structure_of_simulated_cohort(self):
        config = poisson_config(n=50, seed=3)
        cohort = simulate_block(config, DEFAULT_TOLERANCES, 0, 50)

        records = CountingProcessService.to_counting_process(cohort)

        for history in cohort:
            rows = [r for r in records if r.subject_id == history.subject_id]
            assert rows[-1].stop == history.censoring_time
            assert sum(r.status for r in rows) == history.n_events

    def test_back_to_histories(self):
        cohort = [
            EventHistory(0, (1.0, 3.0), 5.0, 0.7, (1.0,), EngineKind.INVERSION),
            EventHistory(1, (), 2.0, 1.4, (0.0,), EngineKind.INVERSION),
        ]
        records = CountingProcessService.to_counting_process(cohort, emit_frailty=True)

        restored = CountingProcessService.from_counting_process(
            records, EngineKind.INVERSION
        )

        assert restored == cohort

    def test_rendered_rows(self):
        cohort = [
            EventHistory(
                0, (0.1, 0.30000000000000004), 2.0, 1.25, (1.0, -0.5), EngineKind.INVERSION
            ),
            EventHistory(1, (), 2.0, None, (0.0, 2.5), EngineKind.INVERSION),
        ]
        records = CountingProcessService.to_counting_process(cohort, emit_frailty=True)

        text = render_dataset(records, n_covariates=2, emit_frailty=True)

        assert text == (
            "subject_id,event_number,start,stop,status,x1,x2,frailty\n"
            "0,1,0.0,0.1,1,1.0,-0.5,1.25\n"
            "0,2,0.1,0.30000000000000004,1,1.0,-0.5,1.25\n"
            "0,3,0.30000000000000004,2.0,0,1.0,-0.5,1.25\n"
            "1,1,0.0,2.0,0,0.0,2.5,\n"
        )
        assert render_dataset(records[:1], n_covariates=2) == (
            "subject_id,event_number,start,stop,status,x1,x2\n"
            "0,1,0.0,0.1,1,1.0,-0.5\n"
        )

    def test_rejects_open_subject(self):
        records = [CountingProcessRecord(0, 1, 0.0, 1.0, 1)]

        with pytest.raises(ValueError, match="censored row"):
            CountingProcessService.from_counting_process(records, EngineKind.INVERSION)


class TestValidationService:

    @pytest.mark.asyncio
    async def test_poisson_suite(self):
        service = ValidationService(
            SimulationService(), significance=0.001, moment_tolerance=4.0
        )

        reports = await service.run_suite(poisson_config(n=2000, seed=77))

        assert [r.name for r in reports] == [
            "time-rescaling",
            "count-moments",
            "engine-agreement[inversion~thinning]",
        ]
        assert all(r.passed for r in reports), [r.detail for r in reports]

    @pytest.mark.asyncio
    async def test_event_dependent_suite_skips_moments(self):
        config = ScenarioCatalog.get_recommended_battery()["count-dependence"]
        service = ValidationService(
            SimulationService(), significance=0.001, agreement_sample_size=300
        )

        reports = await service.run_suite(config.with_overrides(n_subjects=300))

        names = [r.name for r in reports]
        assert "count-moments" not in names
        assert names[0] == "time-rescaling"
        assert reports[-1].sample_size == 300

    @pytest.mark.asyncio
    @pytest.mark.parametrize("censoring", [
        CensoringSpec.exponential(0.5),
        CensoringSpec.uniform(0.0, 4.0),
    ])
    async def test_moments_need_fixed_censoring(self, censoring, caplog):
        model = IntensityModel(Timescale.CALENDAR, BaselineHazard.constant(1.0))
        config = ScenarioConfig(model, censoring, 300, seed=12)
        service = ValidationService(SimulationService(), significance=0.001)

        reports = await service.run_suite(config)

        assert [r.name for r in reports] == [
            "time-rescaling",
            "engine-agreement[inversion~thinning]",
        ]
        assert "Skipping count moments" in caplog.text

    @pytest.mark.asyncio
    async def test_incompatible_partner_skipped(self):
        model = IntensityModel(
            Timescale.GAP,
            BaselineHazard.constant(1.0),
            dependence=EventDependenceSpec(kind=DependenceKind.GAP_MULTIPLIER, alpha=1.2),
        )
        config = ScenarioConfig(model, CensoringSpec.fixed(1.0), 100, seed=5)

        reports = await ValidationService(SimulationService()).run_suite(config)

        assert [r.name for r in reports] == ["time-rescaling"]

    @pytest.mark.asyncio
    async def test_oracle_model_override(self):
        config = poisson_config(n=400, seed=6)
        wrong = IntensityModel(
            Timescale.CALENDAR,
            BaselineHazard.constant(3.0),
            frailty=FrailtySpec.gamma(0.0),
        )

        reports = await ValidationService(SimulationService()).run_suite(config, wrong)

        assert not reports[0].passed


class TestReportFormatterService:

    def test_summary_line(self):
        report = ValidationReport.evaluate("time-rescaling", 10, 0.125, 0.5)

        line = ReportFormatterService.format_summary_line(report)

        assert line == "time-rescaling\t0.125\t0.5\tpass"

    def test_format_suite(self):
        reports = [
            ValidationReport.evaluate("a", 10, 0.1, 0.5),
            ValidationReport.evaluate("b", 10, math.inf, 0.5, "no data"),
        ]

        text = ReportFormatterService.format_suite(reports)

        assert "✅ PASS a" in text
        assert "❌ FAIL b" in text
        assert "1/2 checks passed" in text

    def test_format_taxonomy_and_battery(self):
        taxonomy = ReportFormatterService.format_taxonomy()
        battery = ReportFormatterService.format_battery(
            ScenarioCatalog.get_recommended_battery()
        )

        assert "ConstantBaseline/Heterogeneous/None" in taxonomy
        assert "frailty.kind=gamma | lognormal | binary" in taxonomy
        assert "mixed-poisson: ConstantBaseline/Heterogeneous/None" in battery
