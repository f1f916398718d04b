import math

import numpy as np
import pytest

from src.application.engines import (
    DiscreteEngine,
    GapRejectionEngine,
    InversionEngine,
    ThinningEngine,
    build_engine,
    simulate_subject,
)
from src.application.services import simulate_block
from src.application.validation import ks_critical_value, ks_test
from src.domain.exceptions import (
    BoundViolationError,
    ExplosionError,
    IncompatibleEngineError,
    StepSizeError,
)
from src.domain.hazards import BaselineHazard
from src.domain.intensity import DEFAULT_TOLERANCES
from src.domain.value_objects import (
    CensoringSpec,
    DependenceKind,
    EngineKind,
    EventDependenceSpec,
    FrailtySpec,
    IntensityModel,
    ScenarioConfig,
    Timescale,
    Tolerances,
)


class SequenceRng:
    """Stands in for a generator whose uniforms are fixed in advance."""

    def __init__(self, values):
        self._values = iter(values)

    def random(self):
        return next(self._values)


def poisson_model(lam: float = 1.0) -> IntensityModel:
    return IntensityModel(Timescale.CALENDAR, BaselineHazard.constant(lam))


def weibull_model(timescale: Timescale = Timescale.CALENDAR) -> IntensityModel:
    return IntensityModel(timescale, BaselineHazard.weibull(1.0, 2.0))


class TestInversionEngine:

    def test_exponential_gaps_from_uniform_stream(self):
        rng = SequenceRng([math.exp(-1), math.exp(-2), math.exp(-3), math.exp(-4)])

        history = InversionEngine().simulate(poisson_model(), (), 9.5, rng)

        assert history.event_times == pytest.approx((1.0, 3.0, 6.0))
        assert history.censoring_time == 9.5
        assert history.engine is EngineKind.INVERSION

    def test_calendar_weibull_first_event(self):
        rng = SequenceRng([math.exp(-3), math.exp(-100)])

        history = InversionEngine().simulate(weibull_model(), (), 5.0, rng)

        assert history.event_times == pytest.approx((math.sqrt(3.0),))

    def test_censoring_before_first_event(self):
        history = InversionEngine().simulate(
            poisson_model(1e-3), (), 1e-4, np.random.default_rng(5)
        )

        assert history.event_times == ()
        assert history.censoring_time == 1e-4

    def test_uncapped_multiplier_explodes(self):
        model = IntensityModel(
            Timescale.GAP,
            BaselineHazard.constant(1.0),
            dependence=EventDependenceSpec(kind=DependenceKind.GAP_MULTIPLIER, alpha=2.0),
        )
        config = ScenarioConfig(model, CensoringSpec.fixed(10.0), 10, seed=3)

        with pytest.raises(ExplosionError) as error:
            simulate_subject(config, InversionEngine(), 7)

        assert error.value.subject_id == 7
        assert "subject 7" in str(error.value)

    def test_explosion_limit(self):
        engine = InversionEngine(Tolerances(explosion_limit=5))

        with pytest.raises(ExplosionError) as error:
            engine.simulate(poisson_model(10.0), (), 10.0, np.random.default_rng(1), 4)

        assert error.value.events == 6
        assert error.value.subject_id == 4

    @pytest.mark.parametrize(
        "timescale, dependence",
        [
            (Timescale.CALENDAR, EventDependenceSpec()),
            (Timescale.CALENDAR, EventDependenceSpec(kind=DependenceKind.COUNT, phi=-0.3)),
            (
                Timescale.GAP,
                EventDependenceSpec(kind=DependenceKind.GAP_MULTIPLIER, alpha=1.5, cap=4),
            ),
            (
                Timescale.GAP,
                EventDependenceSpec(kind=DependenceKind.CAPPED_COUNT, phi=-0.4, cap=2),
            ),
        ],
    )
    def test_hoisted_closed_form_matches_per_gap_inversion(
        self, monkeypatch, timescale, dependence
    ):
        model = IntensityModel(
            timescale,
            BaselineHazard.weibull(0.8, 1.6),
            beta=(0.5, -0.2),
            frailty=FrailtySpec.gamma(0.5),
            dependence=dependence,
        )
        covariates = (1.0, 0.3)
        fast = [
            InversionEngine().simulate(model, covariates, 6.0, np.random.default_rng(s), s)
            for s in range(50)
        ]

        monkeypatch.setattr(
            "src.application.engines.closed_form_throughout", lambda dependence: False
        )
        per_gap = [
            InversionEngine().simulate(model, covariates, 6.0, np.random.default_rng(s), s)
            for s in range(50)
        ]

        for a, b in zip(fast, per_gap):
            assert a.n_events == b.n_events
            assert a.event_times == pytest.approx(b.event_times, rel=1e-9, abs=1e-12)
            assert a.frailty == b.frailty

    def test_censor_override_keeps_stream(self):
        config = ScenarioConfig(poisson_model(), CensoringSpec.exponential(0.5), 5, seed=8)
        engine = InversionEngine()

        drawn = simulate_subject(config, engine, 3)
        extended = simulate_subject(config, engine, 3, censor=100.0)

        assert extended.event_times[:drawn.n_events] == drawn.event_times
        assert extended.censoring_time == 100.0


class TestThinningEngine:

    def test_constant_bound_accepts_every_candidate(self):
        history = ThinningEngine().simulate(
            poisson_model(2.0), (), 5.0, np.random.default_rng(42)
        )

        rng = np.random.default_rng(42)
        expected, t = [], 0.0
        while True:
            t += rng.exponential(0.5)
            if t >= 5.0:
                break
            rng.random()
            expected.append(t)
        assert list(history.event_times) == expected

    def test_weibull_mean_count(self):
        config = ScenarioConfig(
            weibull_model(), CensoringSpec.fixed(2.0), 4000, seed=11,
            engine=EngineKind.THINNING,
        )

        cohort = simulate_block(config, DEFAULT_TOLERANCES, 0, config.n_subjects)
        counts = np.array([h.n_events for h in cohort])

        standard_error = math.sqrt(4.0 / counts.size)
        assert abs(counts.mean() - 4.0) < 4 * standard_error

    def test_bound_violation(self, monkeypatch):
        monkeypatch.setattr(
            "src.application.engines.intensity_bound", lambda *args, **kwargs: 1.0
        )

        with pytest.raises(BoundViolationError):
            ThinningEngine().simulate(poisson_model(2.0), (), 5.0, np.random.default_rng(0))

    def test_rejects_uncapped_multiplier(self):
        model = IntensityModel(
            Timescale.GAP,
            BaselineHazard.constant(1.0),
            dependence=EventDependenceSpec(kind=DependenceKind.GAP_MULTIPLIER, alpha=2.0),
        )
        with pytest.raises(IncompatibleEngineError, match="capped multiplier"):
            ThinningEngine().simulate(model, (), 1.0, np.random.default_rng(0))

    @pytest.mark.parametrize(
        "dependence",
        [
            EventDependenceSpec(kind=DependenceKind.COUNT, phi=0.2),
            EventDependenceSpec(kind=DependenceKind.CAPPED_COUNT, phi=0.4, cap=3),
            EventDependenceSpec(kind=DependenceKind.DECAYED_COUNT, phi=-0.5),
            EventDependenceSpec(kind=DependenceKind.WINDOWED_RATE, phi=-0.5, window=1.0),
            EventDependenceSpec(kind=DependenceKind.COUNT, phi=-0.5),
        ],
    )
    def test_event_dependent_histories(self, dependence):
        model = IntensityModel(
            Timescale.CALENDAR, BaselineHazard.constant(1.0), dependence=dependence
        )
        rng = np.random.default_rng(21)

        for subject in range(20):
            history = ThinningEngine().simulate(model, (), 4.0, rng, subject)
            times = history.event_times
            assert all(b > a for a, b in zip(times, times[1:]))
            assert all(t < 4.0 for t in times)


class TestGapRejectionEngine:

    def test_constant_hazard_accepts_every_candidate(self):
        model = IntensityModel(Timescale.GAP, BaselineHazard.constant(1.5))
        history = GapRejectionEngine().simulate(model, (), 4.0, np.random.default_rng(9))

        rng = np.random.default_rng(9)
        expected, t = [], 0.0
        while True:
            t += rng.exponential(1 / 1.5)
            if t >= 4.0:
                break
            rng.random()
            expected.append(t)
        assert history.event_times == pytest.approx(tuple(expected))

    def test_weibull_first_gap_mean(self):
        config = ScenarioConfig(
            weibull_model(Timescale.GAP), CensoringSpec.fixed(3.0), 4000, seed=5,
            engine=EngineKind.GAP_REJECTION,
        )

        cohort = simulate_block(config, DEFAULT_TOLERANCES, 0, config.n_subjects)
        first_gaps = np.array([h.gaps[0] for h in cohort if h.n_events])

        assert first_gaps.size > 3990
        expected = math.gamma(1.5)
        standard_error = math.sqrt(1.0 - expected ** 2) / math.sqrt(first_gaps.size)
        assert abs(first_gaps.mean() - expected) < 4 * standard_error

    @pytest.mark.parametrize("engine", [EngineKind.INVERSION, EngineKind.GAP_REJECTION])
    def test_weibull_gaps_follow_weibull_cdf(self, engine):
        # the first three gaps end well before C, so none is cut short by censoring
        config = ScenarioConfig(
            weibull_model(Timescale.GAP), CensoringSpec.fixed(6.0), 2000, seed=29,
            engine=engine,
        )

        cohort = simulate_block(config, DEFAULT_TOLERANCES, 0, config.n_subjects)
        gaps = [w for h in cohort for w in h.gaps[:3]]
        statistic, p_value = ks_test(gaps, lambda w: -np.expm1(-np.asarray(w) ** 2))

        assert len(gaps) > 5990
        assert statistic < ks_critical_value(len(gaps), 0.001)
        assert p_value > 0.001

    def test_requires_gap_timescale(self):
        with pytest.raises(IncompatibleEngineError, match="gap timescale"):
            GapRejectionEngine().simulate(poisson_model(), (), 1.0, np.random.default_rng(0))


def multiplier_counts(alpha: float, engine: EngineKind = EngineKind.INVERSION) -> np.ndarray:
    model = IntensityModel(
        Timescale.GAP,
        BaselineHazard.constant(1.0),
        dependence=EventDependenceSpec(
            kind=DependenceKind.GAP_MULTIPLIER, alpha=alpha, cap=4
        ),
    )
    config = ScenarioConfig(
        model, CensoringSpec.fixed(2.0), 4000, seed=61, engine=engine
    )
    cohort = simulate_block(config, DEFAULT_TOLERANCES, 0, config.n_subjects)
    return np.array([h.n_events for h in cohort], dtype=float)


def mean_difference_z(treated: np.ndarray, reference: np.ndarray) -> float:
    standard_error = math.sqrt(
        treated.var(ddof=1) / treated.size + reference.var(ddof=1) / reference.size
    )
    return (treated.mean() - reference.mean()) / standard_error


class TestEventDependenceDirection:

    @pytest.mark.parametrize("engine", [EngineKind.INVERSION, EngineKind.GAP_REJECTION])
    def test_accelerating_multiplier_raises_counts(self, engine):
        baseline = multiplier_counts(1.0, engine)

        accelerated = multiplier_counts(1.5, engine)

        assert mean_difference_z(accelerated, baseline) >= 3.0

    @pytest.mark.parametrize("engine", [EngineKind.INVERSION, EngineKind.GAP_REJECTION])
    def test_decelerating_multiplier_lowers_counts(self, engine):
        baseline = multiplier_counts(1.0, engine)

        decelerated = multiplier_counts(2 / 3, engine)

        assert mean_difference_z(decelerated, baseline) <= -3.0

    def test_unit_multiplier_is_plain_renewal(self):
        counts = multiplier_counts(1.0)

        # Poisson(2) counts under a unit-rate constant gap hazard
        assert abs(counts.mean() - 2.0) < 4 * math.sqrt(2.0 / counts.size)


class TestDiscreteEngine:

    def test_step_size_error(self):
        with pytest.raises(StepSizeError, match="smaller dt"):
            DiscreteEngine(1.0).simulate(poisson_model(1.2), (), 5.0, np.random.default_rng(0))

    def test_events_on_grid(self):
        model = IntensityModel(
            Timescale.CALENDAR,
            BaselineHazard.constant(1.0),
            dependence=EventDependenceSpec(kind=DependenceKind.DECAYED_COUNT, phi=-0.5),
        )
        dt = 0.01
        rng = np.random.default_rng(17)

        for subject in range(20):
            history = DiscreteEngine(dt).simulate(model, (), 3.0, rng, subject)
            for t in history.event_times:
                assert abs(t / dt - round(t / dt)) < 1e-9
                assert round(t / dt) >= 1

    def test_mean_count(self):
        config = ScenarioConfig(
            poisson_model(), CensoringSpec.fixed(5.0), 400, seed=2,
            engine=EngineKind.DISCRETE, dt=0.01,
        )

        cohort = simulate_block(config, DEFAULT_TOLERANCES, 0, config.n_subjects)
        counts = np.array([h.n_events for h in cohort])

        assert abs(counts.mean() - 5.0) < 4 * math.sqrt(5.0 / counts.size)

    def test_nonpositive_step(self):
        with pytest.raises(StepSizeError):
            DiscreteEngine(0.0)


class TestDeterminism:

    @pytest.mark.parametrize(
        "engine, timescale, dt",
        [
            (EngineKind.INVERSION, Timescale.CALENDAR, None),
            (EngineKind.THINNING, Timescale.CALENDAR, None),
            (EngineKind.GAP_REJECTION, Timescale.GAP, None),
            (EngineKind.DISCRETE, Timescale.CALENDAR, 0.01),
        ],
    )
    def test_same_seed_same_cohort(self, engine, timescale, dt):
        config = ScenarioConfig(
            weibull_model(timescale), CensoringSpec.exponential(0.5), 30,
            seed=2 ** 63 + 5, engine=engine, dt=dt,
        )

        first = simulate_block(config, DEFAULT_TOLERANCES, 0, 30)
        second = simulate_block(config, DEFAULT_TOLERANCES, 0, 30)

        assert first == second

    def test_subject_does_not_depend_on_block(self):
        config = ScenarioConfig(poisson_model(), CensoringSpec.fixed(3.0), 10, seed=4)

        whole = simulate_block(config, DEFAULT_TOLERANCES, 0, 10)
        single = simulate_block(config, DEFAULT_TOLERANCES, 5, 6)

        assert whole[5] == single[0]

    def test_build_engine(self):
        assert isinstance(build_engine(EngineKind.THINNING), ThinningEngine)
        assert build_engine(EngineKind.DISCRETE, dt=0.5).dt == 0.5
        with pytest.raises(StepSizeError):
            build_engine(EngineKind.DISCRETE)
