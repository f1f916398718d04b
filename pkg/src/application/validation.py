"""
Statistical oracles for generated cohorts
"""
from typing import Callable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import stats

from ..domain.entities import EventHistory, SubjectState, ValidationReport
from ..domain.exceptions import MissingFrailtyError, UnsupportedCheckError
from ..domain.intensity import DEFAULT_TOLERANCES, compensator
from ..domain.value_objects import (
    CensoringKind,
    DependenceKind,
    EngineKind,
    FrailtyKind,
    IntensityModel,
    ScenarioConfig,
    Timescale,
    Tolerances,
)
from .engines import build_engine, simulate_subject


logger = logging.getLogger(__name__)

DEFAULT_SIGNIFICANCE = 0.01
DEFAULT_DT = 1e-3


def ks_test(
    sample: Sequence[float],
    cdf: Callable[[np.ndarray], np.ndarray]
) -> Tuple[float, float]:
    """One-sample KS statistic and asymptotic Kolmogorov p-value."""
    values = np.asarray(sample, dtype=float)
    if values.size == 0:
        raise ValueError("KS test needs a nonempty sample")
    statistic = float(stats.ks_1samp(values, cdf, method="asymp").statistic)
    p_value = float(stats.kstwobign.sf(math.sqrt(values.size) * statistic))
    return statistic, p_value


def ks_critical_value(n: int, significance: float = DEFAULT_SIGNIFICANCE) -> float:
    return float(stats.kstwobign.isf(significance)) / math.sqrt(n)


def two_sample_critical_value(
    n: int,
    m: int,
    significance: float = DEFAULT_SIGNIFICANCE
) -> float:
    return float(stats.kstwobign.isf(significance)) * math.sqrt((n + m) / (n * m))


def _oracle_frailty(history: EventHistory, model: IntensityModel) -> float:
    if model.frailty.kind is FrailtyKind.NONE:
        return 1.0
    if history.frailty is None:
        raise MissingFrailtyError(
            f"Subject {history.subject_id} has no recorded frailty; "
            f"the {model.frailty.kind.value} frailty model needs it"
        )
    return history.frailty


def time_rescaling_residuals(
    cohort: Sequence[EventHistory],
    model: IntensityModel,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> List[float]:
    """Compensator increments over every uncensored gap."""
    residuals: List[float] = []
    for history in cohort:
        state = SubjectState(
            covariates=history.covariates,
            frailty=_oracle_frailty(history, model),
        )
        for t in history.event_times:
            start = state.last_event_time
            residuals.append(compensator(model, state, start, t, tolerances))
            state.record_event(t)
    return residuals


def time_rescaling_check(
    cohort: Sequence[EventHistory],
    model: IntensityModel,
    significance: float = DEFAULT_SIGNIFICANCE,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> ValidationReport:
    residuals = time_rescaling_residuals(cohort, model, tolerances)
    if not residuals:
        return ValidationReport.evaluate(
            "time-rescaling", 0, math.inf, 0.0, "no uncensored gaps to test"
        )
    statistic, p_value = ks_test(residuals, stats.expon.cdf)
    return ValidationReport.evaluate(
        "time-rescaling",
        len(residuals),
        statistic,
        ks_critical_value(len(residuals), significance),
        f"KS vs unit exponential, p={p_value:.4g}",
    )


def _z_score(difference: float, standard_error: float) -> float:
    if standard_error > 0:
        return abs(difference) / standard_error
    return 0.0 if difference == 0 else math.inf


def count_moment_check(
    cohort: Sequence[EventHistory],
    model: IntensityModel,
    t: float,
    tolerance: float = 3.0
) -> ValidationReport:
    """
    Mean and variance of N(t) against the (mixed) Poisson targets, both within
    `tolerance` standard errors.
    """
    if model.dependence.kind is not DependenceKind.NONE:
        raise UnsupportedCheckError(
            "Count moment check needs a model without event-dependence"
        )
    if model.timescale is Timescale.GAP and not model.baseline.is_constant_rate:
        raise UnsupportedCheckError(
            "Renewal counts with a non-constant gap hazard are not Poisson"
        )
    if not cohort:
        raise ValueError("Count moment check needs a nonempty cohort")
    if any(history.censoring_time < t for history in cohort):
        raise ValueError(f"Every subject must be observed up to t={t}")

    counts = np.array([history.count_through(t) for history in cohort], dtype=float)
    predictors = np.array(
        [model.linear_predictor(history.covariates) for history in cohort]
    )
    exp_first = float(np.mean(np.exp(predictors)))
    exp_second = float(np.mean(np.exp(2 * predictors)))
    cumulative = model.baseline.cumulative_hazard(0.0, t)
    frailty_mean = model.frailty.mean
    frailty_second = model.frailty.frailty_variance + frailty_mean ** 2

    target_mean = frailty_mean * exp_first * cumulative
    target_variance = target_mean + cumulative ** 2 * (
        frailty_second * exp_second - (frailty_mean * exp_first) ** 2
    )

    n = counts.size
    sample_mean = float(counts.mean())
    sample_variance = float(counts.var(ddof=1)) if n > 1 else 0.0
    fourth = float(stats.moment(counts, 4)) if n > 1 else 0.0

    mean_z = _z_score(sample_mean - target_mean, math.sqrt(target_variance / n))
    variance_z = _z_score(
        sample_variance - target_variance,
        math.sqrt(max(fourth - sample_variance ** 2, 0.0) / n),
    )
    return ValidationReport.evaluate(
        "count-moments",
        n,
        max(mean_z, variance_z),
        tolerance,
        f"mean {sample_mean:.4f} vs {target_mean:.4f} (z={mean_z:.2f}), "
        f"variance {sample_variance:.4f} vs {target_variance:.4f} (z={variance_z:.2f})",
    )


def default_horizon(config: ScenarioConfig) -> float:
    censoring = config.censoring
    if censoring.kind is CensoringKind.FIXED:
        return censoring.value
    if censoring.kind is CensoringKind.UNIFORM:
        return censoring.high
    return 1.0 / censoring.rate


def first_event_times(
    config: ScenarioConfig,
    engine: EngineKind,
    n: int,
    horizon: float,
    dt: Optional[float] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """First event per subject, recorded as `horizon` when none occurs before it."""
    simulator = build_engine(engine, tolerances, dt)
    simulator.check_supports(config.model)
    times = np.empty(n)
    for i in range(n):
        history = simulate_subject(config, simulator, i, censor=horizon)
        times[i] = history.event_times[0] if history.event_times else horizon
    return times


def engine_agreement(
    config: ScenarioConfig,
    engine_a: EngineKind,
    engine_b: EngineKind,
    n: int,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
    significance: Optional[float] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> ValidationReport:
    """Two-sample KS on first-event times from two engines under one seed."""
    horizon = default_horizon(config) if horizon is None else horizon
    dt = dt if dt is not None else (config.dt or DEFAULT_DT)
    if significance is None:
        uses_grid = EngineKind.DISCRETE in (engine_a, engine_b)
        significance = 0.001 if uses_grid else DEFAULT_SIGNIFICANCE

    sample_a = first_event_times(config, engine_a, n, horizon, dt, tolerances)
    sample_b = first_event_times(config, engine_b, n, horizon, dt, tolerances)
    statistic = float(stats.ks_2samp(sample_a, sample_b).statistic)
    logger.info(
        f"Engine agreement {engine_a.value} vs {engine_b.value}: D={statistic:.5f}"
    )
    return ValidationReport.evaluate(
        f"engine-agreement[{engine_a.value}~{engine_b.value}]",
        n,
        statistic,
        two_sample_critical_value(n, n, significance),
        f"two-sample KS on first-event times up to t={horizon:.6g}, "
        f"level {significance}",
    )
