"""
Per-subject intensity: timescale, baseline, covariates, frailty and
event-dependence composed into lambda(t | H(t), u, x)
"""
from typing import List, Optional
import math

from scipy.integrate import quad

from .entities import SubjectState
from .exceptions import HazardDomainError, HistoryOrderError
from .hazards import solve_cumulative
from .value_objects import (
    DependenceKind,
    EventDependenceSpec,
    IntensityModel,
    Timescale,
    Tolerances,
)


DEFAULT_TOLERANCES = Tolerances()

_CLOSED_FORM_KINDS = (
    DependenceKind.NONE,
    DependenceKind.GAP_MULTIPLIER,
    DependenceKind.COUNT,
    DependenceKind.CAPPED_COUNT,
)


def event_count(state: SubjectState, t: float, inclusive: bool = False) -> int:
    return state.count_through(t) if inclusive else state.count_before(t)


def previous_event_time(state: SubjectState, n: int) -> float:
    return state.event_times[n - 1] if n > 0 else 0.0


def baseline_multiplier(dependence: EventDependenceSpec, n: int) -> float:
    """alpha ** min(n, cap) for the gap multiplier, 1 otherwise."""
    if dependence.kind is not DependenceKind.GAP_MULTIPLIER:
        return 1.0
    exponent = n if dependence.cap is None else min(n, dependence.cap)
    return dependence.alpha ** exponent


def internal_covariate(
    dependence: EventDependenceSpec,
    state: SubjectState,
    t: float,
    inclusive: bool = False
) -> float:
    n = event_count(state, t, inclusive)
    kind = dependence.kind
    if kind is DependenceKind.COUNT:
        return float(n)
    if kind is DependenceKind.CAPPED_COUNT:
        return float(min(n, dependence.cap))
    if kind is DependenceKind.DECAYED_COUNT:
        return n / t if t > 0 else 0.0
    if kind is DependenceKind.WINDOWED_RATE:
        window = dependence.window
        if t < window:
            # shrinking window over [0, t]
            return n / t if t > 0 else 0.0
        recent = n - state.count_through(t - window)
        return recent / window
    return 0.0


def intensity_at(
    model: IntensityModel,
    state: SubjectState,
    t: float,
    inclusive: bool = False,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    lambda(t | H(t)). With inclusive=True an event recorded exactly at t is
    already part of the history (used by the discrete grid).
    """
    if t < 0:
        raise HazardDomainError(f"Intensity evaluated at negative time {t}")
    if t < state.last_event_time:
        raise HistoryOrderError(
            f"Intensity at t={t} precedes the last recorded event "
            f"at {state.last_event_time}"
        )

    n = event_count(state, t, inclusive)
    last = previous_event_time(state, n)
    eta = model.linear_predictor(state.covariates)
    dependence = model.dependence

    if dependence.kind is DependenceKind.GENERAL:
        offset = tolerances.singularity_offset
        log_rate = dependence.g0(t, offset) + dependence.g2(n, offset) + eta
        if n > 0:
            log_rate += dependence.g1(t - last, offset)
        return state.frailty * math.exp(log_rate)

    if model.timescale is Timescale.CALENDAR:
        base = model.baseline.hazard_at(t)
    else:
        base = model.baseline.hazard_at(t - last) * baseline_multiplier(dependence, n)

    log_effect = eta
    if dependence.kind.uses_covariate:
        log_effect += dependence.phi * internal_covariate(dependence, state, t, inclusive)
    return state.frailty * base * math.exp(log_effect)


def regularized_intensity_at(
    model: IntensityModel,
    state: SubjectState,
    t: float,
    inclusive: bool = False,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    intensity_at with a singular baseline held flat over the first
    singularity_offset time units of its clock.
    """
    if model.baseline.is_singular_at_zero:
        n = event_count(state, t, inclusive)
        origin = (
            0.0 if model.timescale is Timescale.CALENDAR
            else previous_event_time(state, n)
        )
        t = max(t, origin + tolerances.singularity_offset)
    return intensity_at(model, state, t, inclusive, tolerances)


def closed_form_throughout(dependence: EventDependenceSpec) -> bool:
    """True when every gap, whatever the history, is baseline times a constant."""
    if dependence.kind in _CLOSED_FORM_KINDS:
        return True
    if dependence.kind is DependenceKind.GENERAL:
        return False
    return dependence.phi == 0


def has_closed_form(model: IntensityModel, state: SubjectState) -> bool:
    """True when the intensity between events is baseline times a constant."""
    if closed_form_throughout(model.dependence):
        return True
    return model.dependence.kind is not DependenceKind.GENERAL and state.n_events == 0


def gap_multiplier(
    model: IntensityModel,
    state: SubjectState,
    eta: Optional[float] = None
) -> float:
    """Constant factor u * exp(eta + phi * z) * alpha^k for a closed-form gap."""
    dependence = model.dependence
    n = state.n_events
    log_effect = model.linear_predictor(state.covariates) if eta is None else eta
    if dependence.kind in (DependenceKind.COUNT, DependenceKind.CAPPED_COUNT):
        z = n if dependence.kind is DependenceKind.COUNT else min(n, dependence.cap)
        log_effect += dependence.phi * z
    return state.frailty * math.exp(log_effect) * baseline_multiplier(dependence, n)


def _clock_shift(model: IntensityModel, state: SubjectState) -> float:
    return 0.0 if model.timescale is Timescale.CALENDAR else state.last_event_time


def _breakpoints(
    model: IntensityModel,
    state: SubjectState,
    a: float,
    b: float
) -> Optional[List[float]]:
    dependence = model.dependence
    if dependence.kind is not DependenceKind.WINDOWED_RATE:
        return None
    candidates = [t + dependence.window for t in state.event_times]
    candidates.append(dependence.window)
    inside = sorted(p for p in candidates if a < p < b)
    return inside or None


def compensator(
    model: IntensityModel,
    state: SubjectState,
    a: float,
    b: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Integral of the intensity over (a, b] with the history frozen at a."""
    if a < state.last_event_time:
        raise HistoryOrderError(
            f"Compensator from {a} starts before the last event "
            f"at {state.last_event_time}"
        )
    if b < a:
        raise HazardDomainError(f"Compensator interval ({a}, {b}] is reversed")
    if a == b:
        return 0.0

    if has_closed_form(model, state):
        shift = _clock_shift(model, state)
        multiplier = gap_multiplier(model, state)
        if multiplier == 0:
            return 0.0
        return multiplier * model.baseline.cumulative_hazard(a - shift, b - shift)

    value, _ = quad(
        lambda s: intensity_at(model, state, s, tolerances=tolerances),
        a,
        b,
        epsabs=tolerances.quadrature_tolerance,
        limit=tolerances.quadrature_limit,
        points=_breakpoints(model, state, a, b),
    )
    return max(value, 0.0)


def conditional_gap_cdf(
    model: IntensityModel,
    state: SubjectState,
    w: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """P(W_j <= w | T_{j-1} = state.now, H(T_{j-1}))."""
    if not w > 0:
        raise HazardDomainError(f"Gap cdf needs w > 0, got {w}")
    start = state.now
    return -math.expm1(-compensator(model, state, start, start + w, tolerances))


def gap_for_exposure(
    model: IntensityModel,
    state: SubjectState,
    exposure: float,
    horizon: Optional[float] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> Optional[float]:
    """
    Gap w with compensator(now, now + w) = exposure. None when the exposure is
    not reached within horizon (numeric path) or ever (zero intensity).
    """
    start = state.now
    if has_closed_form(model, state):
        multiplier = gap_multiplier(model, state)
        if multiplier == 0:
            return None
        baseline = model.baseline
        origin = start - _clock_shift(model, state)
        target = exposure / multiplier + baseline.cumulative_hazard(0.0, origin)
        gap = baseline.inverse_cumulative_hazard(target) - origin
        return gap if math.isfinite(gap) else None

    return solve_cumulative(
        lambda w: compensator(model, state, start, start + w, tolerances),
        exposure,
        upper=horizon,
        tolerance=tolerances.root_tolerance,
    )


def intensity_bound(
    model: IntensityModel,
    state: SubjectState,
    start: float,
    horizon: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    Rate dominating the regularized intensity on (start, horizon] while the
    history stays frozen at its current events.
    """
    n = state.n_events
    last = state.last_event_time
    offset = tolerances.singularity_offset
    eta = model.linear_predictor(state.covariates)
    dependence = model.dependence

    if dependence.kind is DependenceKind.GENERAL:
        log_rate = dependence.g0.max_over(start, horizon, offset)
        log_rate += dependence.g2(n, offset) + eta
        if n > 0:
            log_rate += dependence.g1.max_over(start - last, horizon - last, offset)
        return state.frailty * math.exp(log_rate)

    baseline = model.baseline
    if model.timescale is Timescale.CALENDAR:
        base = baseline.upper_bound(horizon, start=start, offset=offset)
    else:
        base = baseline.upper_bound(
            horizon - last, start=start - last, offset=offset
        ) * baseline_multiplier(dependence, n)

    term = 0.0
    phi = dependence.phi
    if dependence.kind is DependenceKind.COUNT:
        term = phi * n
    elif dependence.kind is DependenceKind.CAPPED_COUNT:
        term = phi * min(n, dependence.cap)
    elif dependence.kind is DependenceKind.DECAYED_COUNT and n > 0:
        term = max(phi * n / start, phi * n / horizon)
    elif dependence.kind is DependenceKind.WINDOWED_RATE and n > 0:
        term = max(0.0, phi * n / min(dependence.window, start))
    return state.frailty * base * math.exp(eta + term)
