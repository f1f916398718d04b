"""
Event-history generators: inversion, thinning, gap-time acceptance-rejection
and a discrete-grid approximation
"""
from abc import ABC, abstractmethod
from typing import Optional, Sequence
import logging
import math

import numpy as np

from ..domain.entities import EventHistory, SubjectState
from ..domain.exceptions import (
    BoundViolationError,
    ExplosionError,
    IncompatibleEngineError,
    StepSizeError,
)
from ..domain.intensity import (
    DEFAULT_TOLERANCES,
    closed_form_throughout,
    gap_for_exposure,
    gap_multiplier,
    intensity_bound,
    regularized_intensity_at,
)
from ..domain.value_objects import (
    EngineKind,
    IntensityModel,
    ScenarioConfig,
    Timescale,
    Tolerances,
)
from ..infrastructure.rng import subject_stream


logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9


class SimulationEngine(ABC):
    kind: EngineKind

    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES):
        self.tolerances = tolerances

    def check_supports(self, model: IntensityModel):
        pass

    def simulate(
        self,
        model: IntensityModel,
        covariates: Sequence[float],
        censor: float,
        rng: np.random.Generator,
        subject_id: int = 0
    ) -> EventHistory:
        if not censor > 0:
            raise ValueError(f"Censoring time must be positive, got {censor}")
        self.check_supports(model)

        frailty = model.frailty.draw(rng)
        state = SubjectState(covariates=tuple(covariates), frailty=frailty)
        try:
            self._generate(model, state, censor, rng)
        except OverflowError:
            raise ExplosionError(state.n_events, state.last_event_time, subject_id)
        except ExplosionError as e:
            raise e.for_subject(subject_id)

        logger.debug(
            f"Subject {subject_id}: {state.n_events} events before C={censor:.6g} "
            f"({self.kind.value})"
        )
        return EventHistory(
            subject_id=subject_id,
            event_times=tuple(state.event_times),
            censoring_time=censor,
            frailty=frailty,
            covariates=state.covariates,
            engine=self.kind,
        )

    @abstractmethod
    def _generate(
        self,
        model: IntensityModel,
        state: SubjectState,
        censor: float,
        rng: np.random.Generator
    ):
        ...

    def _record(self, state: SubjectState, t: float):
        if state.n_events >= self.tolerances.explosion_limit:
            raise ExplosionError(state.n_events + 1, t)
        if not t > state.last_event_time:
            # gaps have shrunk below floating point resolution
            raise ExplosionError(state.n_events + 1, t)
        state.record_event(t)

    def _next_candidate(
        self,
        state: SubjectState,
        t: float,
        bound: float,
        rng: np.random.Generator
    ) -> float:
        candidate = t + rng.exponential(1.0 / bound)
        if not candidate > t:
            # dominating rate too large to advance the clock
            raise ExplosionError(state.n_events, t)
        return candidate

    def _check_bound(self, rate: float, bound: float, t: float):
        if rate > bound * (1 + BOUND_SLACK):
            raise BoundViolationError(
                f"Intensity {rate:.6g} at t={t:.6g} exceeds dominating rate {bound:.6g}"
            )


class InversionEngine(SimulationEngine):
    """W_j solves F_j(W_j) = 1 - V_j, i.e. compensator(T_{j-1}, T_{j-1} + W_j) = -log V_j."""

    kind = EngineKind.INVERSION

    def _generate(self, model, state, censor, rng):
        if closed_form_throughout(model.dependence):
            self._generate_closed_form(model, state, censor, rng)
            return
        while True:
            exposure = self._exposure(rng)
            gap = gap_for_exposure(
                model, state, exposure, horizon=censor - state.now,
                tolerances=self.tolerances,
            )
            if gap is None:
                return
            t = state.now + gap
            if t >= censor:
                return
            self._record(state, t)

    def _generate_closed_form(self, model, state, censor, rng):
        baseline = model.baseline
        calendar = model.timescale is Timescale.CALENDAR
        eta = model.linear_predictor(state.covariates)
        # baseline cumulative hazard already spent on the calendar clock
        spent = 0.0
        while True:
            multiplier = gap_multiplier(model, state, eta)
            if multiplier == 0:
                return
            target = self._exposure(rng) / multiplier + spent
            clock = baseline.inverse_cumulative_hazard(target)
            t = clock if calendar else state.now + clock
            if not t < censor:
                return
            self._record(state, t)
            if calendar:
                spent = target

    @staticmethod
    def _exposure(rng: np.random.Generator) -> float:
        v = rng.random()
        return -math.log(v) if v > 0 else math.inf


class ThinningEngine(SimulationEngine):
    """Candidates from a Poisson(bound) stream, kept with probability rate / bound."""

    kind = EngineKind.THINNING

    def check_supports(self, model):
        if model.dependence.increases_without_cap:
            raise IncompatibleEngineError(
                "Thinning needs a capped multiplier when alpha > 1"
            )

    def _generate(self, model, state, censor, rng):
        t = 0.0
        bound = intensity_bound(model, state, t, censor, self.tolerances)
        while bound > 0:
            t = self._next_candidate(state, t, bound, rng)
            if t >= censor:
                return
            state.advance(t)
            rate = regularized_intensity_at(model, state, t, tolerances=self.tolerances)
            self._check_bound(rate, bound, t)
            if rng.random() <= rate / bound:
                self._record(state, t)
                bound = intensity_bound(model, state, t, censor, self.tolerances)


class GapRejectionEngine(SimulationEngine):
    """Each gap by acceptance-rejection against a bound on the current gap hazard."""

    kind = EngineKind.GAP_REJECTION

    def check_supports(self, model):
        if model.timescale is not Timescale.GAP:
            raise IncompatibleEngineError(
                "Gap rejection engine requires the gap timescale"
            )
        if model.dependence.increases_without_cap:
            raise IncompatibleEngineError(
                "Gap rejection needs a capped multiplier when alpha > 1"
            )

    def _generate(self, model, state, censor, rng):
        while True:
            origin = state.last_event_time
            bound = intensity_bound(model, state, origin, censor, self.tolerances)
            if not bound > 0:
                return
            t = origin
            while True:
                t = self._next_candidate(state, t, bound, rng)
                if t >= censor:
                    return
                state.advance(t)
                hazard = regularized_intensity_at(
                    model, state, t, tolerances=self.tolerances
                )
                self._check_bound(hazard, bound, t)
                if rng.random() <= hazard / bound:
                    self._record(state, t)
                    break


class DiscreteEngine(SimulationEngine):
    """
    One Bernoulli(lambda(k dt) dt) trial per interval [k dt, (k+1) dt); an event
    is placed at the right endpoint and joins the history before the next trial.
    """

    kind = EngineKind.DISCRETE

    def __init__(self, dt: float, tolerances: Tolerances = DEFAULT_TOLERANCES):
        super().__init__(tolerances)
        if not dt > 0:
            raise StepSizeError(f"Grid step must be positive, got {dt}")
        self.dt = dt

    def _generate(self, model, state, censor, rng):
        dt = self.dt
        k = 0
        while (k + 1) * dt < censor:
            left = k * dt
            state.advance(left)
            rate = regularized_intensity_at(
                model, state, left, inclusive=True, tolerances=self.tolerances
            )
            probability = rate * dt
            if probability > 1:
                raise StepSizeError(
                    f"Event probability {probability:.4g} exceeds 1 at t={left:.6g}; "
                    f"use a smaller dt than {dt}"
                )
            if rng.random() < probability:
                self._record(state, (k + 1) * dt)
            k += 1


def simulate_subject(
    config: ScenarioConfig,
    engine: SimulationEngine,
    subject_index: int,
    censor: Optional[float] = None
) -> EventHistory:
    """
    Subject i of a scenario: covariates, then censoring, then frailty and
    events, all from the subject's own stream. A censor override still
    consumes the censoring draw so the remaining stream is unchanged.
    """
    rng = subject_stream(config.seed, subject_index)
    covariates = tuple(spec.draw(rng) for spec in config.covariates)
    drawn = config.censoring.draw(rng)
    return engine.simulate(
        config.model,
        covariates,
        drawn if censor is None else censor,
        rng,
        subject_id=subject_index,
    )


def build_engine(
    kind: EngineKind,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    dt: Optional[float] = None
) -> SimulationEngine:
    if kind is EngineKind.INVERSION:
        return InversionEngine(tolerances)
    if kind is EngineKind.THINNING:
        return ThinningEngine(tolerances)
    if kind is EngineKind.GAP_REJECTION:
        return GapRejectionEngine(tolerances)
    if dt is None:
        raise StepSizeError("Discrete engine requires dt")
    return DiscreteEngine(dt, tolerances)
