from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple
import math

import numpy as np

from .hazards import BaselineHazard, SINGULARITY_OFFSET


class Timescale(Enum):
    CALENDAR = "calendar"
    GAP = "gap"


class FrailtyKind(Enum):
    NONE = "none"
    GAMMA = "gamma"
    LOGNORMAL = "lognormal"
    BINARY = "binary"


class DependenceKind(Enum):
    NONE = "none"
    GAP_MULTIPLIER = "gap_multiplier"
    COUNT = "count"
    CAPPED_COUNT = "capped_count"
    DECAYED_COUNT = "decayed_count"
    WINDOWED_RATE = "windowed_rate"
    GENERAL = "general"

    @property
    def uses_covariate(self) -> bool:
        return self in (
            DependenceKind.COUNT,
            DependenceKind.CAPPED_COUNT,
            DependenceKind.DECAYED_COUNT,
            DependenceKind.WINDOWED_RATE,
        )


class GForm(Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    LOG = "log"


class CensoringKind(Enum):
    FIXED = "fixed"
    EXPONENTIAL = "exponential"
    UNIFORM = "uniform"


class CovariateKind(Enum):
    BERNOULLI = "bernoulli"
    NORMAL = "normal"


class EngineKind(Enum):
    INVERSION = "inversion"
    THINNING = "thinning"
    GAP_REJECTION = "gap-rejection"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class Tolerances:
    singularity_offset: float = SINGULARITY_OFFSET
    quadrature_tolerance: float = 1e-10
    quadrature_limit: int = 60
    root_tolerance: float = 1e-12
    explosion_limit: int = 10_000

    def __post_init__(self):
        if self.singularity_offset <= 0:
            raise ValueError("Singularity offset must be positive")
        if self.explosion_limit < 1:
            raise ValueError("Explosion limit must be at least 1")


@dataclass(frozen=True)
class FrailtySpec:
    kind: FrailtyKind = FrailtyKind.NONE
    variance: float = 0.0
    low_value: float = 0.0
    high_value: float = 0.0
    high_prob: float = 0.0

    def __post_init__(self):
        if self.kind in (FrailtyKind.GAMMA, FrailtyKind.LOGNORMAL):
            if self.variance < 0 or not math.isfinite(self.variance):
                raise ValueError("Frailty variance must be nonnegative")
        if self.kind is FrailtyKind.BINARY:
            if self.low_value < 0:
                raise ValueError("Binary frailty low value must be nonnegative")
            if not self.high_value > self.low_value:
                raise ValueError("Binary frailty high value must exceed low value")
            if not 0 < self.high_prob < 1:
                raise ValueError("Binary frailty probability must be in (0, 1)")

    @classmethod
    def gamma(cls, variance: float) -> "FrailtySpec":
        return cls(kind=FrailtyKind.GAMMA, variance=variance)

    @classmethod
    def lognormal(cls, variance: float) -> "FrailtySpec":
        return cls(kind=FrailtyKind.LOGNORMAL, variance=variance)

    @classmethod
    def binary(cls, low: float, high: float, prob: float) -> "FrailtySpec":
        return cls(
            kind=FrailtyKind.BINARY, low_value=low, high_value=high, high_prob=prob
        )

    @property
    def mean(self) -> float:
        if self.kind is FrailtyKind.BINARY:
            return (
                self.low_value * (1 - self.high_prob)
                + self.high_value * self.high_prob
            )
        return 1.0

    @property
    def frailty_variance(self) -> float:
        if self.kind is FrailtyKind.BINARY:
            spread = self.high_value - self.low_value
            return self.high_prob * (1 - self.high_prob) * spread ** 2
        if self.kind is FrailtyKind.NONE:
            return 0.0
        return self.variance

    @property
    def is_degenerate(self) -> bool:
        return self.frailty_variance == 0

    def draw(self, rng: np.random.Generator) -> float:
        """One frailty draw; Gamma and LogNormal have mean 1 and variance theta."""
        if self.kind is FrailtyKind.NONE:
            return 1.0
        if self.kind is FrailtyKind.BINARY:
            return self.high_value if rng.random() < self.high_prob else self.low_value
        if self.variance == 0:
            return 1.0
        if self.kind is FrailtyKind.GAMMA:
            return float(rng.gamma(shape=1.0 / self.variance, scale=self.variance))
        sigma2 = math.log1p(self.variance)
        return float(rng.lognormal(mean=-0.5 * sigma2, sigma=math.sqrt(sigma2)))


@dataclass(frozen=True)
class GFunction:
    """Named component of the general intensity: constant, linear or log."""

    form: GForm = GForm.CONSTANT
    a: float = 0.0
    b: float = 0.0

    def __call__(self, x: float, offset: float = SINGULARITY_OFFSET) -> float:
        if self.form is GForm.CONSTANT:
            return self.a
        if self.form is GForm.LINEAR:
            return self.a + self.b * x
        return self.a + self.b * math.log(max(x, offset))

    @property
    def is_constant(self) -> bool:
        return self.form is GForm.CONSTANT or self.b == 0

    def max_over(self, lo: float, hi: float, offset: float = SINGULARITY_OFFSET) -> float:
        # every catalog form is monotone
        return max(self(lo, offset), self(hi, offset))


@dataclass(frozen=True)
class EventDependenceSpec:
    kind: DependenceKind = DependenceKind.NONE
    alpha: float = 1.0
    cap: Optional[int] = None
    phi: float = 0.0
    window: Optional[float] = None
    g0: GFunction = field(default_factory=GFunction)
    g1: GFunction = field(default_factory=GFunction)
    g2: GFunction = field(default_factory=GFunction)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("Dependence multiplier alpha must be positive")
        if self.cap is not None and self.cap < 1:
            raise ValueError("Dependence cap must be a positive integer")
        if self.kind is DependenceKind.CAPPED_COUNT and self.cap is None:
            raise ValueError("Capped count covariate requires a cap")
        if self.kind is DependenceKind.WINDOWED_RATE:
            if self.window is None or not self.window > 0:
                raise ValueError("Windowed rate covariate requires window > 0")

    @property
    def increases_without_cap(self) -> bool:
        return (
            self.kind is DependenceKind.GAP_MULTIPLIER
            and self.alpha > 1
            and self.cap is None
        )

    @property
    def is_event_dependent(self) -> bool:
        if self.kind is DependenceKind.GAP_MULTIPLIER:
            return self.alpha != 1
        if self.kind.uses_covariate:
            return self.phi != 0
        if self.kind is DependenceKind.GENERAL:
            return not self.g2.is_constant
        return False


@dataclass(frozen=True)
class IntensityModel:
    timescale: Timescale
    baseline: BaselineHazard
    beta: Tuple[float, ...] = ()
    frailty: FrailtySpec = field(default_factory=FrailtySpec)
    dependence: EventDependenceSpec = field(default_factory=EventDependenceSpec)

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if (
            self.dependence.kind is DependenceKind.GAP_MULTIPLIER
            and self.timescale is not Timescale.GAP
        ):
            raise ValueError("Gap baseline multiplier requires the gap timescale")

    def linear_predictor(self, covariates: Sequence[float]) -> float:
        if len(covariates) != len(self.beta):
            raise ValueError(
                f"Expected {len(self.beta)} covariates, got {len(covariates)}"
            )
        return math.fsum(b * x for b, x in zip(self.beta, covariates))


@dataclass(frozen=True)
class CensoringSpec:
    kind: CensoringKind = CensoringKind.FIXED
    value: float = 0.0
    rate: float = 0.0
    low: float = 0.0
    high: float = 0.0

    def __post_init__(self):
        if self.kind is CensoringKind.FIXED and not self.value > 0:
            raise ValueError("Fixed censoring time must be positive")
        if self.kind is CensoringKind.EXPONENTIAL and not self.rate > 0:
            raise ValueError("Exponential censoring rate must be positive")
        if self.kind is CensoringKind.UNIFORM and not 0 <= self.low < self.high:
            raise ValueError("Uniform censoring needs 0 <= low < high")

    @classmethod
    def fixed(cls, value: float) -> "CensoringSpec":
        return cls(kind=CensoringKind.FIXED, value=value)

    @classmethod
    def exponential(cls, rate: float) -> "CensoringSpec":
        return cls(kind=CensoringKind.EXPONENTIAL, rate=rate)

    @classmethod
    def uniform(cls, low: float, high: float) -> "CensoringSpec":
        return cls(kind=CensoringKind.UNIFORM, low=low, high=high)

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind is CensoringKind.FIXED:
            return self.value
        if self.kind is CensoringKind.EXPONENTIAL:
            return float(rng.exponential(1.0 / self.rate))
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class CovariateSpec:
    kind: CovariateKind = CovariateKind.BERNOULLI
    prob: float = 0.5
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.kind is CovariateKind.BERNOULLI and not 0 <= self.prob <= 1:
            raise ValueError("Bernoulli covariate probability must be in [0, 1]")
        if self.kind is CovariateKind.NORMAL and self.sd < 0:
            raise ValueError("Normal covariate sd must be nonnegative")

    @classmethod
    def bernoulli(cls, prob: float) -> "CovariateSpec":
        return cls(kind=CovariateKind.BERNOULLI, prob=prob)

    @classmethod
    def normal(cls, mean: float, sd: float) -> "CovariateSpec":
        return cls(kind=CovariateKind.NORMAL, mean=mean, sd=sd)

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind is CovariateKind.BERNOULLI:
            return 1.0 if rng.random() < self.prob else 0.0
        return float(rng.normal(self.mean, self.sd))


@dataclass(frozen=True)
class ScenarioConfig:
    model: IntensityModel
    censoring: CensoringSpec
    n_subjects: int
    covariates: Tuple[CovariateSpec, ...] = ()
    seed: int = 0
    engine: EngineKind = EngineKind.INVERSION
    dt: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.n_subjects < 1:
            raise ValueError("Number of subjects must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("Seed must be a 64-bit unsigned integer")
        if len(self.covariates) != len(self.model.beta):
            raise ValueError(
                f"Scenario has {len(self.covariates)} covariate generators "
                f"but {len(self.model.beta)} coefficients"
            )
        if self.engine is EngineKind.DISCRETE:
            if self.dt is None or not self.dt > 0:
                raise ValueError("Discrete engine requires a positive dt")
        elif self.dt is not None:
            raise ValueError("dt is only valid with the discrete engine")
        if (
            self.engine is EngineKind.GAP_REJECTION
            and self.model.timescale is not Timescale.GAP
        ):
            raise ValueError("Gap rejection engine requires the gap timescale")
        if (
            self.engine in (EngineKind.THINNING, EngineKind.GAP_REJECTION)
            and self.model.dependence.increases_without_cap
        ):
            raise ValueError(
                f"Multiplier alpha={self.model.dependence.alpha} > 1 needs a cap "
                f"under the {self.engine.value} engine"
            )

    def with_overrides(
        self,
        seed: Optional[int] = None,
        engine: Optional[EngineKind] = None,
        dt: Optional[float] = None,
        n_subjects: Optional[int] = None
    ) -> "ScenarioConfig":
        new_engine = engine if engine is not None else self.engine
        new_dt = dt if dt is not None else self.dt
        if new_engine is not EngineKind.DISCRETE:
            new_dt = None
        return replace(
            self,
            seed=seed if seed is not None else self.seed,
            engine=new_engine,
            dt=new_dt,
            n_subjects=n_subjects if n_subjects is not None else self.n_subjects,
        )
