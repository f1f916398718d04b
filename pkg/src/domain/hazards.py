"""
Parametric baseline hazards with closed-form cumulative hazard and inverse
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional
import math

from scipy.optimize import brentq

from .exceptions import ArgumentOrderError, HazardDomainError


SINGULARITY_OFFSET = 1e-6
MAX_BRACKET_DOUBLINGS = 64


class BaselineKind(Enum):
    CONSTANT = "constant"
    WEIBULL = "weibull"


@dataclass(frozen=True)
class BaselineHazard:
    """lambda * nu * t**(nu - 1); Constant is the nu = 1 member."""

    kind: BaselineKind
    lam: float
    nu: float = 1.0

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ValueError("Baseline scale lambda must be positive")
        if not self.nu > 0 or not math.isfinite(self.nu):
            raise ValueError("Baseline shape nu must be positive")
        if self.kind is BaselineKind.CONSTANT and self.nu != 1.0:
            raise ValueError("Constant baseline requires nu = 1")

    @classmethod
    def constant(cls, lam: float) -> "BaselineHazard":
        return cls(kind=BaselineKind.CONSTANT, lam=lam, nu=1.0)

    @classmethod
    def weibull(cls, lam: float, nu: float) -> "BaselineHazard":
        return cls(kind=BaselineKind.WEIBULL, lam=lam, nu=nu)

    @property
    def is_constant_rate(self) -> bool:
        return self.kind is BaselineKind.CONSTANT or self.nu == 1.0

    @property
    def is_singular_at_zero(self) -> bool:
        return self.nu < 1.0

    def hazard_at(self, t: float) -> float:
        if t < 0:
            raise HazardDomainError(f"Hazard evaluated at negative time {t}")
        if self.is_constant_rate:
            return self.lam
        if t == 0 and self.is_singular_at_zero:
            raise HazardDomainError(
                f"Weibull hazard with nu={self.nu} is singular at t=0"
            )
        return self.lam * self.nu * t ** (self.nu - 1.0)

    def cumulative_hazard(self, a: float, b: float) -> float:
        if a < 0:
            raise HazardDomainError(f"Cumulative hazard from negative time {a}")
        if a > b:
            raise ArgumentOrderError(
                f"Cumulative hazard needs a <= b, got a={a}, b={b}"
            )
        if a == b:
            return 0.0
        if self.is_constant_rate:
            return self.lam * (b - a)
        return self.lam * (b ** self.nu - a ** self.nu)

    def inverse_cumulative_hazard(self, y: float) -> float:
        if y < 0:
            raise HazardDomainError(f"Inverse cumulative hazard of negative {y}")
        if self.is_constant_rate:
            return y / self.lam
        return (y / self.lam) ** (1.0 / self.nu)

    def upper_bound(
        self,
        horizon: float,
        start: float = 0.0,
        offset: float = SINGULARITY_OFFSET
    ) -> float:
        """Finite rate dominating the hazard on [max(start, offset), horizon]."""
        if not horizon > 0:
            raise HazardDomainError("Hazard bound needs a positive horizon")
        if self.is_constant_rate:
            return self.lam
        if self.nu > 1.0:
            return self.hazard_at(horizon)
        return self.hazard_at(max(start, offset))


def solve_cumulative(
    cumulative: Callable[[float], float],
    target: float,
    upper: Optional[float] = None,
    tolerance: float = 1e-12,
    max_iterations: int = 200
) -> Optional[float]:
    """
    Root of cumulative(w) = target for a nondecreasing cumulative with
    cumulative(0) = 0. Returns None when the target is not reached by upper.
    Without an upper limit the bracket is doubled until it holds the root.
    """
    if target < 0:
        raise HazardDomainError(f"Cannot invert to negative value {target}")
    if target == 0:
        return 0.0

    if upper is not None:
        if cumulative(upper) < target:
            return None
        hi = upper
    else:
        hi = 1.0
        for _ in range(MAX_BRACKET_DOUBLINGS):
            if cumulative(hi) >= target:
                break
            hi *= 2.0
        else:
            return None

    return brentq(
        lambda w: cumulative(w) - target,
        0.0,
        hi,
        xtol=tolerance,
        maxiter=max_iterations
    )
