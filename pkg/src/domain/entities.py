from dataclasses import dataclass, field
from bisect import bisect_left, bisect_right
from typing import List, Optional, Tuple
import math

from .exceptions import HistoryOrderError
from .value_objects import EngineKind


@dataclass
class SubjectState:
    """Evolving history of one subject; confined to a single worker."""

    covariates: Tuple[float, ...]
    frailty: float
    event_times: List[float] = field(default_factory=list)
    now: float = 0.0

    def __post_init__(self):
        self.covariates = tuple(self.covariates)
        for earlier, later in zip(self.event_times, self.event_times[1:]):
            if not later > earlier:
                raise HistoryOrderError("Event times must be strictly increasing")
        if self.event_times and self.event_times[-1] > self.now:
            raise HistoryOrderError("Event times cannot lie after the current time")

    @property
    def n_events(self) -> int:
        return len(self.event_times)

    @property
    def last_event_time(self) -> float:
        return self.event_times[-1] if self.event_times else 0.0

    def count_before(self, t: float) -> int:
        """N(t-)."""
        return bisect_left(self.event_times, t)

    def count_through(self, t: float) -> int:
        """N(t)."""
        return bisect_right(self.event_times, t)

    def advance(self, t: float):
        if t < self.now:
            raise HistoryOrderError(f"Cannot move subject back from {self.now} to {t}")
        self.now = t

    def record_event(self, t: float):
        if not t > self.last_event_time or t < self.now:
            raise HistoryOrderError(
                f"Event at {t} does not follow the last event at {self.last_event_time}"
            )
        self.event_times.append(t)
        self.now = t


@dataclass(frozen=True)
class EventHistory:
    subject_id: int
    event_times: Tuple[float, ...]
    censoring_time: float
    frailty: Optional[float]
    covariates: Tuple[float, ...]
    engine: EngineKind

    def __post_init__(self):
        object.__setattr__(self, "event_times", tuple(self.event_times))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if not self.censoring_time > 0:
            raise ValueError("Censoring time must be positive")
        for earlier, later in zip(self.event_times, self.event_times[1:]):
            if not later > earlier:
                raise ValueError("Event times must be strictly increasing")
        if self.event_times and self.event_times[-1] >= self.censoring_time:
            raise ValueError("Event times must precede the censoring time")

    @property
    def n_events(self) -> int:
        return len(self.event_times)

    @property
    def gaps(self) -> List[float]:
        """Uncensored gap times W_1..W_n."""
        starts = (0.0,) + self.event_times[:-1]
        return [stop - start for start, stop in zip(starts, self.event_times)]

    @property
    def censored_gap(self) -> float:
        last = self.event_times[-1] if self.event_times else 0.0
        return self.censoring_time - last

    def count_through(self, t: float) -> int:
        return bisect_right(self.event_times, t)


@dataclass(frozen=True)
class CountingProcessRecord:
    subject_id: int
    event_number: int
    start: float
    stop: float
    status: int
    covariates: Tuple[float, ...] = ()
    frailty: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.covariates, tuple):
            object.__setattr__(self, "covariates", tuple(self.covariates))
        if not self.start < self.stop:
            raise ValueError(f"Row start {self.start} must precede stop {self.stop}")
        if self.status not in (0, 1):
            raise ValueError("Row status must be 0 or 1")
        if self.event_number < 1:
            raise ValueError("Event number must be at least 1")


@dataclass(frozen=True)
class ValidationReport:
    name: str
    sample_size: int
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def __post_init__(self):
        within = math.isfinite(self.statistic) and self.statistic <= self.threshold
        if self.passed != within:
            raise ValueError("Pass flag must agree with statistic and threshold")

    @classmethod
    def evaluate(
        cls,
        name: str,
        sample_size: int,
        statistic: float,
        threshold: float,
        detail: str = ""
    ) -> "ValidationReport":
        passed = math.isfinite(statistic) and statistic <= threshold
        return cls(name, sample_size, float(statistic), float(threshold), passed, detail)
