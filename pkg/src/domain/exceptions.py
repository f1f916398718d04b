from typing import Optional


class SimulationError(Exception):
    pass


class HazardDomainError(SimulationError, ValueError):
    pass


class ArgumentOrderError(SimulationError, ValueError):
    pass


class HistoryOrderError(SimulationError, ValueError):
    pass


class BoundViolationError(SimulationError, RuntimeError):
    """Raised when a candidate intensity exceeds the dominating rate."""


class StepSizeError(SimulationError, ValueError):
    pass


class IncompatibleEngineError(SimulationError, ValueError):
    pass


class MissingFrailtyError(SimulationError, ValueError):
    pass


class UnsupportedCheckError(SimulationError, ValueError):
    pass


class ExplosionError(SimulationError):
    """A subject accumulated more events than the configured limit."""

    def __init__(
        self,
        events: int,
        last_time: float,
        subject_id: Optional[int] = None
    ):
        self.events = events
        self.last_time = last_time
        self.subject_id = subject_id
        who = f"subject {subject_id}" if subject_id is not None else "subject"
        super().__init__(
            f"Event process exploded for {who}: "
            f"{events} events by t={last_time:.6g}"
        )

    def for_subject(self, subject_id: int) -> "ExplosionError":
        return ExplosionError(self.events, self.last_time, subject_id)

    def __reduce__(self):
        return (ExplosionError, (self.events, self.last_time, self.subject_id))


class ScenarioError(SimulationError, ValueError):
    """Scenario file or configuration could not be turned into a valid study."""

    def __init__(
        self,
        message: str,
        key: Optional[str] = None,
        line: Optional[int] = None
    ):
        self.message = message
        self.key = key
        self.line = line
        location = ""
        if line is not None:
            location += f"line {line}: "
        if key is not None:
            location += f"{key}: "
        super().__init__(f"{location}{message}")

    def __reduce__(self):
        return (ScenarioError, (self.message, self.key, self.line))
