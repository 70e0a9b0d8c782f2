"""
Exception hierarchy for the MBSFN area formation simulator.

Every error raised on purpose by the simulator derives from SimulatorError so
the command handlers can report it uniformly and pick an exit code.
"""

from typing import List


class SimulatorError(Exception):
    """Base class for simulator errors."""


class InvalidArgumentError(SimulatorError, ValueError):
    """An operation was called with an argument outside its domain."""


class ConstraintViolationError(SimulatorError):
    """A resource request cannot be satisfied within the available RB pool."""


class UnservableUserError(SimulatorError):
    """A user has no positive service rate on the path it was assigned to."""


class ValidationFailedError(SimulatorError):
    """A formation configuration broke one or more system constraints."""

    def __init__(self, violations: List[str], context: str = ""):
        self.violations = list(violations)
        self.context = context
        head = f"{len(self.violations)} constraint violation(s)"
        if context:
            head = f"{head} in {context}"
        super().__init__(head + ": " + "; ".join(self.violations))


class OutputWriteError(SimulatorError):
    """Result files could not be written."""

    def __init__(self, path, reason: str):
        self.path = path
        super().__init__(f"Cannot write {path}: {reason}")
