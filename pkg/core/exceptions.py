# core/exceptions.py
"""
Exception hierarchy shared by the loaders, feature extraction, the networks
and the CLI.

Data problems derive from ValueError and numerical breakdowns from
ArithmeticError, so callers can map whole families at once (the CLI turns
them into exit codes 2 and 3).
"""
from typing import Optional


class CellDataError(ValueError):
    """A problem with cycling telemetry, located as precisely as possible."""

    def __init__(
        self,
        message: str,
        *,
        cell_id: Optional[str] = None,
        cycle_index: Optional[int] = None,
        line_number: Optional[int] = None,
    ):
        self.cell_id = cell_id
        self.cycle_index = cycle_index
        self.line_number = line_number
        location = []
        if line_number is not None:
            location.append(f"line {line_number}")
        if cell_id is not None:
            location.append(f"cell '{cell_id}'")
        if cycle_index is not None:
            location.append(f"cycle {cycle_index}")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")


class MalformedRecordError(CellDataError):
    """A line of a cellhist-v1 file could not be parsed."""


class InvariantViolation(CellDataError):
    """A record parsed but broke one of the telemetry invariants."""

    def __init__(self, invariant: str, **location):
        self.invariant = invariant
        super().__init__(f"invariant violated: {invariant}", **location)


class MissingCycleError(CellDataError):
    """An operation needed a cycle the history does not contain."""


class UnresolvedEolError(CellDataError):
    """The history carries no EoL label and never crosses the threshold."""


class FeatureError(ValueError):
    """Features cannot be computed for the requested input."""


class DegenerateFeatureError(FeatureError):
    """A log-transformed feature would be the log of zero."""

    def __init__(self, feature: str, message: str):
        self.feature = feature
        super().__init__(f"degenerate input for {feature}: {message}")


class SyntheticParameterError(ValueError):
    """The synthetic generator cannot realise the requested parameters."""


class InsufficientDataError(ValueError):
    """Too few cells or samples for the requested operation."""


class NumericalFailure(ArithmeticError):
    """Training or fitting produced non-finite values."""

    def __init__(self, message: str, epoch: Optional[int] = None):
        self.epoch = epoch
        suffix = f" (epoch {epoch})" if epoch is not None else ""
        super().__init__(f"{message}{suffix}")


class ConvergenceError(NumericalFailure):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, final_delta: float):
        self.final_delta = final_delta
        super().__init__(f"{message}; final delta {final_delta:.3e}")
