"""Exceptions raised by the simulator.

Every error derives from FilmError so callers (the CLI in particular) can
catch the whole family at once, while the builtin bases keep them usable as
plain ValueError / RuntimeError.
"""

from typing import Optional


class FilmError(Exception):
    """Root of all simulator errors."""


class InvalidInputError(FilmError, ValueError):
    """Empty, mismatched or otherwise unusable input data."""


class WindowAlignmentError(FilmError, ValueError):
    """A metering window does not span a whole number of mains cycles."""


class MeasurementUnavailableError(FilmError, ValueError):
    """Not enough zero crossings to measure the frequency."""


class ConfigurationError(FilmError, ValueError):
    """Invalid appliance/source parameters or an illegal state transition."""


class ParseError(ConfigurationError):
    """A scenario document could not be parsed.

    Parameters:
    ----------
    message: str
        What went wrong.
    field: str, optional
        Dotted path of the offending field, e.g. ``action[3].t_s``.
    line: int, optional
        1-based line of the block that holds the field.
    """

    def __init__(
        self, message: str, field: Optional[str] = None, line: Optional[int] = None
    ):
        self.field = field
        self.line = line
        context = []
        if line is not None:
            context.append(f"line {line}")
        if field is not None:
            context.append(field)
        prefix = f"[{', '.join(context)}] " if context else ""
        super().__init__(f"{prefix}{message}")


class SimulationError(FilmError, RuntimeError):
    """The panel loop could not advance (e.g. node voltage did not converge)."""


class NumericalError(FilmError, ArithmeticError):
    """A network solve hit a singular system."""


class UndefinedCorrelationError(InvalidInputError):
    """Correlation requested for a constant series."""
