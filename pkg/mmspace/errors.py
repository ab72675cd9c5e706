# mmspace/errors.py
"""
Exception hierarchy shared by every package.

The subclasses keep the builtin flavour (ValueError / RuntimeError) so callers
that only know the builtins still catch them; the CLI maps each one to an
exit code.
"""


class HeatPerimError(Exception):
    """Base class for errors raised by the laboratory."""


class ConfigError(HeatPerimError, ValueError):
    """Invalid configuration, builder parameters, ladders or inputs (exit 2)."""


class NumericalError(HeatPerimError, RuntimeError):
    """A numerical stage could not produce a trustworthy result (exit 3)."""


class AcceptanceError(HeatPerimError):
    """An --assert acceptance expectation was violated (exit 4)."""
