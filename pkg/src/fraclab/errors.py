"""Exception taxonomy shared by every module.

The split mirrors how failures are handled: domain/hypothesis/config errors are
caller mistakes, accuracy/construction errors carry partial results so callers
can inspect how far a computation got, and invariant/stability errors signal
that a discrete scheme violated a property it is supposed to guarantee.
"""


class FracLabError(Exception):
    """Base class for everything raised deliberately by this package."""


class DomainError(FracLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class HypothesisError(DomainError):
    """A standing structural hypothesis fails (e.g. alpha <= 2s or N <= 2s)."""


class StateError(FracLabError):
    """An object is used before a required preparation step (calibration)."""


class AccuracyError(FracLabError):
    """A numerical routine could not reach the requested tolerance.

    Carries the best available value and an error bound so callers may still
    inspect the partial result.
    """

    def __init__(self, message, value=None, error_bound=None):
        super().__init__(message)
        self.value = value
        self.error_bound = error_bound


class ConstructionError(FracLabError):
    """A parameter search or bracketing step failed to produce a certificate."""


class StabilityError(FracLabError):
    """A time step violates the stability restriction of the scheme."""


class InvariantError(FracLabError):
    """A discrete invariant that must hold by construction was violated."""


class ConfigError(FracLabError, ValueError):
    """A scenario configuration failed validation.

    ``field`` holds the dotted path of the offending key when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
