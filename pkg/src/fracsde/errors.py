"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FracSDEError(Exception):
    """Base class for all errors raised by :mod:`fracsde`."""


# {{{ core


class EmptyOrders(FracSDEError, ValueError):
    pass


class OrderOutOfRange(FracSDEError, ValueError):
    pass


class OrdersNotStrictlyIncreasing(FracSDEError, ValueError):
    pass


class NonPositiveHorizon(FracSDEError, ValueError):
    pass


class ZeroSteps(FracSDEError, ValueError):
    pass


class OutOfDomain(FracSDEError, ValueError):
    pass


class InvalidProblem(FracSDEError, ValueError):
    """The drift or diffusion does not evaluate to a finite vector in R^d."""


# }}}

# {{{ brownian


class FactorDoesNotDivideN(FracSDEError, ValueError):
    pass


# }}}

# {{{ soe


class InvalidWindow(FracSDEError, ValueError):
    pass


class ToleranceNotMet(FracSDEError, RuntimeError):
    pass


class NonPositiveTime(FracSDEError, ValueError):
    pass


# }}}

# {{{ solvers


class GridMismatch(FracSDEError, ValueError):
    pass


class SoeWindowTooNarrow(FracSDEError, ValueError):
    pass


class SoeMismatch(FracSDEError, ValueError):
    """The supplied SOE approximations do not correspond to the orders."""


class NonFiniteState(FracSDEError, ArithmeticError):
    """The numerical solution left the finite range at some step."""

    def __init__(self, step: int, method: str = "") -> None:
        self.step = step
        self.method = method
        label = f"{method} solver" if method else "solver"
        super().__init__(f"{label} produced a non-finite state at step {step}")


# }}}

# {{{ harness


class NonPositiveError(FracSDEError, ValueError):
    pass


class StudyConfigError(FracSDEError, ValueError):
    pass


class PathFailure(FracSDEError):
    """A solver failed on one Monte Carlo sample path."""

    def __init__(self, path_index: int, seed: int, cause: Exception) -> None:
        self.path_index = path_index
        self.seed = seed
        self.cause = cause
        super().__init__(f"path {path_index} (seed {seed}): {cause}")


class StudyError(FracSDEError):
    """A convergence study failed in one of its stages."""

    def __init__(self, stage: str, cause: Exception) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"study stage '{stage}' failed: {cause}")


# }}}

# {{{ cli


class ConfigError(FracSDEError, ValueError):
    pass


class UnknownFlag(ConfigError):
    pass


class MalformedValue(ConfigError):
    pass


class ConflictingOptions(ConfigError):
    pass


# }}}
