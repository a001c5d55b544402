"""Exception types raised across the package."""


class EPChiralError(Exception):
    """Base class for all package errors."""


class DegenerateModel(EPChiralError, ValueError):
    """The two modes are identical (zero detuning), so no EP exists."""


class ExceptionalPointError(EPChiralError, ValueError):
    """The eigenbasis is defective at the requested parameter point."""


class AmbiguousBranch(EPChiralError):
    """Both square-root branches are about equally close to the predecessor frame.

    The parameter step was too large to decide continuity; refine it.
    """


class BranchTrackingFailed(AmbiguousBranch):
    """Branch continuity was lost while integrating; halve the time step."""


class StepTooCoarse(EPChiralError, ValueError):
    pass


class NonFinite(EPChiralError, ArithmeticError):
    """Integration produced inf or nan."""


class RegimeError(EPChiralError, ValueError):
    """Parameters fall outside the weak-coupling / small-detuning regime."""


class UndersampledCarrier(EPChiralError, ValueError):
    pass


class NoCrossingReference(EPChiralError):
    """A NAT occurred before any branch-cut crossing into the loss sheet."""

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"no loss-entry crossing precedes NAT at t={time!r}")


class ZeroState(EPChiralError, ArithmeticError):
    pass


class ParseError(EPChiralError, ValueError):
    """Malformed configuration text, with 1-based line and column."""

    def __init__(self, message, line=0, column=0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class ValidationError(EPChiralError, ValueError):
    pass
