"""Exception hierarchy shared by all ddpc modules."""


class DdpcError(Exception):
    """Base class for every error raised by this package."""


class InputError(DdpcError, ValueError):
    """Malformed arguments: wrong shapes, too-short sequences, bad indices."""


class DomainError(DdpcError):
    """Arguments are well formed but outside the mathematical domain of the operation."""


class NumericalError(DdpcError):
    """A computation became too ill-conditioned to trust."""


class InconsistentWindowError(DdpcError):
    """An input-output window is not a trajectory of the system."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class InfeasibleError(DdpcError):
    """An equality-constrained problem has inconsistent constraints."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class GenerationError(DdpcError):
    """Random signal generation failed within the retry budget."""


class StepError(DdpcError):
    """A closed-loop step failed; carries the failing time and the partial log."""

    def __init__(self, message, t, log=None, cause=None):
        super().__init__(message)
        self.t = t
        self.log = log
        self.cause = cause
