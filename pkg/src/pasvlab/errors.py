"""Exception hierarchy shared by every pasvlab module."""


class PasvError(Exception):
    """Base class for all library errors."""


class DomainError(PasvError, ValueError):
    """An argument lies outside the supported domain of an operation."""


class UndefinedValueError(PasvError, ArithmeticError):
    """The requested quantity is mathematically undefined (e.g. 0/0)."""


class BracketError(PasvError, ValueError):
    """A root-finding bracket does not contain a sign change."""


class LimitPathError(PasvError, ValueError):
    """The caller must use a limiting formula instead (e.g. kt = 0)."""


class ContractError(PasvError, ValueError):
    """An operation was called outside its contract (e.g. wrong m)."""


class CutoffError(PasvError, RuntimeError):
    """The Fock cutoff is too small for the requested state."""


class TruncationError(PasvError, RuntimeError):
    """A truncated series failed to converge."""


class StepSizeError(PasvError, RuntimeError):
    """The fixed-step integrator failed its convergence certificate."""


class PaddingError(PasvError, ValueError):
    """A quadrature domain is too small for the convolution kernel."""


class ExportError(PasvError, OSError):
    """Reading or writing a data file failed."""
