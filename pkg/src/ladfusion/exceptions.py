"""Exception and warning types raised by ladfusion."""


class InvalidArgumentError(ValueError):
    """An argument is outside the domain an operation accepts."""


class SolverError(RuntimeError):
    """A dense eigensolver failed or returned an unusable decomposition."""


class ResolutionError(ValueError):
    """A quadrature grid is too coarse for the requested kernel bandwidth."""


class UndefinedRatioError(ZeroDivisionError):
    """A relative difference was requested against a (near) zero reference."""


class ImaginaryPartWarning(RuntimeWarning):
    """Retained eigenvalues carry a non-negligible imaginary part."""


class TruncationWarning(RuntimeWarning):
    """Fewer eigenpairs than requested lie above the rank floor."""


class ClampWarning(RuntimeWarning):
    """A density weight took negative values that were clamped to zero."""


class ResidualWarning(RuntimeWarning):
    """An eigenpair failed its residual check."""
