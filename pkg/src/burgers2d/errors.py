"""Exception types raised by the solvers."""


class Burgers2DError(Exception):
    """Base class for all package errors."""


class SingularBlock(Burgers2DError):
    """A 4x4 pivot block could not be factorized.

    ``index`` is the block row of the failing pivot (``None`` for a lone
    dense solve).
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NonFinite(Burgers2DError):
    """An explicit update produced NaN/Inf or exceeded the blow-up threshold."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NewtonDiverged(Burgers2DError):
    """Newton iteration on a grid line failed to reach tolerance."""

    def __init__(self, message, line=None, residual=None):
        super().__init__(message)
        self.line = line
        self.residual = residual


class DegeneratePhi(Burgers2DError):
    """The Cole-Hopf denominator of the case-1 steady solution vanished."""


class ConfigError(Burgers2DError, ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
