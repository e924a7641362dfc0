"""Exception hierarchy shared by all vaporcell modules.

Everything raised on purpose derives from VaporcellError so callers (and
the command line driver) can separate expected computation failures from
genuine bugs.
"""


class VaporcellError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(VaporcellError):
    """Malformed configuration file or unknown configuration key."""


class UnknownIsotopeError(VaporcellError):
    """Requested isotope is not present in the registry."""


class DegenerateGridError(VaporcellError):
    """Frequency or field grid too short or too narrow to support a fit."""


class GridMismatchError(VaporcellError):
    """Two channels that must share a sweep axis were given different axes."""


class GridTooCoarseError(VaporcellError):
    """Requested grid step cannot resolve the narrowest requested feature."""


class DegenerateDataError(VaporcellError):
    """Data carry no information about the requested parameter."""


class InsufficientDataError(VaporcellError):
    """Fewer samples than the operation fundamentally requires."""


class NonUniformSamplingError(VaporcellError):
    """Time series is not uniformly sampled and the operation needs it."""


class AliasingError(VaporcellError):
    """Requested frequency violates the Nyquist limit of the record."""


class StepSizeError(VaporcellError):
    """Integration or control step too large for the requested dynamics."""


class UnstableStepError(StepSizeError):
    """Discrete controller step too large relative to the plant time constant."""


class ZeroResponseError(VaporcellError):
    """Frequency response magnitude too small to divide by."""


class EmptyBandError(VaporcellError):
    """Requested analysis band contains no frequency bins."""


class SingularFitError(VaporcellError):
    """Normal equations singular even after damping; model is degenerate."""


class NonConvergenceError(VaporcellError):
    """Iterative fit stopped without meeting its convergence criteria.

    The partial result is attached so callers can inspect what happened.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
