"""Exception types shared across the library."""


class LocFrechetError(Exception):
    """Base class for all library errors."""


class InvalidPointError(LocFrechetError):
    """A vector is too far from the unit sphere to be repaired."""


class AntipodalPointsError(LocFrechetError):
    """Logarithm map requested between (near-)antipodal points.

    Carries optional (curve_index, node_index) annotations when raised
    while log-mapping a sample of curves.
    """

    def __init__(self, message, curve_index=None, node_index=None):
        super().__init__(message)
        self.curve_index = curve_index
        self.node_index = node_index


class GridMismatchError(LocFrechetError):
    """Two curves do not share the same time grid."""


class DegenerateWeightsError(LocFrechetError):
    """All weights are (numerically) zero; no Frechet objective exists."""


class NonConvergenceError(LocFrechetError):
    """The weighted Frechet mean solver exhausted its retries without a
    convergence certificate."""


class EmptySampleError(LocFrechetError):
    """An operation requiring a non-trivial sample received none."""


class DegenerateSpectrumError(LocFrechetError):
    """Eigendecomposition of a (numerically) zero operator was requested."""


class EmptyWindowError(LocFrechetError):
    """Fewer than the required number of samples carry positive kernel
    weight; the bandwidth is too small for this target."""


class DegenerateWindowError(LocFrechetError):
    """The local design is degenerate (zero spread); no identifiable
    local-linear fit exists."""


class AllNodesFailedError(LocFrechetError):
    """Every node of a curve prediction failed; nothing to interpolate."""


class MalformedRowError(LocFrechetError):
    """A data file row could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class NonMonotoneTimeError(LocFrechetError):
    """Timestamps in a data file are not increasing."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class EmptyFileError(LocFrechetError):
    """A data file contains no usable rows."""


class InvalidFoldCountError(LocFrechetError):
    """Cross-validation fold count is out of range."""


class EmptyReportError(LocFrechetError):
    """Summaries were requested for a report with no records."""


class ConfigError(LocFrechetError):
    """An experiment configuration failed validation."""
