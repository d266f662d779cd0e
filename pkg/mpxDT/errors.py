class ParameterError(ValueError):
    """A model, probe or configuration parameter is outside its allowed range."""


class DimensionError(ValueError):
    """A Hilbert-space dimension target is invalid for the given POVM set."""


class SaturationError(ValueError):
    """The largest outcome is not saturated at the truncation edge."""


class ShapeError(ValueError):
    """Array shapes of statistics, probes and POVMs do not agree."""


class ZeroOutcomeError(ValueError):
    """The outcome never occurs: its POVM diagonal has zero trace."""


class RangeError(ValueError):
    """Missing information outside of [0, log2(M)]."""


class TruncationError(ValueError):
    """The photon-number truncation loses more than 1e-6 probability for a probe."""


class FitDivergence(RuntimeError):
    """The forward model does not describe the POVM set."""


class TruncationWarning(UserWarning):
    """Probe matrix rows sum to less than 1 - 1e-6."""


class NonConvergenceWarning(RuntimeWarning):
    """The reconstruction stopped at `max_iter` before reaching `tol`."""
