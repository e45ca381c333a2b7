"""Exception types raised by the numerical layers."""


class SeqMeasError(ValueError):
    """Base class for all library errors."""


class WindowError(SeqMeasError):
    """A state or kernel leaks more mass outside the lattice window than allowed."""


class GridMismatchError(SeqMeasError):
    """Two sampled objects live on incompatible grids."""


class CoverageError(SeqMeasError):
    """Probability mass was lost (binning marks, smoothing window, discarded outcomes)."""


class NegligibleWeightError(SeqMeasError):
    """A measurement outcome has probability density below the conditioning floor."""


class ResolutionError(SeqMeasError):
    """An acceptance profile is too narrow to be represented on the lattice."""
