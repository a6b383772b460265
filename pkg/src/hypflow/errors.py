"""Exception types shared across the package."""


class HypflowError(Exception):
    """Base class for all package-specific errors."""


class DegenerateDecomposition(HypflowError):
    """Triangular decomposition undefined: upper-left entry vanishes."""


class NotHyperbolic(HypflowError):
    """Operation requires a hyperbolic element (|trace| > 2)."""


class NoHyperbolicClosing(HypflowError):
    """Closing identity has no hyperbolic solution (right side below 2)."""


class WitnessNotFound(HypflowError):
    """No group element realizing the required coset identity was found."""


class AngleOutOfRange(HypflowError):
    """Crossing angle outside the range the small-angle pipeline accepts."""


class UnfoldFailure(HypflowError):
    """Geodesic unfolding failed (vertex grazing beyond perturbation policy)."""


class NoConvergence(HypflowError):
    """Iterative reduction exceeded its step budget."""


class BadIndex(HypflowError):
    """Word refers to a generator index outside the group's range."""


class ConfigError(HypflowError):
    """Invalid run configuration or group file."""
