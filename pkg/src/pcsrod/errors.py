"""Exception types shared across the package."""


class PcsError(Exception):
    """Base class for all package-specific failures."""


class RotationNearPi(PcsError):
    """Rotation logarithm requested within the guard band of the pi branch cut."""


class NearSingular(PcsError):
    """Rotation-vector rate map evaluated within the guard band of its 2*pi singularity."""


class OutOfRange(PcsError):
    """Arc-length coordinate outside the rod domain [0, L]."""


class SingularJacobian(PcsError):
    """Stacked Jacobian too ill-conditioned to realize the commanded strain effort."""


class RankDeficient(PcsError):
    """Task-space input map lost row rank; the tip wrench cannot steer the position."""


class NotConverged(PcsError):
    """Iterative solve ended without meeting its tolerance."""


class ConfigError(PcsError):
    """Malformed or unknown experiment configuration input."""
