"""Exception types shared across the package.

Every error a numerical routine can raise deliberately is one of these;
anything else escaping a public entry point is a bug.
"""


class RevspecError(Exception):
    """Base class for all deliberate errors."""


class InvalidProfile(RevspecError):
    """Profile violates a surface invariant (endpoint slopes, extra critical points)."""


class DomainError(RevspecError):
    """Argument outside the mathematical domain of the operation."""


class DegenerateTorus(RevspecError):
    """Torus parameter at the equatorial degeneracy a = u_max."""


class QuadratureFailure(RevspecError):
    """Quadrature error estimate failed to reach the requested tolerance."""


class IntegrationFailure(RevspecError):
    """ODE integration failed (step collapse or drift beyond tolerance)."""


class RootNotBracketed(RevspecError):
    """Root-finding interval does not bracket a solution."""


class GridTooCoarse(RevspecError):
    """Discretization grid resolves fewer than ~20 points per wavelength."""


class SizeLimit(RevspecError):
    """Requested dense matrix exceeds the configured solver cap."""


class ConvergenceFailure(RevspecError):
    """Underlying eigenvalue solver failed to converge."""


class GridMismatch(RevspecError):
    """Symbols defined on different xi grids were combined."""


class NotConvex(RevspecError):
    """Sampled function is not strictly convex where convexity is required."""


class TruncationTooSmall(RevspecError):
    """Basis truncation tail estimate exceeds the requested tolerance."""


class ScanTooCoarse(RevspecError):
    """Classical scan grid too coarse for the requested verdict resolution."""


class DegenerateFit(RevspecError):
    """Scaling fit requested on degenerate abscissae."""


class HashMismatch(RevspecError):
    """Result files produced under different configs were combined."""


class ConfigError(RevspecError):
    """Configuration file missing, malformed, or inconsistent."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DivergenceWarning(UserWarning):
    """A secular-reduction step residual exceeded its predecessor."""
