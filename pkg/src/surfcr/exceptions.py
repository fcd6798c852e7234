"""Exception types raised by the surfcr package."""


class SurfcrError(Exception):
    """Base class for all package errors."""


class DegenerateGradient(SurfcrError):
    """Level-set gradient vanished at a queried point."""


class NoConvergence(SurfcrError):
    """An iterative procedure failed to reach its tolerance."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class NotOnSurface(SurfcrError):
    """A point required to lie on the surface does not."""


class NonManifold(SurfcrError):
    """Mesh connectivity is not a closed 2-manifold."""


class InconsistentOrientation(SurfcrError):
    """Adjacent triangles do not induce opposite orientations on a shared edge."""


class ParseError(SurfcrError):
    """Malformed mesh file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ClosureDiverged(SurfcrError):
    """Conforming closure of a bisection round did not terminate."""


class DegenerateTriangle(SurfcrError):
    """Triangle with (numerically) vanishing area."""


class DegenerateFrame(SurfcrError):
    """Adjacent face normals are antipodal; no local frame exists."""


class PatchGrowthExceeded(SurfcrError):
    """Recovery patch failed the rank condition within the layer budget."""


class RankDeficient(SurfcrError):
    """Least-squares fit does not admit a unique solution."""


class IndefiniteMatrix(SurfcrError):
    """Conjugate gradients met a direction of non-positive curvature."""


class ConfigError(SurfcrError):
    """Invalid experiment configuration."""
