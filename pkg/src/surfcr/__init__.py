"""Surface Crouzeix-Raviart finite elements with gradient recovery.

Solves -lap_G u + u = f on closed level-set surfaces with the nonconforming
edge-midpoint element, recovers a superconvergent gradient by local
quadratic least-squares fits in intrinsic coordinates, and drives adaptive
refinement from the recovery-based error indicator.
"""

__version__ = "0.1.0"

from .estimate import adapt_loop, dorfler_mark, indicators
from .exceptions import SurfcrError
from .fem import CRFunction, assemble, interpolate_cr
from .geometry import (AmbientScalarField, LevelSetSurface, dziuk_surface,
                       sphere, star_surface, surface_by_name)
from .mesh import SurfaceMesh, bisect, icosphere, mesh_size, uniform_refine
from .norms import (broken_h1_error, interpolant_gradient_error, l2_error,
                    recovered_gradient_error)
from .problems import (constant_rhs_problem, singular_sphere_problem,
                       smooth_xy_problem)
from .recovery import build_patch, recover_field, recovered_gradient_at
from .solve import cg_solve

__all__ = [
    "__version__", "SurfcrError",
    "LevelSetSurface", "AmbientScalarField", "sphere", "dziuk_surface",
    "star_surface", "surface_by_name",
    "SurfaceMesh", "icosphere", "uniform_refine", "bisect", "mesh_size",
    "CRFunction", "assemble", "interpolate_cr", "cg_solve",
    "recover_field", "recovered_gradient_at", "build_patch",
    "indicators", "dorfler_mark", "adapt_loop",
    "l2_error", "broken_h1_error", "interpolant_gradient_error",
    "recovered_gradient_error",
    "smooth_xy_problem", "singular_sphere_problem", "constant_rhs_problem",
]
