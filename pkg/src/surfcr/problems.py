"""Benchmark problems: exact solution fields paired with right-hand sides.

Each problem bundles an (optional) ambient exact-solution field with an
evaluator for f on the surface, so the assembly's f o p composition and the
error norms draw from one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (AmbientScalarField, LevelSetSurface, constant_field,
                       field_xy, laplace_beltrami_ambient,
                       spherical_singular_field, spherical_singular_rhs)

__all__ = ["BenchmarkProblem", "smooth_xy_problem", "singular_sphere_problem",
           "constant_rhs_problem", "problem_by_name"]


@dataclass
class BenchmarkProblem:
    """Exact solution (None when unknown) and f evaluable on the surface."""

    name: str
    u: AmbientScalarField
    f: callable

    @property
    def has_exact(self):
        return self.u is not None


def smooth_xy_problem(surface: LevelSetSurface) -> BenchmarkProblem:
    """u = x1 x2 with f manufactured through the surface Laplacian."""
    u = field_xy()

    def f(pts):
        return -laplace_beltrami_ambient(surface, u, pts) + u.value(pts)

    return BenchmarkProblem("xy", u, f)


def singular_sphere_problem(lam: float = 0.6) -> BenchmarkProblem:
    """Point-singular solution on the unit sphere (poles for lam < 1)."""
    return BenchmarkProblem(f"spherical_singular({lam})",
                            spherical_singular_field(lam),
                            spherical_singular_rhs(lam))


def constant_rhs_problem(c: float = 1.0) -> BenchmarkProblem:
    """Indicator-only runs: f = c, no exact solution."""
    def f(pts):
        return np.full(np.asarray(pts).shape[:-1], float(c))

    return BenchmarkProblem(f"constant_rhs({c})", None, f)


def problem_by_name(name: str, surface: LevelSetSurface,
                    lam: float = 0.6, rhs_constant: float = 1.0):
    if name == "xy":
        return smooth_xy_problem(surface)
    if name == "spherical_singular":
        if surface.name != "sphere":
            raise ValueError(
                "the spherical singular solution lives on the unit sphere")
        return singular_sphere_problem(lam)
    if name == "none":
        return constant_rhs_problem(rhs_constant)
    raise KeyError(f"unknown solution '{name}' "
                   "(expected xy | spherical_singular | none)")
