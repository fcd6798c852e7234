"""Discrete error norms against known exact solutions, and order bookkeeping.

The exact solution is pulled onto the discrete surface through the
closest-point projection; all face integrals use the degree-4 rule unless
stated otherwise.  Convergence orders are reported with respect to the
number of degrees of freedom (edge count).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import (CRFunction, broken_gradients, interpolate_cr,
                  projected_quadrature)
from .quadrature import triangle_rule

__all__ = [
    "l2_error",
    "broken_h1_error",
    "interpolant_gradient_error",
    "recovered_gradient_error",
    "ConvergenceRow",
    "convergence_orders",
    "fit_order",
]

NORM_DEGREE = 4


def _rule(degree):
    return triangle_rule(NORM_DEGREE if degree is None else degree)


def l2_error(u_field, u_h: CRFunction, surface, degree: int = None) -> float:
    """|| u o p - u_h ||_L2 over the discrete surface."""
    mesh = u_h.mesh
    rule = _rule(degree)
    proj = projected_quadrature(mesh, surface, rule)
    diff = u_field.value(proj) - u_h.face_values(rule)
    val = np.einsum("f,q,fq->", mesh.areas, rule.weights, diff ** 2)
    return float(np.sqrt(val))


def broken_h1_error(u_field, u_h: CRFunction, surface,
                    degree: int = None) -> float:
    """Broken H1 seminorm of the error.

    The exact side is the tangential gradient at the projected points,
    flattened into each face's plane; the discrete side is the per-face
    constant gradient.
    """
    mesh = u_h.mesh
    rule = _rule(degree)
    proj = projected_quadrature(mesh, surface, rule)
    gt = u_field.tangential_gradient(surface, proj)          # (F, nq, 3)
    nh = mesh.face_normals
    gt = gt - np.einsum("fqk,fk->fq", gt, nh)[..., None] * nh[:, None, :]
    diff = gt - broken_gradients(u_h)[:, None, :]
    val = np.einsum("f,q,fqk,fqk->", mesh.areas, rule.weights, diff, diff)
    return float(np.sqrt(val))


def interpolant_gradient_error(u_field, u_h: CRFunction, surface) -> float:
    """Broken H1 seminorm between the interpolated extension and u_h."""
    mesh = u_h.mesh

    def extension(pts):
        return u_field.value(surface.closest_point(pts))

    pi_u = interpolate_cr(extension, mesh)
    diff = broken_gradients(pi_u) - broken_gradients(u_h)
    val = np.einsum("f,fk,fk->", mesh.areas, diff, diff)
    return float(np.sqrt(val))


def recovered_gradient_error(u_field, g_h: CRFunction, surface,
                             degree: int = None) -> float:
    """L2 distance between the exact tangential gradient and the recovery.

    The exact side is the tangential gradient on the true surface composed
    with the projection, compared componentwise in ambient coordinates
    (unlike the broken norm it is not flattened into the face planes).
    """
    mesh = g_h.mesh
    rule = _rule(degree)
    proj = projected_quadrature(mesh, surface, rule)
    gt = u_field.tangential_gradient(surface, proj)
    diff = gt - g_h.face_values(rule)
    val = np.einsum("f,q,fqk,fqk->", mesh.areas, rule.weights, diff, diff)
    return float(np.sqrt(val))


@dataclass
class ConvergenceRow:
    """One refinement level: DOF count, four errors, DOF-based orders."""

    dof: int
    e: float
    De: float
    Die: float
    Dre: float
    order_e: float = None
    order_De: float = None
    order_Die: float = None
    order_Dre: float = None


def convergence_orders(rows):
    """Fill order columns from consecutive rows (first row stays empty)."""
    for prev, cur in zip(rows, rows[1:]):
        ratio = np.log(cur.dof / prev.dof)
        for name in ("e", "De", "Die", "Dre"):
            ep, ec = getattr(prev, name), getattr(cur, name)
            if ep > 0 and ec > 0:
                setattr(cur, f"order_{name}", float(np.log(ep / ec) / ratio))
    return rows


def fit_order(dofs, errors) -> float:
    """Least-squares slope of log(error) against log(DOF), sign-flipped."""
    dofs = np.asarray(dofs, float)
    errors = np.asarray(errors, float)
    if len(dofs) < 2:
        raise ValueError("need at least two levels")
    return float(-np.polyfit(np.log(dofs), np.log(errors), 1)[0])
