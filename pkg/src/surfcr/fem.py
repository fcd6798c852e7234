"""Crouzeix-Raviart space on a discrete surface: assembly and interpolation.

Degrees of freedom sit at edge midpoints (DOF index == edge index, N equals
the mesh edge count).  On each face the basis function attached to local
edge i is chi_i = 1 - 2 lambda_i, with lambda_i the barycentric coordinate
of the opposite vertex, so functions are continuous at midpoints only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import DegenerateTriangle
from .mesh import SurfaceMesh
from .quadrature import edge_rule, triangle_rule

__all__ = [
    "CRFunction",
    "AssembledSystem",
    "cr_basis_gradients",
    "broken_gradients",
    "assemble",
    "interpolate_cr",
    "evaluate",
    "jump_defect",
    "max_jump_defect",
    "projected_quadrature",
    "quadrature_points",
]


class CRFunction:
    """Edge-midpoint valued function, linear on each face.

    ``dofs`` has shape (N,) for scalars or (N, 3) for 3-vector fields (the
    recovered gradient).  Continuity holds at edge midpoints only.
    """

    def __init__(self, mesh: SurfaceMesh, dofs):
        self.mesh = mesh
        self.dofs = np.asarray(dofs, float)
        if self.dofs.shape[0] != mesh.n_edges:
            raise ValueError("dof vector length must equal the edge count")

    @property
    def components(self):
        return 1 if self.dofs.ndim == 1 else self.dofs.shape[1]

    def face_values(self, rule: "triangle_rule") -> np.ndarray:
        """Values at the rule's barycentric points, shape (F, nq[, 3])."""
        chi = 1.0 - 2.0 * rule.points          # (nq, 3)
        local = self.dofs[self.mesh.tri_edges]  # (F, 3[, 3])
        if self.dofs.ndim == 1:
            return np.einsum("fi,qi->fq", local, chi)
        return np.einsum("fic,qi->fqc", local, chi)


@dataclass
class AssembledSystem:
    """Sparse SPD system A u = b with edge-indexed unknowns."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    mesh: SurfaceMesh

    @property
    def n(self):
        return self.rhs.shape[0]


def cr_basis_gradients(vertices) -> np.ndarray:
    """Constant in-plane gradients of the three CR basis functions.

    Accepts one (3, 3) vertex triple or a stacked (F, 3, 3) array; returns
    the matching (3, 3) or (F, 3, 3) array with entry [i] the gradient of
    chi_i (attached to the edge opposite vertex i).
    """
    v = np.asarray(vertices, float)
    single = v.ndim == 2
    v = v[None] if single else v
    n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    twice_area = np.linalg.norm(n, axis=1)
    if np.any(twice_area <= 0) or np.any(~np.isfinite(twice_area)):
        raise DegenerateTriangle("zero-area triangle in basis gradients")
    nhat = n / twice_area[:, None]
    grads = np.empty_like(v)
    for i in range(3):
        opp = v[:, (i + 2) % 3] - v[:, (i + 1) % 3]
        # grad lambda_i = nhat x opp / (2 area); chi_i = 1 - 2 lambda_i
        grads[:, i] = -2.0 * np.cross(nhat, opp) / twice_area[:, None]
    return grads[0] if single else grads


def broken_gradients(u_h: CRFunction) -> np.ndarray:
    """Per-face constant tangential gradient of a scalar CR function, (F, 3)."""
    g = cr_basis_gradients(u_h.mesh.corner_coords)      # (F, 3, 3)
    local = u_h.dofs[u_h.mesh.tri_edges]                # (F, 3)
    return np.einsum("fi,fik->fk", local, g)


def quadrature_points(mesh: SurfaceMesh, rule) -> np.ndarray:
    """Physical quadrature points per face, (F, nq, 3)."""
    return np.einsum("qi,fik->fqk", rule.points, mesh.corner_coords)


def projected_quadrature(mesh: SurfaceMesh, surface, rule) -> np.ndarray:
    """Closest-point projections of the face quadrature points, cached.

    The cache lives on the (immutable) mesh and is keyed by surface name
    and rule size, so assembly and error norms share one projection sweep.
    Coarse faces in strongly curved regions converge slowly, hence the
    generous iteration budget.
    """
    key = ("proj", surface.name, rule.exact_degree, len(rule.weights))
    cache = mesh._cache
    if key not in cache:
        pts = quadrature_points(mesh, rule)
        cache[key] = surface.closest_point(pts, max_iter=500)
    return cache[key]


def assemble(mesh: SurfaceMesh, surface, f, mass_degree: int = 2,
             load_degree: int = 4) -> AssembledSystem:
    """Assemble stiffness + mass matrix and the load vector for -lap u + u = f.

    ``f`` is evaluated at the closest-point projections of the load-rule
    quadrature points (the f o p composition); it must accept (..., 3)
    arrays.  The stiffness block annihilates per-face constants and the mass
    term makes the matrix positive definite.
    """
    grads = cr_basis_gradients(mesh.corner_coords)          # (F, 3, 3)
    areas = mesh.areas
    stiff = np.einsum("f,fik,fjk->fij", areas, grads, grads)
    mrule = triangle_rule(mass_degree)
    chi = 1.0 - 2.0 * mrule.points
    mass = np.einsum("f,q,qi,qj->fij", areas, mrule.weights, chi, chi)
    local = stiff + mass

    te = mesh.tri_edges
    rows = np.repeat(te, 3, axis=1).ravel()
    cols = np.tile(te, (1, 3)).ravel()
    n = mesh.n_edges
    matrix = sp.coo_matrix((local.ravel(), (rows, cols)),
                           shape=(n, n)).tocsr()

    lrule = triangle_rule(load_degree)
    proj = projected_quadrature(mesh, surface, lrule)
    fvals = np.asarray(f(proj), float)                      # (F, nq)
    chi_l = 1.0 - 2.0 * lrule.points
    b_local = np.einsum("f,q,fq,qi->fi", areas, lrule.weights, fvals, chi_l)
    rhs = np.zeros(n)
    np.add.at(rhs, te, b_local)
    return AssembledSystem(matrix=matrix, rhs=rhs, mesh=mesh)


def interpolate_cr(v, mesh: SurfaceMesh, gauss_points: int = 2) -> CRFunction:
    """Nonconforming interpolant: DOF = average of v over each edge.

    Averages use Gauss quadrature (2-point by default, exact through
    cubics); for functions linear along an edge this equals the midpoint
    value.  ``v`` is either a callable on (..., 3) points or an object with
    a ``value`` method.
    """
    value = v.value if hasattr(v, "value") else v
    rule = edge_rule(gauss_points)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(value(pts), float)
    return CRFunction(mesh, vals @ rule.weights)


def evaluate(u_h: CRFunction, face: int, bary):
    """Evaluate the per-face linear reconstruction at a barycentric point."""
    lam = np.asarray(bary, float)
    chi = 1.0 - 2.0 * lam
    local = u_h.dofs[u_h.mesh.tri_edges[face]]
    if u_h.dofs.ndim == 1:
        return float(chi @ local)
    return chi @ local


def _edge_traces(u_h, mesh, rule):
    """Traces on every edge from both sides, (E, nq) each.

    ``u_h`` is a CRFunction, or an (F,)-array of per-face constants (useful
    for exercising the jump machinery on genuinely discontinuous data).
    """
    if isinstance(u_h, np.ndarray):
        consts = np.broadcast_to(u_h[mesh.edge_tri][:, :, None],
                                 (mesh.n_edges, 2, len(rule.points)))
        return consts[:, 0], consts[:, 1]
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    grads = cr_basis_gradients(mesh.corner_coords)
    local = u_h.dofs[mesh.tri_edges]
    traces = []
    for side in (0, 1):
        faces = mesh.edge_tri[:, side]
        # linear reconstruction: value at x = value at centroid + g . (x - c)
        cent = mesh.corner_coords[faces].mean(axis=1)
        val_c = np.einsum("ei->e", local[faces]) / 3.0
        g = np.einsum("ei,eik->ek", local[faces], grads[faces])
        traces.append(val_c[:, None]
                      + np.einsum("ek,eqk->eq", g, pts - cent[:, None, :]))
    return traces[0], traces[1]


def jump_defect(u_h, edge: int, mesh: SurfaceMesh = None,
                gauss_points: int = 2) -> float:
    """Integral over one edge of the trace jump (plus side minus minus side).

    Zero up to rounding for any member of the CR space; nonzero for general
    per-face data (pass an (F,)-array of face constants with ``mesh``).
    """
    mesh = u_h.mesh if mesh is None else mesh
    rule = edge_rule(gauss_points)
    tp, tm = _edge_traces(u_h, mesh, rule)
    length = mesh.edge_lengths[edge]
    return float(length * np.dot(rule.weights, tp[edge] - tm[edge]))


def max_jump_defect(u_h: CRFunction, gauss_points: int = 2) -> float:
    """Largest absolute jump integral over all edges."""
    rule = edge_rule(gauss_points)
    tp, tm = _edge_traces(u_h, u_h.mesh, rule)
    vals = u_h.mesh.edge_lengths * np.abs((tp - tm) @ rule.weights)
    return float(vals.max())
