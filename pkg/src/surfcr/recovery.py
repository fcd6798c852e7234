"""Parametric polynomial-preserving gradient recovery at edge midpoints.

For every midpoint a local orthonormal frame is erected on the averaged
face normal, the surrounding midpoints are projected onto the frame's
parameter plane, and two quadratic least-squares fits are computed over the
patch: one of the surface heights and one of the finite element values.
The recovered gradient combines their slopes at the origin through the
pseudoinverse of the local graph parametrization, which makes the result
exact for quadratic data over planar patches and invariant under rotations
of the parameter axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFrame, PatchGrowthExceeded, RankDeficient
from .fem import CRFunction
from .mesh import SurfaceMesh

__all__ = [
    "PatchFrame",
    "Patch",
    "QuadraticFit",
    "local_frame",
    "build_patch",
    "fit_quadratic",
    "recover_from_patch",
    "recovered_gradient_at",
    "recover_field",
]

RANK_RTOL = 1e-8
MAX_LAYERS = 10


@dataclass
class PatchFrame:
    """Orthonormal frame at an edge midpoint; phi3 is the local normal."""

    origin: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    edge_index: int

    @property
    def basis(self):
        return np.stack([self.phi1, self.phi2, self.phi3], axis=1)


@dataclass
class QuadraticFit:
    """Coefficients of c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2."""

    coefficients: np.ndarray
    residual: float
    condition: float

    def gradient_at_origin(self):
        return self.coefficients[1], self.coefficients[2]


class Patch:
    """Per-midpoint recovery workspace.

    Holds the member midpoints (all midpoints of the patch triangles), their
    parameter-plane projections, the layer count and a rank-revealing
    factorization of the scaled quadratic design matrix, shared by the
    geometry and solution fits.
    """

    def __init__(self, edge_index, frame, member_edges, params, heights,
                 samples, layers, diameter, svd):
        self.edge_index = edge_index
        self.frame = frame
        self.member_edges = member_edges
        self.params = params
        self.heights = heights
        self.samples = samples
        self.layers = layers
        self.diameter = diameter
        self._svd = svd

    def fit(self, values) -> QuadraticFit:
        return _fit_from_svd(self._svd, np.asarray(values, float),
                             self.diameter)

    def fit_heights(self) -> QuadraticFit:
        return self.fit(self.heights)

    def fit_samples(self) -> QuadraticFit:
        if self.samples is None:
            raise ValueError("patch was built without solution samples")
        return self.fit(self.samples)


def local_frame(mesh: SurfaceMesh, edge_index: int) -> PatchFrame:
    """Frame whose third axis averages the two adjacent face normals.

    The first axis is the global coordinate axis least aligned with the
    normal, projected onto its orthogonal plane; the second completes the
    right-handed triple.
    """
    tp, tm = mesh.edge_tri[edge_index]
    n = mesh.face_normals[tp] + mesh.face_normals[tm]
    norm = np.linalg.norm(n)
    if norm < 1e-10:
        raise DegenerateFrame(
            f"antipodal face normals at edge {edge_index}")
    phi3 = n / norm
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(phi3)))] = 1.0
    phi1 = seed - (seed @ phi3) * phi3
    phi1 /= np.linalg.norm(phi1)
    phi2 = np.cross(phi3, phi1)
    return PatchFrame(origin=mesh.edge_midpoints[edge_index].copy(),
                      phi1=phi1, phi2=phi2, phi3=phi3,
                      edge_index=edge_index)


def _design(params):
    x, y = params[:, 0], params[:, 1]
    return np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=1)


def _rank_svd(params):
    """SVD of the diameter-scaled quadratic design; None if rank-deficient."""
    if params.shape[0] < 6:
        return None, 1.0
    diam = float(np.linalg.norm(params, axis=1).max())
    if diam <= 0.0:
        return None, 1.0
    a = _design(params / diam)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[-1] <= RANK_RTOL * s[0]:
        return None, diam
    return (u, s, vt), diam


def _fit_from_svd(svd, values, diameter) -> QuadraticFit:
    if svd is None:
        raise RankDeficient("design matrix does not satisfy the rank condition")
    u, s, vt = svd
    coeff = vt.T @ ((u.T @ values) / s)
    resid = float(np.linalg.norm(_apply_design_scaled(u, s, vt, coeff) - values))
    # express in unscaled parameters
    d = diameter
    coeff = coeff * np.array([1.0, 1 / d, 1 / d, 1 / d ** 2, 1 / d ** 2,
                              1 / d ** 2])
    return QuadraticFit(coeff, resid, float(s[-1] / s[0]))


def _apply_design_scaled(u, s, vt, coeff):
    return u @ (s * (vt @ coeff))


def fit_quadratic(params, samples, diameter=None) -> QuadraticFit:
    """Least-squares quadratic through (parameter, sample) pairs.

    Parameters are scaled by the patch diameter before the rank-revealing
    factorization; raises RankDeficient when the points admit no unique fit.
    """
    params = np.asarray(params, float)
    samples = np.asarray(samples, float)
    svd, diam = _rank_svd(params)
    if diameter is not None:
        # refactor with caller-provided scale
        d = float(diameter)
        a = _design(params / d)
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        if params.shape[0] < 6 or s[-1] <= RANK_RTOL * s[0]:
            raise RankDeficient("design matrix does not satisfy the rank "
                                "condition")
        return _fit_from_svd((u, s, vt), samples, d)
    return _fit_from_svd(svd, samples, diam)


def build_patch(mesh: SurfaceMesh, edge_index: int, u_h: CRFunction = None,
                min_layers: int = 1) -> Patch:
    """Grow layers of triangles around a midpoint until the rank condition.

    Layer zero is the edge itself, layer one its two faces; each further
    layer adds every triangle sharing an edge with the current region.
    Members are the midpoints of all member triangles.  Growth stops once
    the scaled design matrix keeps six singular values above the relative
    threshold (two layers on typical meshes), and fails after
    ``MAX_LAYERS`` layers.  ``min_layers`` forces wider stencils; the extra
    averaging restores full superconvergence on unstructured graded meshes.
    """
    frame = local_frame(mesh, edge_index)
    mids = mesh.edge_midpoints
    tris = mesh.edge_tri[edge_index]
    for layers in range(1, MAX_LAYERS + 1):
        member_edges = np.unique(mesh.tri_edges[tris])
        tris = np.unique(mesh.edge_tri[member_edges])
        if layers < min_layers:
            continue
        rel = mids[member_edges] - frame.origin
        params = np.stack([rel @ frame.phi1, rel @ frame.phi2], axis=1)
        svd, diam = _rank_svd(params)
        if svd is not None:
            heights = rel @ frame.phi3
            samples = None
            if u_h is not None:
                samples = u_h.dofs[member_edges]
            return Patch(edge_index, frame, member_edges, params, heights,
                         samples, layers, diam, svd)
    raise PatchGrowthExceeded(
        f"rank condition unmet after {MAX_LAYERS} layers at edge "
        f"{edge_index}")


def recover_from_patch(frame: PatchFrame, surface_fit: QuadraticFit,
                       solution_fit: QuadraticFit) -> np.ndarray:
    """Recovered gradient from the two fits, in global coordinates.

    With J the Jacobian of the fitted graph map at the origin, the local
    gradient is J (J^T J)^{-1} (dp1, dp2)^T, mapped back through the frame;
    the result is tangent to the fitted surface at the origin.
    """
    a, b = surface_fit.gradient_at_origin()
    p1, p2 = solution_fit.gradient_at_origin()
    det = (1.0 + a * a) * (1.0 + b * b) - (a * b) ** 2
    g1 = ((1.0 + b * b) * p1 - a * b * p2) / det
    g2 = ((1.0 + a * a) * p2 - a * b * p1) / det
    return g1 * frame.phi1 + g2 * frame.phi2 + (a * g1 + b * g2) * frame.phi3


def recovered_gradient_at(mesh: SurfaceMesh, edge_index: int,
                          u_h: CRFunction, frame: PatchFrame = None,
                          patch: Patch = None,
                          min_layers: int = 1) -> np.ndarray:
    """Recovered gradient at one edge midpoint.

    A custom ``frame`` may be supplied (e.g. a rotated parameter basis); the
    result does not depend on that choice.
    """
    if patch is None:
        if frame is None:
            patch = build_patch(mesh, edge_index, u_h,
                                min_layers=min_layers)
        else:
            patch = _patch_with_frame(mesh, edge_index, u_h, frame)
    return recover_from_patch(patch.frame, patch.fit_heights(),
                              patch.fit_samples())


def _patch_with_frame(mesh, edge_index, u_h, frame):
    base = build_patch(mesh, edge_index, u_h)
    rel = mesh.edge_midpoints[base.member_edges] - frame.origin
    params = np.stack([rel @ frame.phi1, rel @ frame.phi2], axis=1)
    svd, diam = _rank_svd(params)
    if svd is None:
        raise RankDeficient("supplied frame breaks the rank condition")
    return Patch(edge_index, frame, base.member_edges, params,
                 rel @ frame.phi3, base.samples, base.layers, diam, svd)


def recover_field(u_h: CRFunction, min_layers: int = 1) -> CRFunction:
    """Recovered gradient as a 3-vector CR function (one value per edge)."""
    mesh = u_h.mesh
    out = np.empty((mesh.n_edges, 3))
    failures = []
    for e in range(mesh.n_edges):
        try:
            patch = build_patch(mesh, e, u_h, min_layers=min_layers)
            out[e] = recover_from_patch(patch.frame, patch.fit_heights(),
                                        patch.fit_samples())
        except (PatchGrowthExceeded, RankDeficient, DegenerateFrame) as exc:
            failures.append((e, exc))
    if failures:
        ids = [e for e, _ in failures[:10]]
        raise PatchGrowthExceeded(
            f"recovery failed on {len(failures)} edge(s), first {ids}: "
            f"{failures[0][1]}")
    return CRFunction(mesh, out)
