"""Recovery-based error indicators, bulk marking and the adaptive loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import SurfcrError
from .fem import CRFunction, assemble, broken_gradients
from .mesh import SurfaceMesh, bisect
from .norms import (broken_h1_error, interpolant_gradient_error, l2_error,
                    recovered_gradient_error)
from .quadrature import triangle_rule
from .recovery import recover_field
from .solve import cg_solve

__all__ = ["IndicatorField", "indicators", "dorfler_mark",
           "AdaptiveRound", "AdaptiveResult", "adapt_loop"]


@dataclass
class IndicatorField:
    """Per-face indicator eta_T with eta_global^2 = sum eta_T^2."""

    eta_t: np.ndarray
    eta_global: float


def indicators(u_h: CRFunction, g_h: CRFunction,
               degree: int = 4) -> IndicatorField:
    """eta_T = || G_h u_h - grad u_h ||_L2(T) per face.

    The recovered field (per-face linear reconstruction) is flattened into
    each face's plane before differencing with the per-face constant broken
    gradient: both quantities then live in the same plane, which is what
    makes the estimator asymptotically exact.  Comparing in ambient
    coordinates instead would retain an O(h) out-of-plane component of the
    exact gradient and pin the effectivity index above one.
    """
    mesh = u_h.mesh
    rule = triangle_rule(degree)
    vals = g_h.face_values(rule)                       # (F, nq, 3)
    nh = mesh.face_normals
    vals = vals - np.einsum("fqk,fk->fq", vals, nh)[..., None] * nh[:, None, :]
    diff = vals - broken_gradients(u_h)[:, None, :]
    sq = np.einsum("f,q,fqk,fqk->f", mesh.areas, rule.weights, diff, diff)
    eta_t = np.sqrt(sq)
    return IndicatorField(eta_t, float(np.sqrt(sq.sum())))


def dorfler_mark(ind: IndicatorField, theta: float) -> np.ndarray:
    """Bulk marking: minimal descending-indicator prefix holding theta^2
    of the total squared indicator.  Ties break on the triangle index."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    eta2 = ind.eta_t ** 2
    order = np.argsort(-eta2, kind="stable")
    csum = np.cumsum(eta2[order])
    target = theta ** 2 * ind.eta_global ** 2
    if ind.eta_global == 0.0:
        return np.empty(0, np.int64)
    count = int(np.searchsorted(csum, target * (1.0 - 1e-13)) + 1)
    count = min(count, int((eta2 > 0).sum()))
    return np.sort(order[:count])


@dataclass
class AdaptiveRound:
    round: int
    dof: int
    eta: float
    e: float = None
    De: float = None
    Die: float = None
    Dre: float = None
    kappa: float = None
    n_marked: int = 0


@dataclass
class AdaptiveResult:
    rows: list = field(default_factory=list)
    final_mesh: SurfaceMesh = None
    final_u: CRFunction = None
    final_recovered: CRFunction = None
    final_indicators: IndicatorField = None
    final_marked: np.ndarray = None
    meshes: list = None
    indicator_history: list = None
    failure: str = None


def adapt_loop(surface, mesh: SurfaceMesh, problem, rounds: int,
               theta: float = 0.5, projection_mode: str = "exact",
               solver_tol: float = 1e-10, keep_meshes: bool = False,
               callback=None, min_layers: int = 1) -> AdaptiveResult:
    """Solve-estimate-mark-refine driver.

    Performs ``rounds`` bisection steps; every visited mesh (including the
    final one) contributes a trace row holding DOF count, global indicator,
    errors and effectivity index when the exact solution is known, and the
    size of the Dorfler set.  On solver or refinement failure the partial
    trace is returned with ``failure`` set.
    """
    result = AdaptiveResult(meshes=[] if keep_meshes else None,
                            indicator_history=[] if keep_meshes else None)
    for r in range(rounds + 1):
        try:
            system = assemble(mesh, surface, problem.f)
            dofs, _ = cg_solve(system, tol=solver_tol)
            u_h = CRFunction(mesh, dofs)
            g_h = recover_field(u_h, min_layers=min_layers)
            ind = indicators(u_h, g_h)
            marked = dorfler_mark(ind, theta)
        except SurfcrError as exc:
            result.failure = f"round {r}: {exc}"
            break
        row = AdaptiveRound(round=r, dof=mesh.n_edges, eta=ind.eta_global,
                            n_marked=int(marked.size))
        if problem.has_exact:
            row.e = l2_error(problem.u, u_h, surface)
            row.De = broken_h1_error(problem.u, u_h, surface)
            row.Die = interpolant_gradient_error(problem.u, u_h, surface)
            row.Dre = recovered_gradient_error(problem.u, g_h, surface)
            row.kappa = ind.eta_global / row.De if row.De > 0 else None
        result.rows.append(row)
        if keep_meshes:
            result.meshes.append(mesh)
            result.indicator_history.append(ind)
        result.final_mesh = mesh
        result.final_u = u_h
        result.final_recovered = g_h
        result.final_indicators = ind
        result.final_marked = marked
        if callback is not None:
            callback(row, mesh)
        if r == rounds:
            break
        try:
            mesh = bisect(mesh, marked, surface, projection_mode)
        except SurfcrError as exc:
            result.failure = f"refine after round {r}: {exc}"
            break
    return result
