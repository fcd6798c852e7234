"""Preconditioned conjugate gradients for the assembled SPD systems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import IndefiniteMatrix, NoConvergence

__all__ = ["SolveReport", "cg_solve"]


@dataclass
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool
    residual_trace: list = field(default_factory=list)


def cg_solve(system, tol: float = 1e-10, max_iter: int = None,
             preconditioner: str = "jacobi", raise_on_failure: bool = True):
    """Solve the assembled system by (Jacobi-)preconditioned CG.

    Returns (dofs, SolveReport); the report's residual_trace holds the
    relative preconditioned residual norm per iteration.  A direction of
    non-positive curvature raises IndefiniteMatrix (an assembly bug); on
    stagnation the best iterate is returned inside the NoConvergence error
    unless ``raise_on_failure`` is false.
    """
    a = system.matrix
    b = np.asarray(system.rhs, float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    if preconditioner == "jacobi":
        d = a.diagonal()
        if np.any(d <= 0):
            raise IndefiniteMatrix("non-positive diagonal entry")
        minv = 1.0 / d
    elif preconditioner == "none":
        minv = np.ones(n)
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")

    x = np.zeros(n)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, SolveReport(0, 0.0, True, [0.0])
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    scale = np.sqrt(float(b @ (minv * b)))
    trace = [np.sqrt(rz) / scale]
    it = 0
    while it < max_iter:
        q = a @ p
        pq = float(p @ q)
        if pq <= 0.0:
            raise IndefiniteMatrix(
                f"non-positive curvature at iteration {it}")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        it += 1
        if np.linalg.norm(r) / bnorm <= tol:
            trace.append(np.sqrt(float(r @ (minv * r))) / scale)
            return x, SolveReport(it, float(np.linalg.norm(r) / bnorm),
                                  True, trace)
        z = minv * r
        rz_new = float(r @ z)
        trace.append(np.sqrt(rz_new) / scale)
        p = z + (rz_new / rz) * p
        rz = rz_new
    rel = float(np.linalg.norm(b - a @ x) / bnorm)
    report = SolveReport(it, rel, False, trace)
    if raise_on_failure:
        err = NoConvergence(
            f"CG stalled at relative residual {rel:.3e} after {it} iterations")
        err.best = (x, report)
        raise err
    return x, report
