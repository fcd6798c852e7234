"""Experiment drivers: uniform convergence studies and adaptive traces.

These functions consume a validated ExperimentConfig, write delimited
tables (and figures) into the output directory and return the in-memory
results.  Runs are deterministic: a fixed configuration reproduces its
output files byte for byte.
"""

from __future__ import annotations

import os

import numpy as np

from .config import ExperimentConfig, dump_config
from .estimate import adapt_loop
from .exceptions import ConfigError, NoConvergence
from .fem import CRFunction, assemble
from .geometry import surface_by_name
from .io import (load_mesh, save_gradient_csv, save_mesh, save_solution_csv,
                 save_vtk)
from .mesh import SurfaceMesh, initial_surface_mesh, uniform_refine
from .norms import (ConvergenceRow, broken_h1_error, convergence_orders,
                    interpolant_gradient_error, l2_error,
                    recovered_gradient_error)
from .problems import problem_by_name
from .recovery import recover_field
from .solve import cg_solve

__all__ = ["run_convergence", "run_adaptive", "project_mesh",
           "adapted_initial_mesh", "convergence_csv", "adaptive_csv"]


def _setup(cfg: ExperimentConfig):
    surface = surface_by_name(cfg.get("surface", "name"))
    problem = problem_by_name(cfg.get("problem", "solution"), surface,
                              lam=cfg.get("problem", "lambda"),
                              rhs_constant=cfg.get("problem", "rhs_constant"))
    source = cfg.get("mesh", "source")
    if source == "file":
        mesh = load_mesh(cfg.get("mesh", "path"),
                         cfg.get("mesh", "format") or None)
    elif source == "adapted":
        mesh = adapted_initial_mesh(
            surface, problem, level=cfg.get("mesh", "level"),
            target_edges=cfg.get("mesh", "target_edges"),
            relax_sweeps=cfg.get("mesh", "relax_sweeps"),
            theta=cfg.get("refinement", "theta"))
    else:
        mesh = initial_surface_mesh(surface, cfg.get("mesh", "level"))
    return surface, problem, mesh


def adapted_initial_mesh(surface, problem, level: int = 2,
                         target_edges: int = 1000, relax_sweeps: int = 4,
                         theta: float = 0.5) -> SurfaceMesh:
    """Regenerate an initial mesh adapted to the surface and problem.

    An icosphere is draped over the surface and refined by the package's
    own solve-estimate-mark loop until it carries ``target_edges`` edges,
    which grades element sizes into the curved regions; a few gentle
    inverse-length relaxation sweeps then repair bisection slivers without
    disturbing the grading.  Useful when no externally generated mesh is
    available for a curved surface.
    """
    from .mesh import relax_surface_mesh
    mesh = initial_surface_mesh(surface, level)
    while mesh.n_edges < target_edges:
        result = adapt_loop(surface, mesh, problem, rounds=1, theta=theta)
        if result.failure:
            raise NoConvergence(
                f"adapted initial mesh: {result.failure}")
        mesh = result.final_mesh
    if relax_sweeps > 0:
        mesh = relax_surface_mesh(mesh, surface, rounds=relax_sweeps,
                                  omega=0.3, weighting="inverse_length")
    return mesh


def _prepare_out(cfg: ExperimentConfig, out_dir=None):
    out = out_dir or cfg.get("output", "directory")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "effective_config.ini"), "w",
              encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
    return out


def run_convergence(cfg: ExperimentConfig, out_dir=None, quiet=False):
    """Uniform-refinement convergence study; one table row per level."""
    if cfg.get("refinement", "mode") != "uniform":
        raise ConfigError("run_convergence requires [refinement] mode = uniform")
    if cfg.get("problem", "solution") not in ("xy", "spherical_singular"):
        raise ConfigError("a convergence table needs an exact solution")
    surface, problem, mesh = _setup(cfg)
    out = _prepare_out(cfg, out_dir)
    rounds = cfg.get("refinement", "rounds")
    projection = cfg.get("refinement", "projection")
    tol = cfg.get("solver", "tol")
    max_iter = cfg.get("solver", "max_iter") or None
    precond = cfg.get("solver", "preconditioner")
    mass_deg = cfg.get("quadrature", "mass_degree")
    load_deg = cfg.get("quadrature", "load_degree")
    norm_deg = cfg.get("quadrature", "norm_degree")
    min_layers = cfg.get("recovery", "min_layers")

    rows = []
    for level in range(rounds + 1):
        if level > 0:
            mesh = uniform_refine(mesh, surface, projection)
        system = assemble(mesh, surface, problem.f,
                          mass_degree=mass_deg, load_degree=load_deg)
        dofs, report = cg_solve(system, tol=tol, max_iter=max_iter,
                                preconditioner=precond)
        u_h = CRFunction(mesh, dofs)
        g_h = recover_field(u_h, min_layers=min_layers)
        row = ConvergenceRow(
            dof=mesh.n_edges,
            e=l2_error(problem.u, u_h, surface, norm_deg),
            De=broken_h1_error(problem.u, u_h, surface, norm_deg),
            Die=interpolant_gradient_error(problem.u, u_h, surface),
            Dre=recovered_gradient_error(problem.u, g_h, surface, norm_deg))
        rows.append(row)
        if not quiet:
            print(f"level {level}: dof {row.dof} e {row.e:.4e} "
                  f"De {row.De:.4e} Die {row.Die:.4e} Dre {row.Dre:.4e} "
                  f"(cg {report.iterations} it)")
        if cfg.get("output", "fields"):
            save_solution_csv(u_h, os.path.join(out, f"solution_{level}.csv"))
            save_gradient_csv(g_h, os.path.join(out, f"gradient_{level}.csv"))
            save_vtk(u_h, os.path.join(out, f"solution_{level}.vtk"),
                     name="u")
    convergence_orders(rows)
    csv_path = os.path.join(out, "convergence.csv")
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write(convergence_csv(rows))
    if cfg.get("output", "figures"):
        from .figures import convergence_figure
        convergence_figure(rows, os.path.join(out, "convergence.png"))
    return rows


def run_adaptive(cfg: ExperimentConfig, out_dir=None, quiet=False):
    """Adaptive solve-estimate-mark-refine trace.

    Error and effectivity columns appear only when the exact solution is
    known; indicator-only runs (solution = none) report round, DOF and eta.
    """
    if cfg.get("refinement", "mode") != "adaptive":
        raise ConfigError("run_adaptive requires [refinement] mode = adaptive")
    surface, problem, mesh = _setup(cfg)
    out = _prepare_out(cfg, out_dir)

    export_meshes = cfg.get("output", "meshes")

    def callback(row, round_mesh):
        if not quiet:
            msg = (f"round {row.round}: dof {row.dof} eta {row.eta:.4e} "
                   f"marked {row.n_marked}")
            if row.kappa is not None:
                msg += f" kappa {row.kappa:.3f}"
            print(msg)
        if export_meshes:
            save_mesh(round_mesh, os.path.join(out, f"mesh_{row.round:03d}.off"))

    result = adapt_loop(
        surface, mesh, problem,
        rounds=cfg.get("refinement", "rounds"),
        theta=cfg.get("refinement", "theta"),
        projection_mode=cfg.get("refinement", "projection"),
        solver_tol=cfg.get("solver", "tol"),
        callback=callback,
        min_layers=cfg.get("recovery", "min_layers"))
    csv_path = os.path.join(out, "adaptive.csv")
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write(adaptive_csv(result.rows, problem.has_exact))
    if cfg.get("output", "fields") and result.final_u is not None:
        save_solution_csv(result.final_u, os.path.join(out, "solution.csv"))
        save_gradient_csv(result.final_recovered,
                          os.path.join(out, "gradient.csv"))
        save_vtk(result.final_u, os.path.join(out, "solution.vtk"), name="u")
        save_vtk(result.final_recovered,
                 os.path.join(out, "gradient.vtk"), name="recovered_gradient")
    if cfg.get("output", "figures") and result.rows:
        from .figures import adaptive_figure, effectivity_figure
        adaptive_figure(result.rows, os.path.join(out, "adaptive.png"))
        if problem.has_exact:
            effectivity_figure(result.rows,
                               os.path.join(out, "effectivity.png"))
    if result.failure:
        raise NoConvergence(f"adaptive run aborted: {result.failure} "
                            f"(partial trace in {csv_path})")
    return result


def project_mesh(cfg: ExperimentConfig, out_dir=None, quiet=False):
    """Project every vertex of a mesh file onto the configured surface."""
    surface = surface_by_name(cfg.get("surface", "name"))
    if cfg.get("mesh", "source") != "file":
        raise ConfigError("project-mesh requires [mesh] source = file")
    mesh = load_mesh(cfg.get("mesh", "path"), cfg.get("mesh", "format") or None)
    out = _prepare_out(cfg, out_dir)
    mode = cfg.get("refinement", "projection")
    if mode == "none":
        projected = mesh
    else:
        try:
            if mode == "exact":
                verts = surface.closest_point(mesh.vertices)
            else:
                verts = surface.first_order_projection(mesh.vertices)
        except NoConvergence as exc:
            bad = ", ".join(str(i) for i in (exc.indices or [])[:20])
            raise NoConvergence(
                f"projection failed for vertex indices [{bad}]",
                indices=exc.indices) from None
        projected = SurfaceMesh(verts, mesh.triangles)
    path = os.path.join(out, cfg.get("output", "mesh_path"))
    save_mesh(projected, path)
    if not quiet:
        print(f"wrote {path} ({projected.n_vertices} vertices, "
              f"{projected.n_faces} faces)")
    return path


# -- delimited output --------------------------------------------------------

def _num(x, fmt="{:.10e}"):
    return "" if x is None else fmt.format(x)


def convergence_csv(rows) -> str:
    lines = ["dof,e,order_e,De,order_De,Die,order_Die,Dre,order_Dre"]
    for r in rows:
        lines.append(",".join([
            str(r.dof), _num(r.e), _num(r.order_e, "{:.4f}"),
            _num(r.De), _num(r.order_De, "{:.4f}"),
            _num(r.Die), _num(r.order_Die, "{:.4f}"),
            _num(r.Dre), _num(r.order_Dre, "{:.4f}")]))
    return "\n".join(lines) + "\n"


def adaptive_csv(rows, has_exact: bool) -> str:
    if has_exact:
        lines = ["round,dof,eta,e,De,Die,Dre,kappa"]
        for r in rows:
            lines.append(",".join([
                str(r.round), str(r.dof), _num(r.eta), _num(r.e),
                _num(r.De), _num(r.Die), _num(r.Dre),
                _num(r.kappa, "{:.6f}")]))
    else:
        lines = ["round,dof,eta"]
        for r in rows:
            lines.append(f"{r.round},{r.dof},{_num(r.eta)}")
    return "\n".join(lines) + "\n"
