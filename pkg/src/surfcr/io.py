"""Mesh and field file I/O: OFF, OBJ, legacy VTK and delimited exports.

Both mesh formats are ASCII and triangles-only; numbers are written with 17
significant digits so a save/load round trip reproduces coordinates
exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .exceptions import ParseError
from .fem import CRFunction
from .mesh import SurfaceMesh

__all__ = ["load_mesh", "save_mesh", "save_solution_csv",
           "save_gradient_csv", "save_vtk"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def load_mesh(path, fmt: str = None) -> SurfaceMesh:
    """Read a triangle mesh from an OFF or OBJ file.

    The format is inferred from the extension unless given explicitly.
    Raises ParseError with a line number on malformed input and NonManifold
    if the connectivity is not a closed surface.
    """
    fmt = _resolve_format(path, fmt)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if fmt == "off":
        verts, faces = _parse_off(lines)
    else:
        verts, faces = _parse_obj(lines)
    return SurfaceMesh(np.array(verts, float), np.array(faces, np.int64))


def save_mesh(mesh: SurfaceMesh, path, fmt: str = None) -> None:
    """Write a mesh as OFF or OBJ (inferred from the extension)."""
    fmt = _resolve_format(path, fmt)
    with open(path, "w", encoding="ascii") as fh:
        if fmt == "off":
            fh.write("OFF\n")
            fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
            for v in mesh.vertices:
                fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
            for t in mesh.triangles:
                fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
        else:
            for v in mesh.vertices:
                fh.write(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
            for t in mesh.triangles:
                fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def _resolve_format(path, fmt):
    if fmt is None:
        fmt = os.path.splitext(str(path))[1].lstrip(".").lower()
    fmt = fmt.lower()
    if fmt not in ("off", "obj"):
        raise ValueError(f"format must be off or obj, got {fmt!r}")
    return fmt


def _parse_off(lines):
    body = [(i + 1, ln.strip()) for i, ln in enumerate(lines)
            if ln.strip() and not ln.lstrip().startswith("#")]
    if not body or body[0][1].upper() != "OFF":
        raise ParseError("missing OFF header", line=1)
    try:
        counts = body[1][1].split()
        nv, nf = int(counts[0]), int(counts[1])
    except (IndexError, ValueError):
        raise ParseError("malformed counts line", line=body[1][0]) from None
    verts, faces = [], []
    rows = body[2:]
    if len(rows) < nv + nf:
        raise ParseError("file truncated", line=body[-1][0])
    for lineno, ln in rows[:nv]:
        parts = ln.split()
        if len(parts) < 3:
            raise ParseError("vertex needs 3 coordinates", line=lineno)
        try:
            verts.append([float(p) for p in parts[:3]])
        except ValueError:
            raise ParseError("bad vertex coordinate", line=lineno) from None
    for lineno, ln in rows[nv:nv + nf]:
        parts = ln.split()
        try:
            n = int(parts[0])
        except (IndexError, ValueError):
            raise ParseError("bad face line", line=lineno) from None
        if n != 3 or len(parts) < 4:
            raise ParseError("only triangular faces are supported",
                             line=lineno)
        try:
            faces.append([int(p) for p in parts[1:4]])
        except ValueError:
            raise ParseError("bad face index", line=lineno) from None
    return verts, faces


def _parse_obj(lines):
    verts, faces = [], []
    for lineno, raw in enumerate(lines, start=1):
        ln = raw.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError("vertex needs 3 coordinates", line=lineno)
            try:
                verts.append([float(p) for p in parts[1:4]])
            except ValueError:
                raise ParseError("bad vertex coordinate", line=lineno) from None
        elif parts[0] == "f":
            idx = parts[1:]
            if len(idx) != 3:
                raise ParseError("only triangular faces are supported",
                                 line=lineno)
            try:
                # tolerate v/vt/vn references; indices are 1-based
                faces.append([int(p.split("/")[0]) - 1 for p in idx])
            except ValueError:
                raise ParseError("bad face index", line=lineno) from None
        # other directives (vn, vt, o, g, s, usemtl, ...) are ignored
    if not faces:
        raise ParseError("no faces found", line=len(lines))
    return verts, faces


def save_solution_csv(u_h: CRFunction, path) -> None:
    """Per-edge export: edge_id,v0,v1,mx,my,mz,value."""
    mesh = u_h.mesh
    mids = mesh.edge_midpoints
    with open(path, "w", encoding="ascii") as fh:
        fh.write("edge_id,v0,v1,mx,my,mz,value\n")
        for e in range(mesh.n_edges):
            v0, v1 = mesh.edges[e]
            fh.write(f"{e},{v0},{v1},{_fmt(mids[e, 0])},{_fmt(mids[e, 1])},"
                     f"{_fmt(mids[e, 2])},{_fmt(u_h.dofs[e])}\n")


def save_gradient_csv(g_h: CRFunction, path) -> None:
    """Per-edge export of a 3-vector field: edge_id,gx,gy,gz."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("edge_id,gx,gy,gz\n")
        for e in range(g_h.mesh.n_edges):
            g = g_h.dofs[e]
            fh.write(f"{e},{_fmt(g[0])},{_fmt(g[1])},{_fmt(g[2])}\n")


def save_vtk(u_h: CRFunction, path, name: str = "field") -> None:
    """Legacy-VTK export of the per-face linear field.

    Vertices are replicated per face so the midpoint-continuous (but
    corner-discontinuous) reconstruction renders faithfully in external
    viewers.
    """
    mesh = u_h.mesh
    local = u_h.dofs[mesh.tri_edges]                    # (F, 3[, 3])
    # value at corner i is sum(dofs) - 2 dof_i (chi_j(corner i) = 1 - 2 d_ij)
    corner = local.sum(axis=1, keepdims=True) - 2.0 * local
    coords = mesh.corner_coords.reshape(-1, 3)
    nf = mesh.n_faces
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("surfcr per-face linear field\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {3 * nf} double\n")
        for p in coords:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        fh.write(f"CELLS {nf} {4 * nf}\n")
        for f in range(nf):
            fh.write(f"3 {3 * f} {3 * f + 1} {3 * f + 2}\n")
        fh.write(f"CELL_TYPES {nf}\n")
        fh.write("5\n" * nf)
        fh.write(f"POINT_DATA {3 * nf}\n")
        if u_h.components == 1:
            fh.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
            for val in corner.reshape(-1):
                fh.write(f"{_fmt(val)}\n")
        else:
            fh.write(f"VECTORS {name} double\n")
            for val in corner.reshape(-1, 3):
                fh.write(f"{_fmt(val[0])} {_fmt(val[1])} {_fmt(val[2])}\n")
