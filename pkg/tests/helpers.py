"""Shared mesh and surface fixtures for the test suite."""

import numpy as np

from surfcr.geometry import AmbientScalarField, LevelSetSurface
from surfcr.mesh import SurfaceMesh


def pillowcase(vertices, front_faces, max_aspect=np.inf):
    """Close an open planar patch by gluing a reversed copy along its rim."""
    vertices = np.asarray(vertices, float)
    front = np.asarray(front_faces, np.int64)
    pairs = {}
    for tri in front:
        for k in range(3):
            e = tuple(sorted((tri[k], tri[(k + 1) % 3])))
            pairs[e] = pairs.get(e, 0) + 1
    rim = {v for e, c in pairs.items() if c == 1 for v in e}
    clone = {}
    verts = list(map(tuple, vertices))
    for v in range(len(vertices)):
        if v in rim:
            clone[v] = v
        else:
            clone[v] = len(verts)
            verts.append(tuple(vertices[v]))
    back = np.array([[clone[c], clone[b], clone[a]] for a, b, c in front])
    return SurfaceMesh(np.array(verts), np.vstack([front, back]),
                       max_aspect=max_aspect, check=False)


def planar_grid_lines(xs, ys):
    """Pillowcased planar grid over the given coordinate lines.

    Two corner cells use the flipped diagonal so that no interior edge
    connects two rim vertices (the gluing would be non-manifold otherwise).
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    nx, ny = len(xs) - 1, len(ys) - 1
    verts = np.array([(x, y, 0.0) for y in ys for x in xs])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            if (i, j) in {(nx - 1, 0), (0, ny - 1)}:
                tris += [(a, b, d), (b, c, d)]
            else:
                tris += [(a, b, c), (a, c, d)]
    return pillowcase(verts, np.array(tris))


def planar_grid(nx, ny, sx=1.0, sy=1.0):
    return planar_grid_lines(np.linspace(0.0, sx, nx + 1),
                             np.linspace(0.0, sy, ny + 1))


def interior_front_edges(mesh):
    """Edges whose two faces are coplanar with upward normals."""
    nh = mesh.face_normals
    out = []
    for e in range(mesh.n_edges):
        tp, tm = mesh.edge_tri[e]
        if nh[tp] @ nh[tm] > 0.99 and nh[tp, 2] > 0:
            out.append(e)
    return out


def plane_surface():
    """Level set z = 0 (used to exercise norms over planar meshes)."""
    def phi(x):
        return x[..., 2]

    def grad(x):
        g = np.zeros_like(x)
        g[..., 2] = 1.0
        return g

    def hess(x):
        return np.zeros(x.shape[:-1] + (3, 3))

    return LevelSetSurface("plane", phi, grad, hess, bounding_radius=10.0)


def quadratic_field():
    def val(x):
        return (0.5 + 1.5 * x[..., 0] - 2.0 * x[..., 1]
                + 0.8 * x[..., 0] ** 2 + 0.3 * x[..., 0] * x[..., 1]
                - 0.6 * x[..., 1] ** 2)

    def grad(x):
        g = np.zeros_like(x)
        g[..., 0] = 1.5 + 1.6 * x[..., 0] + 0.3 * x[..., 1]
        g[..., 1] = -2.0 + 0.3 * x[..., 0] - 1.2 * x[..., 1]
        return g

    def hess(x):
        h = np.zeros(x.shape[:-1] + (3, 3))
        h[..., 0, 0] = 1.6
        h[..., 0, 1] = h[..., 1, 0] = 0.3
        h[..., 1, 1] = -1.2
        return h

    return AmbientScalarField(val, grad, hess, name="quadratic")
