"""Oriented closed triangulated surfaces with edge connectivity and refinement.

A ``SurfaceMesh`` is immutable after construction; refinement (uniform
quadrisection or newest-vertex bisection with conforming closure) returns a
new mesh.  Edges are stored in canonical (min, max) vertex order, sorted
lexicographically, and every edge carries its two incident faces with the
smaller face index playing the role of the plus side.
"""

from __future__ import annotations

import numpy as np

from .exceptions import (ClosureDiverged, DegenerateTriangle,
                         InconsistentOrientation, NonManifold)

__all__ = [
    "SurfaceMesh",
    "EdgeGeometry",
    "build_edges",
    "icosahedron",
    "icosphere",
    "uniform_refine",
    "bisect",
    "mesh_size",
    "initial_surface_mesh",
]


def build_edges(triangles, n_vertices=None):
    """Edge table with face adjacency for an oriented triangle list.

    Returns (edges, edge_tri, tri_edges): canonical (E, 2) vertex pairs
    sorted lexicographically, the (E, 2) incident faces ordered
    (smaller, larger), and the (F, 3) edge index opposite each local vertex.
    Raises NonManifold if some edge has != 2 faces and
    InconsistentOrientation if two faces traverse a shared edge the same way.
    """
    tris = np.asarray(triangles, np.int64)
    if tris.ndim != 2 or tris.shape[1] != 3:
        raise ValueError("triangles must be an (F, 3) index array")
    nf = tris.shape[0]
    if n_vertices is not None and tris.size and tris.max() >= n_vertices:
        raise IndexError("triangle list indexes a missing vertex")
    if np.any(tris < 0):
        raise IndexError("negative vertex index")
    # directed edge opposite local vertex i is (v[i+1], v[i+2])
    heads = tris[:, [1, 2, 0]].ravel()
    tails = tris[:, [2, 0, 1]].ravel()
    forward = heads < tails
    pairs = np.where(forward[:, None], np.stack([heads, tails], 1),
                     np.stack([tails, heads], 1))
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True,
                                       return_counts=True)
    if np.any(counts != 2):
        bad = edges[counts != 2][0]
        raise NonManifold(
            f"edge {tuple(bad)} has {counts[counts != 2][0]} incident faces")
    tri_edges = inverse.reshape(nf, 3)
    # each canonical edge must be traversed once forward and once backward
    orient_sum = np.zeros(len(edges), np.int64)
    np.add.at(orient_sum, inverse, np.where(forward, 1, -1))
    if np.any(orient_sum != 0):
        bad = edges[orient_sum != 0][0]
        raise InconsistentOrientation(
            f"faces on edge {tuple(bad)} share an orientation")
    face_of = np.repeat(np.arange(nf, dtype=np.int64), 3)
    order = np.lexsort((face_of, inverse))
    edge_tri = face_of[order].reshape(len(edges), 2)
    return edges, edge_tri, tri_edges


class SurfaceMesh:
    """Closed oriented triangle mesh in R^3 with edge-midpoint DOF sites."""

    def __init__(self, vertices, triangles, refinement_edge=None,
                 generation: int = 0, max_aspect: float = 50.0, check=True):
        self.vertices = np.ascontiguousarray(vertices, float)
        self.triangles = np.ascontiguousarray(triangles, np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be an (V, 3) array")
        self.edges, self.edge_tri, self.tri_edges = build_edges(
            self.triangles, len(self.vertices))
        self.generation = int(generation)
        self._cache = {}
        if check:
            areas = self.areas
            if np.any(areas <= 0.0) or np.any(~np.isfinite(areas)):
                raise DegenerateTriangle("mesh contains a zero-area triangle")
            ratio = float(self.shape_regularity().max())
            if ratio > max_aspect:
                raise DegenerateTriangle(
                    f"shape-regularity ratio {ratio:.1f} exceeds {max_aspect}")
        if refinement_edge is None:
            refinement_edge = compatible_labels(
                self.vertices, self.edges, self.edge_tri, self.tri_edges)
        self.refinement_edge = np.ascontiguousarray(refinement_edge, np.int64)
        if self.refinement_edge.shape != (len(self.triangles),):
            raise ValueError("refinement_edge must have one entry per face")

    # -- counts --------------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    # -- cached geometry -----------------------------------------------------

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def corner_coords(self):
        return self._cached("corners", lambda: self.vertices[self.triangles])

    @property
    def face_normals(self):
        def fn():
            v = self.corner_coords
            n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
            return n / np.linalg.norm(n, axis=1)[:, None]
        return self._cached("normals", fn)

    @property
    def areas(self):
        def fn():
            v = self.corner_coords
            n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
            return 0.5 * np.linalg.norm(n, axis=1)
        return self._cached("areas", fn)

    @property
    def edge_vectors(self):
        return self._cached(
            "evec", lambda: self.vertices[self.edges[:, 1]]
            - self.vertices[self.edges[:, 0]])

    @property
    def edge_lengths(self):
        return self._cached(
            "elen", lambda: np.linalg.norm(self.edge_vectors, axis=1))

    @property
    def edge_midpoints(self):
        return self._cached(
            "emid", lambda: 0.5 * (self.vertices[self.edges[:, 0]]
                                   + self.vertices[self.edges[:, 1]]))

    def shape_regularity(self):
        """Per-face circumradius / inradius."""
        v = self.corner_coords
        a = np.linalg.norm(v[:, 1] - v[:, 2], axis=1)
        b = np.linalg.norm(v[:, 2] - v[:, 0], axis=1)
        c = np.linalg.norm(v[:, 0] - v[:, 1], axis=1)
        area = self.areas
        s = 0.5 * (a + b + c)
        return a * b * c * s / (4.0 * area ** 2)

    def conormals(self):
        """(E, 2, 3) unit conormals: [:, 0] out of the plus face, [:, 1] minus.

        Each conormal is perpendicular to its edge, lies in its face's plane
        and points out of that face across the edge.
        """
        def fn():
            out = np.empty((self.n_edges, 2, 3))
            t = self.edge_vectors / self.edge_lengths[:, None]
            mid = self.edge_midpoints
            for side in (0, 1):
                faces = self.edge_tri[:, side]
                # opposite vertex: the face corner not on the edge
                tri = self.triangles[faces]
                on_edge = (tri[:, :, None] ==
                           self.edges[:, None, :]).any(axis=2)
                opp_local = np.argmin(on_edge, axis=1)
                opp = self.vertices[tri[np.arange(len(tri)), opp_local]]
                w = opp - mid
                inward = w - np.einsum("ij,ij->i", w, t)[:, None] * t
                inward /= np.linalg.norm(inward, axis=1)[:, None]
                out[:, side, :] = -inward
            return out
        return self._cached("conormals", fn)

    def edge_geometry(self, edge_index: int) -> "EdgeGeometry":
        co = self.conormals()
        tp, tm = self.edge_tri[edge_index]
        return EdgeGeometry(
            midpoint=self.edge_midpoints[edge_index],
            length=float(self.edge_lengths[edge_index]),
            conormal_plus=co[edge_index, 0],
            conormal_minus=co[edge_index, 1],
            face_normal_plus=self.face_normals[tp],
            face_normal_minus=self.face_normals[tm],
        )

    def signed_volume(self):
        """Positive for consistently outward-oriented closed meshes."""
        v = self.corner_coords
        return float(np.einsum("ij,ij->", v[:, 0],
                               np.cross(v[:, 1], v[:, 2])) / 6.0)


class EdgeGeometry:
    """Midpoint, length, conormals and face normals of one interior edge."""

    def __init__(self, midpoint, length, conormal_plus, conormal_minus,
                 face_normal_plus, face_normal_minus):
        self.midpoint = midpoint
        self.length = length
        self.conormal_plus = conormal_plus
        self.conormal_minus = conormal_minus
        self.face_normal_plus = face_normal_plus
        self.face_normal_minus = face_normal_minus


def mesh_size(mesh: SurfaceMesh) -> float:
    """Maximum triangle diameter (longest edge over all faces)."""
    return float(mesh.edge_lengths.max())


def compatible_labels(vertices, edges, edge_tri, tri_edges):
    """Initial refinement-edge labels: longest edge plus a compatibility pass.

    Edges are visited in a global order (length descending, canonical vertex
    pair as tie-break); an edge whose two faces are both unlabeled becomes
    the refinement edge of both, so most neighbor pairs bisect together.
    Leftover faces take their longest not-yet-ordered edge.  Deterministic.
    """
    verts = np.asarray(vertices, float)
    lengths = np.linalg.norm(verts[edges[:, 1]] - verts[edges[:, 0]], axis=1)
    order = np.lexsort((edges[:, 1], edges[:, 0], -lengths))
    rank = np.empty(len(edges), np.int64)
    rank[order] = np.arange(len(edges))
    labels = np.full(len(tri_edges), -1, np.int64)
    for e in order:
        f1, f2 = edge_tri[e]
        if labels[f1] < 0 and labels[f2] < 0:
            labels[f1] = int(np.argmax(tri_edges[f1] == e))
            labels[f2] = int(np.argmax(tri_edges[f2] == e))
    left = labels < 0
    if left.any():
        labels[left] = np.argmin(rank[tri_edges[left]], axis=1)
    return labels


# -- projection helpers ------------------------------------------------------

def _make_projector(surface, projection_mode):
    if projection_mode == "none" or surface is None:
        return lambda x: x
    if projection_mode == "exact":
        return lambda x: surface.closest_point(x, max_iter=500)
    if projection_mode == "first_order":
        return surface.first_order_projection
    raise ValueError(
        f"projection_mode must be exact|first_order|none, got "
        f"{projection_mode!r}")


# -- uniform refinement ------------------------------------------------------

def _quadrisect(mesh: SurfaceMesh, project):
    verts = mesh.vertices
    new_pts = project(mesh.edge_midpoints)
    vertices = np.vstack([verts, new_pts])
    mid = mesh.tri_edges + len(verts)   # midpoint vertex per (face, local edge)
    t = mesh.triangles
    children = np.empty((4 * len(t), 3), np.int64)
    children[0::4] = np.stack([t[:, 0], mid[:, 2], mid[:, 1]], 1)
    children[1::4] = np.stack([t[:, 1], mid[:, 0], mid[:, 2]], 1)
    children[2::4] = np.stack([t[:, 2], mid[:, 1], mid[:, 0]], 1)
    children[3::4] = mid
    return vertices, children


def uniform_refine(mesh: SurfaceMesh, surface=None,
                   projection_mode: str = "exact") -> SurfaceMesh:
    """Quadrisect every face; new vertices are projected onto the surface."""
    project = _make_projector(surface, projection_mode)
    vertices, children = _quadrisect(mesh, project)
    return SurfaceMesh(vertices, children, generation=mesh.generation + 1)


# -- icosphere ---------------------------------------------------------------

def icosahedron() -> SurfaceMesh:
    """Regular icosahedron with vertices on the unit sphere, outward faces."""
    p = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, p, 0), (1, p, 0), (-1, -p, 0), (1, -p, 0),
        (0, -1, p), (0, 1, p), (0, -1, -p), (0, 1, -p),
        (p, 0, -1), (p, 0, 1), (-p, 0, -1), (-p, 0, 1),
    ], float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array([
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ], np.int64)
    return SurfaceMesh(verts, faces)


def icosphere(level: int = 0) -> SurfaceMesh:
    """Icosahedron quadrisected ``level`` times with radial projection."""
    if level < 0:
        raise ValueError("level must be >= 0")
    mesh = icosahedron()

    def normalize(x):
        return x / np.linalg.norm(x, axis=-1)[..., None]

    for _ in range(level):
        vertices, children = _quadrisect(mesh, normalize)
        mesh = SurfaceMesh(vertices, children, generation=mesh.generation + 1)
    return mesh


def relax_surface_mesh(mesh: SurfaceMesh, surface, rounds: int = 30,
                       omega: float = 0.6,
                       weighting: str = "uniform") -> SurfaceMesh:
    """Tangential Laplacian smoothing with reprojection onto the surface.

    Each vertex moves a fraction of the way toward the (weighted) average
    of its edge neighbors, restricted to the tangent plane, and is then
    projected back onto the surface.  Topology is unchanged.  Uniform
    weights equidistribute triangle sizes; ``inverse_length`` weights act
    as a mild shape repair that preserves an existing size grading (use
    few sweeps: many inverse-length sweeps attract edge collapse).
    """
    if weighting not in ("uniform", "inverse_length"):
        raise ValueError("weighting must be uniform or inverse_length")
    verts = mesh.vertices.copy()
    e0, e1 = mesh.edges[:, 0], mesh.edges[:, 1]
    for _ in range(rounds):
        if weighting == "uniform":
            w = np.ones(len(e0))
        else:
            w = 1.0 / np.linalg.norm(verts[e1] - verts[e0], axis=1)
        wsum = np.zeros(len(verts))
        acc = np.zeros_like(verts)
        np.add.at(wsum, e0, w)
        np.add.at(wsum, e1, w)
        np.add.at(acc, e0, w[:, None] * verts[e1])
        np.add.at(acc, e1, w[:, None] * verts[e0])
        delta = acc / wsum[:, None] - verts
        n = surface.unit_normal(verts)
        delta -= np.einsum("ij,ij->i", delta, n)[:, None] * n
        verts = surface.closest_point(verts + omega * delta, max_iter=500)
    return SurfaceMesh(verts, mesh.triangles,
                       refinement_edge=None, generation=mesh.generation)


def initial_surface_mesh(surface, level: int = 2,
                         relax_rounds: int = 0) -> SurfaceMesh:
    """Icosphere draped over a star-shaped level-set surface.

    Vertices are moved along rays from the origin until phi = 0, which
    keeps them exactly on the surface and preserves the mesh topology.
    Optional tangential relaxation evens out the draping distortion (it
    also evens out element sizes, so it is off by default).  The sphere
    returns the icosphere unchanged.
    """
    from .geometry import radial_projection
    base = icosphere(level)
    if surface is None or surface.name == "sphere":
        return base
    verts = radial_projection(surface, base.vertices)
    mesh = SurfaceMesh(verts, base.triangles)
    if relax_rounds > 0:
        mesh = relax_surface_mesh(mesh, surface, rounds=relax_rounds)
    return mesh


# -- newest-vertex bisection -------------------------------------------------

def bisect(mesh: SurfaceMesh, marked, surface=None,
           projection_mode: str = "exact",
           max_closure_rounds: int = None) -> SurfaceMesh:
    """Bisect the marked faces through their refinement edges.

    The set of edges to bisect is closed under the rule "a face losing any
    edge must lose its refinement edge", which terminates in at most one
    pass per face and yields a conforming mesh (no hanging nodes).  Children
    take their refinement edge opposite the newly created vertex.
    """
    marked = np.asarray(sorted(set(int(m) for m in np.atleast_1d(marked))),
                        np.int64)
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.n_faces:
        raise IndexError("marked face index out of range")
    project = _make_projector(surface, projection_mode)

    ref_edge_of = mesh.tri_edges[np.arange(mesh.n_faces), mesh.refinement_edge]
    split = np.zeros(mesh.n_edges, bool)
    split[ref_edge_of[marked]] = True
    limit = mesh.n_edges + 2 if max_closure_rounds is None else max_closure_rounds
    for _ in range(limit):
        face_hit = split[mesh.tri_edges].any(axis=1)
        need = face_hit & ~split[ref_edge_of]
        if not need.any():
            break
        split[ref_edge_of[need]] = True
    else:
        raise ClosureDiverged("conforming closure did not stabilize")

    split_ids = np.flatnonzero(split)
    new_index = np.full(mesh.n_edges, -1, np.int64)
    new_index[split_ids] = mesh.n_vertices + np.arange(split_ids.size)
    new_pts = project(mesh.edge_midpoints[split_ids])
    vertices = np.vstack([mesh.vertices, new_pts])

    out_tris = []
    out_ref = []

    def emit(v0, v1, v2, ref_local):
        out_tris.append((v0, v1, v2))
        out_ref.append(ref_local)

    # local edge i of face (v0, v1, v2) is (v[i+1], v[i+2])
    tris = mesh.triangles
    te = mesh.tri_edges
    for f in range(mesh.n_faces):
        i = mesh.refinement_edge[f]
        e_ref = te[f, i]
        if not split[e_ref]:
            emit(*tris[f], i)
            continue
        p = tris[f, i]
        a = tris[f, (i + 1) % 3]
        b = tris[f, (i + 2) % 3]
        m = new_index[e_ref]
        e_bp = te[f, (i + 1) % 3]   # edge (b, p), opposite a
        e_pa = te[f, (i + 2) % 3]   # edge (p, a), opposite b
        # first child (a, m, p) has refinement edge (p, a); bisect once more
        # if (p, a) is split, keeping the edge opposite the newest vertex
        if split[e_pa]:
            q = new_index[e_pa]
            emit(p, q, m, 1)   # refinement edge (m, p)
            emit(q, a, m, 0)   # refinement edge (a, m)
        else:
            emit(a, m, p, 1)
        # second child (m, b, p) has refinement edge (b, p)
        if split[e_bp]:
            q = new_index[e_bp]
            emit(b, q, m, 1)   # refinement edge (m, b)
            emit(q, p, m, 0)   # refinement edge (p, m)
        else:
            emit(m, b, p, 0)

    return SurfaceMesh(vertices, np.array(out_tris, np.int64),
                       refinement_edge=np.array(out_ref, np.int64),
                       generation=mesh.generation + 1)
