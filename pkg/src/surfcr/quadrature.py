"""Fixed-degree quadrature rules on planar triangles and straight edges.

Triangle rules are stored in barycentric coordinates with weights summing
to one, so integrals read ``area * sum(w_q * f(x_q))``.  Edge rules live on
the unit interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "TriangleRule",
    "EdgeRule",
    "triangle_rule",
    "edge_rule",
    "integrate_face",
    "integrate_edge",
]


@dataclass(frozen=True)
class TriangleRule:
    """Quadrature rule on the reference triangle, barycentric points."""

    points: np.ndarray   # (nq, 3) barycentric triples
    weights: np.ndarray  # (nq,), positive, sum to 1
    exact_degree: int


@dataclass(frozen=True)
class EdgeRule:
    """Quadrature rule on [0, 1]."""

    points: np.ndarray   # (nq,) parameters in [0, 1]
    weights: np.ndarray  # (nq,), positive, sum to 1
    exact_degree: int


def _perm3(a, b):
    return [(a, b, b), (b, a, b), (b, b, a)]


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> TriangleRule:
    """Smallest shipped rule exact for polynomials up to ``degree``.

    Degrees 1, 2 and 4 use the classic interior-point rules; higher degrees
    fall back to a collapsed Gauss product rule (positive weights for any
    degree).
    """
    if degree <= 1:
        pts = [(1 / 3, 1 / 3, 1 / 3)]
        wts = [1.0]
        deg = 1
    elif degree == 2:
        pts = _perm3(2 / 3, 1 / 6)
        wts = [1 / 3] * 3
        deg = 2
    elif degree <= 4:
        a1, w1 = 0.816847572980459, 0.109951743655322
        a2, w2 = 0.108103018168070, 0.223381589678011
        pts = _perm3(a1, (1 - a1) / 2) + _perm3(a2, (1 - a2) / 2)
        wts = [w1] * 3 + [w2] * 3
        deg = 4
    else:
        return _collapsed_gauss(degree)
    return TriangleRule(np.array(pts, float), np.array(wts, float), deg)


def _collapsed_gauss(degree: int) -> TriangleRule:
    # Duffy map x = u, y = v(1-u); a degree-d integrand becomes degree
    # <= d+1 in u and <= d in v, so n-point Gauss with 2n-1 >= d+1 is exact.
    n = (degree + 3) // 2
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    uu, vv = np.meshgrid(t, t, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    x = uu.ravel()
    y = (vv * (1.0 - uu)).ravel()
    # weight includes the Duffy Jacobian (1-u); normalize to unit total
    wq = (wu * wv * (1.0 - uu)).ravel() * 2.0
    lam = np.stack([1.0 - x - y, x, y], axis=1)
    return TriangleRule(lam, wq, degree)


@lru_cache(maxsize=None)
def edge_rule(npoints: int = 2) -> EdgeRule:
    """Gauss-Legendre rule on [0, 1]; one point is the midpoint rule."""
    t, w = np.polynomial.legendre.leggauss(npoints)
    return EdgeRule(0.5 * (t + 1.0), 0.5 * w, 2 * npoints - 1)


def integrate_face(f, vertices, rule: TriangleRule) -> float:
    """Integrate ``f`` over one planar triangle embedded in 3-space.

    ``f`` maps an (nq, 3) array of points to (nq,) values.
    """
    v = np.asarray(vertices, float)
    area = 0.5 * np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0]))
    x = rule.points @ v
    return float(area * np.dot(rule.weights, np.asarray(f(x), float)))


def integrate_edge(f, endpoints, rule: EdgeRule) -> float:
    """Integrate ``f`` over the segment between two points in 3-space."""
    a, b = (np.asarray(p, float) for p in endpoints)
    length = float(np.linalg.norm(b - a))
    x = a[None, :] + rule.points[:, None] * (b - a)[None, :]
    return float(length * np.dot(rule.weights, np.asarray(f(x), float)))
