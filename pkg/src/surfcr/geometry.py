"""Analytic level-set surfaces and differential-geometry operators.

A closed surface is described by a smooth level-set function phi together
with its gradient and Hessian; the unit normal, closest-point projection
and the surface Laplacian of an ambient field all derive from those three
evaluators.  Every query is vectorized over a trailing (..., 3) axis of
points and is a pure function of the immutable surface description.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateGradient, NoConvergence, NotOnSurface

__all__ = [
    "LevelSetSurface",
    "AmbientScalarField",
    "sphere",
    "dziuk_surface",
    "star_surface",
    "surface_by_name",
    "BUILTIN_SURFACES",
    "laplace_beltrami_ambient",
    "manufactured_rhs",
    "radial_projection",
    "field_xy",
    "constant_field",
    "spherical_singular_field",
    "spherical_singular_rhs",
]

_REG_EPS = 1e-12


def _norm(v):
    return np.sqrt(np.einsum("...i,...i->...", v, v))


class LevelSetSurface:
    """Closed surface { phi = 0 } given by analytic phi, grad phi, hess phi.

    The evaluators must accept arrays of shape (..., 3) and return shapes
    (...,), (..., 3) and (..., 3, 3) respectively.  ``bounding_radius`` is a
    radius guaranteed to enclose the surface (used by radial projection and
    sanity checks).
    """

    def __init__(self, name, phi, grad_phi, hess_phi, bounding_radius,
                 reg_eps: float = _REG_EPS):
        self.name = name
        self._phi = phi
        self._grad = grad_phi
        self._hess = hess_phi
        self.bounding_radius = float(bounding_radius)
        self.reg_eps = float(reg_eps)

    def __repr__(self):
        return f"LevelSetSurface({self.name!r})"

    def phi(self, x):
        return np.asarray(self._phi(np.asarray(x, float)), float)

    def grad_phi(self, x):
        return np.asarray(self._grad(np.asarray(x, float)), float)

    def hess_phi(self, x):
        return np.asarray(self._hess(np.asarray(x, float)), float)

    # -- derived queries ----------------------------------------------------

    def unit_normal(self, x):
        """Unit normal pointing in the direction of increasing phi."""
        g = self.grad_phi(x)
        gn = _norm(g)
        if np.any(gn < self.reg_eps):
            raise DegenerateGradient(
                f"|grad phi| < {self.reg_eps:g} on surface '{self.name}'")
        return g / gn[..., None]

    def first_order_projection(self, x):
        """Single Newton step x - phi * grad phi / |grad phi|^2."""
        x = np.asarray(x, float)
        g = self.grad_phi(x)
        g2 = np.einsum("...i,...i->...", g, g)
        if np.any(g2 < self.reg_eps ** 2):
            raise DegenerateGradient(
                f"|grad phi| < {self.reg_eps:g} on surface '{self.name}'")
        return x - (self.phi(x) / g2)[..., None] * g

    def closest_point(self, x, tol: float = 1e-12, max_iter: int = 50):
        """Closest-point projection onto the surface.

        A few sweeps alternating Newton steps along grad phi with tangential
        corrections supply a good starting point; stragglers (points deep in
        strongly curved regions, where alternation contracts slowly) are
        finished by full Newton on the optimality system of the constrained
        problem.  The returned p satisfies |phi(p)| <= tol and x - p is
        parallel to the normal at p up to tol * (1 + |x - p|).
        """
        x = np.asarray(x, float)
        single = x.ndim == 1
        y = x.reshape(-1, 3).astype(float)
        p = y.copy()
        n_pts = p.shape[0]
        active = np.ones(n_pts, bool)
        sweeps = min(12, max_iter)
        for it in range(max_iter):
            p[active] = self._newton_to_surface(p[active], tol, max_iter)
            n = self.unit_normal(p[active])
            d = y[active] - p[active]
            tang = d - np.einsum("...i,...i->...", d, n)[..., None] * n
            resid = _norm(tang)
            ok = resid <= tol * (1.0 + _norm(d))
            idx = np.flatnonzero(active)
            active[idx[ok]] = False
            if not active.any():
                break
            if it >= sweeps:
                break
            p[idx[~ok]] += tang[~ok]
        if active.any():
            p[active] = self._kkt_newton(y[active], p[active], tol,
                                         max_iter, active)
        return p[0] if single else p.reshape(x.shape)

    def _kkt_newton(self, y, p, tol, max_iter, active_mask):
        """Damped Newton on [p - y + lam grad phi; phi] = 0, vectorized."""
        k = p.shape[0]
        g = self.grad_phi(p)
        g2 = np.einsum("ij,ij->i", g, g)
        lam = np.einsum("ij,ij->i", y - p, g) / g2
        eye = np.eye(3)

        def residual(pp, ll):
            gg = self.grad_phi(pp)
            return np.hstack([pp - y + ll[:, None] * gg,
                              self.phi(pp)[:, None]])

        f = residual(p, lam)
        fn = np.linalg.norm(f, axis=1)
        for _ in range(max_iter):
            gg = self.grad_phi(p)
            hh = self.hess_phi(p)
            jac = np.empty((k, 4, 4))
            jac[:, :3, :3] = eye + lam[:, None, None] * hh
            jac[:, :3, 3] = gg
            jac[:, 3, :3] = gg
            jac[:, 3, 3] = 0.0
            try:
                step = np.linalg.solve(jac, f[..., None])[..., 0]
            except np.linalg.LinAlgError:
                break
            t = np.ones(k)
            for _ in range(30):
                p_try = p - t[:, None] * step[:, :3]
                lam_try = lam - t * step[:, 3]
                f_try = residual(p_try, lam_try)
                fn_try = np.linalg.norm(f_try, axis=1)
                worse = fn_try > (1.0 - 0.25 * t) * fn
                if not worse.any():
                    break
                t[worse] *= 0.5
            p = p - t[:, None] * step[:, :3]
            lam = lam - t * step[:, 3]
            f = residual(p, lam)
            fn = np.linalg.norm(f, axis=1)
            d = y - p
            n = self.unit_normal(p)
            tang = d - np.einsum("ij,ij->i", d, n)[:, None] * n
            done = (np.abs(self.phi(p)) <= tol) & (
                _norm(tang) <= tol * (1.0 + _norm(d)))
            if done.all():
                return p
        bad = np.flatnonzero(active_mask)
        d = y - p
        n = self.unit_normal(p)
        tang = d - np.einsum("ij,ij->i", d, n)[:, None] * n
        done = (np.abs(self.phi(p)) <= tol) & (
            _norm(tang) <= tol * (1.0 + _norm(d)))
        if done.all():
            return p
        raise NoConvergence(
            f"closest_point: {int((~done).sum())} point(s) not converged "
            f"on '{self.name}'", indices=bad[~done])

    def _newton_to_surface(self, p, tol, max_iter):
        p = p.copy()
        for _ in range(max_iter):
            ph = self.phi(p)
            if np.all(np.abs(ph) <= tol):
                break
            g = self.grad_phi(p)
            g2 = np.einsum("...i,...i->...", g, g)
            if np.any(g2 < self.reg_eps ** 2):
                raise DegenerateGradient(
                    f"|grad phi| < {self.reg_eps:g} during projection "
                    f"on '{self.name}'")
            p -= (ph / g2)[..., None] * g
        else:
            raise NoConvergence(
                f"Newton projection stalled on '{self.name}'")
        return p

    def div_normal(self, x):
        """Divergence of the unit normal field, (lap phi - n.H.n)/|grad|."""
        g = self.grad_phi(x)
        gn = _norm(g)
        if np.any(gn < self.reg_eps):
            raise DegenerateGradient(
                f"|grad phi| < {self.reg_eps:g} on surface '{self.name}'")
        n = g / gn[..., None]
        h = self.hess_phi(x)
        lap = np.trace(h, axis1=-2, axis2=-1)
        nhn = np.einsum("...i,...ij,...j->...", n, h, n)
        return (lap - nhn) / gn


class AmbientScalarField:
    """Scalar field on R^3 with analytic gradient and Hessian.

    Used for manufactured solutions: the field restricted to the surface is
    the exact solution, and the ambient derivatives feed the surface
    Laplacian identity.
    """

    def __init__(self, value, gradient, hessian=None, name="field"):
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.name = name

    def value(self, x):
        return np.asarray(self._value(np.asarray(x, float)), float)

    def gradient(self, x):
        return np.asarray(self._gradient(np.asarray(x, float)), float)

    def hessian(self, x):
        if self._hessian is None:
            raise ValueError(f"field '{self.name}' carries no Hessian")
        return np.asarray(self._hessian(np.asarray(x, float)), float)

    def tangential_gradient(self, surface: LevelSetSurface, x):
        """P grad u with P = Id - n (x) n, at points on (or near) the surface."""
        g = self.gradient(x)
        n = surface.unit_normal(x)
        return g - np.einsum("...i,...i->...", g, n)[..., None] * n


# -- surface Laplacian and manufactured problems ----------------------------

def laplace_beltrami_ambient(surface: LevelSetSurface, u: AmbientScalarField,
                             x, on_surface_tol: float = 1e-8):
    """Surface Laplacian of an ambient field at points on the surface.

    Evaluates lap u - (grad u . n)(div n) - n^T hess(u) n; the value is
    independent of how u extends off the surface.
    """
    x = np.asarray(x, float)
    if np.any(np.abs(surface.phi(x)) > on_surface_tol):
        raise NotOnSurface(
            f"|phi| > {on_surface_tol:g} at a query point on '{surface.name}'")
    n = surface.unit_normal(x)
    g = u.gradient(x)
    h = u.hessian(x)
    lap = np.trace(h, axis1=-2, axis2=-1)
    gn = np.einsum("...i,...i->...", g, n)
    nhn = np.einsum("...i,...ij,...j->...", n, h, n)
    return lap - gn * surface.div_normal(x) - nhn


def manufactured_rhs(surface: LevelSetSurface, u: AmbientScalarField):
    """Right-hand side f with -lap_G u + u = f, extended to the tube.

    The returned evaluator projects its argument onto the surface first, so
    it is well defined at quadrature points of the discrete surface.
    """

    def f(x):
        p = surface.closest_point(x)
        return -laplace_beltrami_ambient(surface, u, p) + u.value(p)

    return f


def radial_projection(surface: LevelSetSurface, x, tol: float = 1e-14):
    """Map points to the surface along rays from the origin.

    Requires phi(0) < 0 < phi(R x/|x|) for R = bounding_radius (the origin
    lies inside).  Used to drape a sphere mesh over a star-shaped surface.
    """
    x = np.asarray(x, float)
    single = x.ndim == 1
    d = np.atleast_2d(x).astype(float)
    d = d / _norm(d)[..., None]
    lo = np.full(d.shape[0], 1e-9)
    hi = np.full(d.shape[0], surface.bounding_radius)
    flo = surface.phi(lo[:, None] * d)
    fhi = surface.phi(hi[:, None] * d)
    if np.any(flo >= 0) or np.any(fhi <= 0):
        raise NoConvergence(
            f"radial projection: no sign change along some rays on "
            f"'{surface.name}'")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = surface.phi(mid[:, None] * d)
        neg = fm < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    r = 0.5 * (lo + hi)
    p = r[:, None] * d
    return p[0] if single else p.reshape(x.shape)


# -- built-in surfaces -------------------------------------------------------

def sphere() -> LevelSetSurface:
    """Unit sphere, phi = |x|^2 - 1."""
    def phi(x):
        return np.einsum("...i,...i->...", x, x) - 1.0

    def grad(x):
        return 2.0 * x

    def hess(x):
        h = np.zeros(x.shape[:-1] + (3, 3))
        h[..., 0, 0] = h[..., 1, 1] = h[..., 2, 2] = 2.0
        return h

    return LevelSetSurface("sphere", phi, grad, hess, bounding_radius=2.0)


def dziuk_surface() -> LevelSetSurface:
    """phi = (x1 - x3^2)^2 + x2^2 + x3^2 - 1."""
    def phi(x):
        w = x[..., 0] - x[..., 2] ** 2
        return w ** 2 + x[..., 1] ** 2 + x[..., 2] ** 2 - 1.0

    def grad(x):
        w = x[..., 0] - x[..., 2] ** 2
        g = np.empty_like(x)
        g[..., 0] = 2.0 * w
        g[..., 1] = 2.0 * x[..., 1]
        g[..., 2] = -4.0 * x[..., 2] * w + 2.0 * x[..., 2]
        return g

    def hess(x):
        w = x[..., 0] - x[..., 2] ** 2
        z = x[..., 2]
        h = np.zeros(x.shape[:-1] + (3, 3))
        h[..., 0, 0] = 2.0
        h[..., 0, 2] = h[..., 2, 0] = -4.0 * z
        h[..., 1, 1] = 2.0
        h[..., 2, 2] = -4.0 * w + 8.0 * z ** 2 + 2.0
        return h

    return LevelSetSurface("dziuk", phi, grad, hess, bounding_radius=2.0)


def star_surface() -> LevelSetSurface:
    """phi = 400(x1^2 x2^2 + x2^2 x3^2 + x1^2 x3^2) - (1 - |x|^2)^3 - 40."""
    def phi(x):
        a, b, c = x[..., 0], x[..., 1], x[..., 2]
        q = a * a * b * b + b * b * c * c + a * a * c * c
        s = 1.0 - (a * a + b * b + c * c)
        return 400.0 * q - s ** 3 - 40.0

    def grad(x):
        a, b, c = x[..., 0], x[..., 1], x[..., 2]
        s = 1.0 - (a * a + b * b + c * c)
        g = np.empty_like(x)
        g[..., 0] = 800.0 * a * (b * b + c * c) + 6.0 * a * s ** 2
        g[..., 1] = 800.0 * b * (a * a + c * c) + 6.0 * b * s ** 2
        g[..., 2] = 800.0 * c * (a * a + b * b) + 6.0 * c * s ** 2
        return g

    def hess(x):
        a, b, c = x[..., 0], x[..., 1], x[..., 2]
        s = 1.0 - (a * a + b * b + c * c)
        h = np.zeros(x.shape[:-1] + (3, 3))
        h[..., 0, 0] = 800.0 * (b * b + c * c) + 6.0 * s ** 2 - 24.0 * a * a * s
        h[..., 1, 1] = 800.0 * (a * a + c * c) + 6.0 * s ** 2 - 24.0 * b * b * s
        h[..., 2, 2] = 800.0 * (a * a + b * b) + 6.0 * s ** 2 - 24.0 * c * c * s
        h[..., 0, 1] = h[..., 1, 0] = 1600.0 * a * b - 24.0 * a * b * s
        h[..., 0, 2] = h[..., 2, 0] = 1600.0 * a * c - 24.0 * a * c * s
        h[..., 1, 2] = h[..., 2, 1] = 1600.0 * b * c - 24.0 * b * c * s
        return h

    return LevelSetSurface("star", phi, grad, hess, bounding_radius=2.6)


BUILTIN_SURFACES = {
    "sphere": sphere,
    "dziuk": dziuk_surface,
    "star": star_surface,
}


def surface_by_name(name: str) -> LevelSetSurface:
    try:
        return BUILTIN_SURFACES[name]()
    except KeyError:
        raise KeyError(
            f"unknown surface '{name}'; built-ins: "
            f"{sorted(BUILTIN_SURFACES)}") from None


# -- built-in fields ---------------------------------------------------------

def field_xy() -> AmbientScalarField:
    """u(x) = x1 x2."""
    def val(x):
        return x[..., 0] * x[..., 1]

    def grad(x):
        g = np.zeros_like(x)
        g[..., 0] = x[..., 1]
        g[..., 1] = x[..., 0]
        return g

    def hess(x):
        h = np.zeros(x.shape[:-1] + (3, 3))
        h[..., 0, 1] = h[..., 1, 0] = 1.0
        return h

    return AmbientScalarField(val, grad, hess, name="xy")


def constant_field(c: float = 1.0) -> AmbientScalarField:
    def val(x):
        return np.full(x.shape[:-1], float(c))

    def grad(x):
        return np.zeros_like(x)

    def hess(x):
        return np.zeros(x.shape[:-1] + (3, 3))

    return AmbientScalarField(val, grad, hess, name=f"constant({c})")


def spherical_singular_field(lam: float) -> AmbientScalarField:
    """u = sin(theta)^lam sin(phi) on the unit sphere (polar angle theta).

    Extended off the sphere as y (x^2 + y^2)^((lam-1)/2); for lam < 1 the
    function has point singularities on the polar axis, where value,
    gradient and Hessian evaluate to 0 by convention.
    """
    s = (lam - 1.0) / 2.0

    def _mask(x):
        return x[..., 0] ** 2 + x[..., 1] ** 2

    def val(x):
        r2 = _mask(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = x[..., 1] * r2 ** s
        return np.where(r2 > 0.0, v, 0.0)

    def grad(x):
        a, b = x[..., 0], x[..., 1]
        r2 = _mask(x)
        g = np.zeros_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            g[..., 0] = np.where(r2 > 0.0, 2.0 * s * a * b * r2 ** (s - 1.0), 0.0)
            g[..., 1] = np.where(
                r2 > 0.0, r2 ** s + 2.0 * s * b * b * r2 ** (s - 1.0), 0.0)
        return g

    def hess(x):
        a, b = x[..., 0], x[..., 1]
        r2 = _mask(x)
        h = np.zeros(x.shape[:-1] + (3, 3))
        with np.errstate(divide="ignore", invalid="ignore"):
            hxx = 2 * s * b * r2 ** (s - 1) + 4 * s * (s - 1) * a * a * b * r2 ** (s - 2)
            hxy = 2 * s * a * r2 ** (s - 1) + 4 * s * (s - 1) * a * b * b * r2 ** (s - 2)
            hyy = 6 * s * b * r2 ** (s - 1) + 4 * s * (s - 1) * b ** 3 * r2 ** (s - 2)
        ok = r2 > 0.0
        h[..., 0, 0] = np.where(ok, hxx, 0.0)
        h[..., 0, 1] = h[..., 1, 0] = np.where(ok, hxy, 0.0)
        h[..., 1, 1] = np.where(ok, hyy, 0.0)
        return h

    return AmbientScalarField(val, grad, hess, name=f"spherical_singular({lam})")


def spherical_singular_rhs(lam: float):
    """Analytic f with -lap_G u + u = f for the singular sphere solution.

    f = (1 + lam + lam^2) sin^lam(theta) sin(phi)
        + (1 - lam^2) sin^(lam-2)(theta) sin(phi),
    evaluated after normalizing to the sphere; f = 0 at the poles by
    convention.  (The first coefficient makes the pair PDE-consistent.)
    """
    c1 = 1.0 + lam + lam ** 2
    c2 = 1.0 - lam ** 2

    def f(x):
        x = np.asarray(x, float)
        q = x / _norm(x)[..., None]
        rho2 = q[..., 0] ** 2 + q[..., 1] ** 2
        rho = np.sqrt(rho2)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = q[..., 1] * (c1 * rho ** (lam - 1.0) + c2 * rho ** (lam - 3.0))
        return np.where(rho > 0.0, v, 0.0)

    return f
