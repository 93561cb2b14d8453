"""Graph representation ``-g(y) <= lambda <= f(y)`` of a body along an axis.

Points are split as ``z = P y + lambda xi`` where the columns of ``P`` span
``xi^perp``.  ``f`` and ``g`` are concave on the base (the projection of the
body onto ``xi^perp``) and the bracket ``<f>(y) = f(y) - grad f(y) . y``
equals the support value of the body at the upper normal ``(-grad f, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull

from .bodies import Body, Ellipsoid, Polytope, frame, support_by_search, unit
from .domains import Base, EllipseBase, IntervalBase, PolygonBase, RadialBase
from .quadrature import PlanarRule, planar_rule

Field = Callable[[np.ndarray], np.ndarray]
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class GraphData:
    """Boundary data of a graph body tabulated at planar nodes."""

    rule: PlanarRule
    f: np.ndarray
    g: np.ndarray
    grad_f: np.ndarray
    grad_g: np.ndarray
    bracket_f: np.ndarray
    bracket_g: np.ndarray


class GraphBody(Body):
    """Body bounded above by ``f`` and below by ``-g`` over a base domain.

    Parameters
    ----------
    axis : array_like
        Unit direction ``xi``.
    base : Base
        Projection of the body onto ``xi^perp`` in frame coordinates.
    f, g : callable
        Vectorized on ``(k, n-1)`` base points.
    grad_f, grad_g, bracket_f, bracket_g : callable, optional
        Analytic derivative data.  Without gradients the body can still be
        evaluated but not used in the graph-route integrals.
    exact : Body, optional
        Exact representation of the same set, used for support/radial queries.
    """

    kind = "graph"

    def __init__(self, axis, base: Base, f: Field, g: Field, grad_f: Field | None = None,
                 grad_g: Field | None = None, bracket_f: Field | None = None,
                 bracket_g: Field | None = None, exact: Body | None = None,
                 breakpoints=None, symmetric: bool | None = None, bound: float | None = None):
        self.axis = unit(axis)
        self.dim = self.axis.size
        if base.dim != self.dim - 1:
            raise ValueError("base dimension does not match the axis")
        self.frame = frame(self.axis)
        self.perp = self.frame[:, :-1]
        self.base = base
        self.f, self.g = f, g
        self.grad_f, self.grad_g = grad_f, grad_g
        self._bracket_f, self._bracket_g = bracket_f, bracket_g
        self.exact = exact
        self.breakpoints = breakpoints
        self._symmetric = symmetric
        self._bound = bound
        self._data: dict = {}

    @property
    def has_gradients(self) -> bool:
        return self.grad_f is not None and self.grad_g is not None

    def split(self, z):
        z = np.atleast_2d(z)
        return z @ self.perp, z @ self.axis

    def join(self, y, lam):
        y = np.atleast_2d(y)
        return y @ self.perp.T + np.asarray(lam)[..., None] * self.axis

    def bracket_f(self, y):
        if self._bracket_f is not None:
            return self._bracket_f(y)
        return self.f(y) - np.einsum("ij,ij->i", self.grad_f(y), np.atleast_2d(y))

    def bracket_g(self, y):
        if self._bracket_g is not None:
            return self._bracket_g(y)
        return self.g(y) - np.einsum("ij,ij->i", self.grad_g(y), np.atleast_2d(y))

    def data(self, rule: PlanarRule) -> GraphData:
        """Boundary data at the nodes of ``rule`` (cached per rule)."""
        key = id(rule)
        hit = self._data.get(key)
        if hit is not None and hit.rule is rule:
            return hit
        if not self.has_gradients:
            raise TypeError("graph body has no gradient data")
        y = rule.nodes
        out = GraphData(rule, self.f(y), self.g(y), self.grad_f(y), self.grad_g(y),
                        self.bracket_f(y), self.bracket_g(y))
        for name in ("f", "g", "bracket_f", "bracket_g"):
            arr = getattr(out, name)
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise ValueError(f"graph data {name} is not finite at base node {y[bad[0]].tolist()}")
        self._data[key] = out
        return out

    def planar_rule(self, resolution=None, grading=None) -> PlanarRule:
        return planar_rule(self.base, resolution, grading, breakpoints=self.breakpoints)

    # Body interface
    def _inside(self, z, tol=1e-12):
        y, lam = self.split(z)
        scale = self.bounding_radius()
        inb = self.base.contains(y, tol * scale)
        out = np.zeros(z.shape[0], dtype=bool)
        if inb.any():
            yi = y[inb]
            fv, gv = self.f(yi), self.g(yi)
            ok = np.isfinite(fv) & np.isfinite(gv)
            li = lam[inb]
            res = ok & (li <= fv + tol * scale) & (li >= -gv - tol * scale)
            out[np.flatnonzero(inb)] = res
        return out

    def _radial(self, u):
        if self.exact is not None:
            return self.exact._radial(u)
        r = np.linalg.norm(u, axis=1)
        v = u / r[:, None]
        lo = np.zeros(u.shape[0])
        hi = np.full(u.shape[0], 2.0 * self.bounding_radius())
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            inside = self._inside(v * mid[:, None], tol=0.0)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi) / r

    def _support(self, u):
        if self.exact is not None:
            return self.exact._support(u)
        return support_by_search(self, u)

    def contains(self, x, tol: float = 1e-12):
        arr = np.atleast_2d(np.asarray(x, dtype=float))
        res = self._inside(arr, tol)
        return bool(res[0]) if np.ndim(x) == 1 else res

    @property
    def symmetric(self) -> bool:
        if self._symmetric is not None:
            return self._symmetric
        if self.exact is not None:
            return self.exact.symmetric
        return super().symmetric

    def bounding_radius(self) -> float:
        if self._bound is None:
            if self.exact is not None:
                self._bound = self.exact.bounding_radius()
            else:
                rule = self.planar_rule(64 if self.dim == 2 else 32)
                y = rule.nodes
                top = np.nanmax(np.abs(np.concatenate([self.f(y), self.g(y)])))
                self._bound = float(np.hypot(self.base.diameter, top)) * 1.05
        return self._bound

    def volume(self, rule=None) -> float:
        if self.exact is not None and rule is None:
            return self.exact.volume()
        pr = self.planar_rule() if rule is None or not isinstance(rule, PlanarRule) else rule
        y = pr.nodes
        return pr.integrate(self.f(y) + self.g(y))


def bracket(gb: GraphBody, which: str, x) -> float:
    """``<f>(x) = f(x) - grad f(x) . x`` (or the same for ``g``) at an interior base point."""
    y = np.atleast_2d(np.asarray(x, dtype=float))
    if y.shape[1] != gb.dim - 1:
        raise ValueError("base point has the wrong dimension")
    if not np.all(gb.base.contains(y, -1e-12)):
        raise ValueError("bracket needs a point strictly inside the base")
    if which not in ("f", "g"):
        raise ValueError("which must be 'f' or 'g'")
    if not gb.has_gradients:
        raise TypeError("graph body has no gradient data")
    vals = gb.bracket_f(y) if which == "f" else gb.bracket_g(y)
    return float(vals[0]) if np.ndim(x) <= 1 and y.shape[0] == 1 else vals


def section_length(body: Body, xi, y) -> float:
    """Length of the chord ``{(y, s)} cap K`` parallel to ``xi``; 0 off the base."""
    gb = graph_decompose(body, xi)
    yy = np.atleast_2d(np.asarray(y, dtype=float).reshape(-1, body.dim - 1))
    inside = gb.base.contains(yy)
    out = np.zeros(yy.shape[0])
    if inside.any():
        vals = gb.f(yy[inside]) + gb.g(yy[inside])
        out[inside] = np.where(np.isfinite(vals), np.maximum(vals, 0.0), 0.0)
    return float(out[0]) if out.size == 1 else out


def graph_decompose(body: Body, xi, resolution: int | None = None) -> GraphBody:
    """Graph representation of ``body`` along ``xi``."""
    xi = unit(xi)
    if xi.size != body.dim:
        raise ValueError("axis has the wrong dimension")
    if isinstance(body, GraphBody):
        if np.allclose(body.axis, xi, atol=1e-15, rtol=0):
            return body
        if body.exact is not None:
            return graph_decompose(body.exact, xi, resolution)
    if isinstance(body, Ellipsoid):
        return _ellipsoid_graph(body, xi)
    if isinstance(body, Polytope):
        return _polytope_graph(body, xi)
    if body.has_gauge_gradient:
        return _gauge_graph(body, xi)
    return _sampled_graph(body, xi)


def _ellipsoid_graph(body: Ellipsoid, xi) -> GraphBody:
    q = frame(xi)
    n = body.dim
    m = q.T @ np.linalg.inv(body.matrix @ body.matrix.T) @ q
    mxx, mv, mnn = m[:-1, :-1], m[:-1, -1], m[-1, -1]
    s = mxx - np.outer(mv, mv) / mnn
    at = body.matrix.T @ q

    def half(y):
        y = np.atleast_2d(y)
        quad = np.einsum("ij,jk,ik->i", y, s, y)
        return np.sqrt(np.maximum(1.0 - quad, 0.0) / mnn), y

    def f(y):
        r, y = half(y)
        return -(y @ mv) / mnn + r

    def g(y):
        r, y = half(y)
        return (y @ mv) / mnn + r

    def grad_f(y):
        r, y = half(y)
        return -mv / mnn - (y @ s) / (mnn * r)[:, None]

    def grad_g(y):
        r, y = half(y)
        return mv / mnn - (y @ s) / (mnn * r)[:, None]

    def bracket_f(y):
        d = np.concatenate([-grad_f(y), np.ones((np.atleast_2d(y).shape[0], 1))], 1)
        return np.linalg.norm(d @ at.T, axis=1)

    def bracket_g(y):
        d = np.concatenate([-grad_g(y), -np.ones((np.atleast_2d(y).shape[0], 1))], 1)
        return np.linalg.norm(d @ at.T, axis=1)

    if n == 2:
        a = 1.0 / np.sqrt(s[0, 0])
        base = IntervalBase(-a, a)
    else:
        w, v = np.linalg.eigh(s)
        base = EllipseBase(v @ np.diag(1.0 / np.sqrt(w)) @ v.T)
    return GraphBody(xi, base, f, g, grad_f, grad_g, bracket_f, bracket_g, exact=body, symmetric=True)


def _polytope_graph(body: Polytope, xi) -> GraphBody:
    q = frame(xi)
    nu = body.normals @ q
    h = body.offsets
    vert = body.vertices @ q[:, :-1]
    tol = 1e-12
    up = nu[:, -1] > tol
    dn = nu[:, -1] < -tol
    nu_up, h_up = nu[up], h[up]
    nu_dn, h_dn = nu[dn], h[dn]

    def _env(y, nv, hv, sign):
        y = np.atleast_2d(y)
        vals = (hv[None, :] - y @ nv[:, :-1].T) / (sign * nv[None, :, -1])
        return vals, np.argmin(vals, axis=1)

    def f(y):
        vals, i = _env(y, nu_up, h_up, 1.0)
        return vals[np.arange(vals.shape[0]), i]

    def g(y):
        vals, i = _env(y, nu_dn, h_dn, -1.0)
        return vals[np.arange(vals.shape[0]), i]

    def grad_f(y):
        _, i = _env(y, nu_up, h_up, 1.0)
        return -nu_up[i, :-1] / nu_up[i, -1:]

    def grad_g(y):
        _, i = _env(y, nu_dn, h_dn, -1.0)
        return nu_dn[i, :-1] / nu_dn[i, -1:]

    def bracket_f(y):
        _, i = _env(y, nu_up, h_up, 1.0)
        return h_up[i] / nu_up[i, -1]

    def bracket_g(y):
        _, i = _env(y, nu_dn, h_dn, -1.0)
        return h_dn[i] / -nu_dn[i, -1]

    if body.dim == 2:
        base = IntervalBase(float(vert.min()), float(vert.max()))
        breakpoints = np.unique(vert.ravel())
    else:
        hull = ConvexHull(vert)
        base = PolygonBase(vert[hull.vertices])
        breakpoints = None
    return GraphBody(xi, base, f, g, grad_f, grad_g, bracket_f, bracket_g, exact=body,
                     breakpoints=breakpoints, symmetric=body.symmetric)


def _golden_min(fun, lo, hi, iters=90):
    """Vectorized golden-section minimization of convex functions on brackets."""
    a, b = lo.copy(), hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - GOLDEN * (b - a), d)
        nd = np.where(left, c, a + GOLDEN * (b - a))
        fnew = fun(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = nc, nd
    x = 0.5 * (a + b)
    return x, fun(x)


class _Chords:
    """Chord geometry of a body along ``xi`` through its gauge."""

    def __init__(self, body: Body, xi):
        self.body = body
        self.axis = unit(xi)
        self.frame = frame(self.axis)
        self.perp = self.frame[:, :-1]
        self.bound = 1.1 * body.bounding_radius()

    def gauge(self, y, lam):
        pts = np.atleast_2d(y) @ self.perp.T + lam[:, None] * self.axis
        return self.body._gauge(pts)

    def lowest(self, y):
        """``(mu*, min_mu gauge(y, mu))`` along each chord line."""
        y = np.atleast_2d(y)
        g0 = self.gauge(y, np.zeros(y.shape[0]))
        span = self.bound * np.maximum(g0, 1e-300) + 1e-300
        return _golden_min(lambda mu: self.gauge(y, mu), -span, span)

    def base_radius(self, directions):
        """Extent of the projection along unit directions of ``xi^perp``."""
        _, val = self.lowest(directions)
        return 1.0 / val

    def newton_top(self, y, sign=1.0, iters=200):
        """Largest ``mu`` with ``gauge(y, sign mu) = 1``; nan when the chord is empty."""
        y = np.atleast_2d(y)
        mu = np.full(y.shape[0], self.bound)
        active = np.ones(y.shape[0], dtype=bool)
        bad = np.zeros(y.shape[0], dtype=bool)
        for _ in range(iters):
            if not active.any():
                break
            ya, ma = y[active], mu[active]
            pts = ya @ self.perp.T + (sign * ma)[:, None] * self.axis
            val = self.body._gauge(pts) - 1.0
            slope = sign * (self.body.gauge_gradient(pts) @ self.axis)
            dead = (slope <= 0) & (val > 0)
            step = np.where(slope > 0, val / np.where(slope > 0, slope, 1.0), 0.0)
            idx = np.flatnonzero(active)
            mu[idx] = ma - step
            bad[idx[dead]] = True
            done = dead | (np.abs(step) <= 1e-15 * self.bound) | (np.abs(val) <= 1e-15)
            active[idx[done]] = False
        mu[bad] = np.nan
        return mu

    def bisect_top(self, y, sign=1.0):
        """Chord end by bisection on membership, started at the deepest point."""
        y = np.atleast_2d(y)
        mid, val = self.lowest(y)
        lo = mid.copy()
        hi = np.full(y.shape[0], self.bound) * sign
        inside = val <= 1.0
        for _ in range(70):
            m = 0.5 * (lo + hi)
            ok = self.gauge(y, m) <= 1.0
            lo = np.where(ok, m, lo)
            hi = np.where(ok, hi, m)
        out = sign * 0.5 * (lo + hi)
        return np.where(inside, out, np.nan)


def _gauge_base(ch: _Chords, symmetric: bool):
    n = ch.body.dim
    if n == 2:
        b = ch.perp[:, 0]
        r = ch.base_radius(np.stack([-b, b]) @ ch.perp)
        return IntervalBase(-float(r[0]), float(r[1]))

    cache: dict = {}

    def radius(angle):
        key = angle.tobytes()
        if key not in cache:
            w = np.stack([np.cos(angle).ravel(), np.sin(angle).ravel()], 1)
            cache[key] = ch.base_radius(w).reshape(angle.shape)
        return cache[key]

    return RadialBase(radius, symmetric=symmetric)


def _gauge_graph(body: Body, xi) -> GraphBody:
    ch = _Chords(body, xi)
    base = _gauge_base(ch, body.symmetric)

    def point(y, lam):
        return np.atleast_2d(y) @ ch.perp.T + lam[:, None] * ch.axis

    def f(y):
        return ch.newton_top(y, 1.0)

    def g(y):
        return ch.newton_top(y, -1.0)

    def _grad(y, lam):
        gr = body.gauge_gradient(point(y, lam))
        return gr @ ch.perp, gr @ ch.axis

    def grad_f(y):
        gp, gl = _grad(y, f(y))
        return -gp / gl[:, None]

    def grad_g(y):
        gp, gl = _grad(y, -g(y))
        return gp / gl[:, None]

    def bracket_f(y):
        return 1.0 / _grad(y, f(y))[1]

    def bracket_g(y):
        return -1.0 / _grad(y, -g(y))[1]

    return GraphBody(xi, base, f, g, grad_f, grad_g, bracket_f, bracket_g,
                     symmetric=body.symmetric, bound=ch.bound)


def _sampled_graph(body: Body, xi) -> GraphBody:
    ch = _Chords(body, xi)
    base = _gauge_base(ch, body.symmetric)
    step = 1e-5 * base.diameter

    def f(y):
        return ch.bisect_top(y, 1.0)

    def g(y):
        return ch.bisect_top(y, -1.0)

    def fd(fun):
        def grad(y):
            y = np.atleast_2d(y)
            out = np.empty_like(y, dtype=float)
            for k in range(y.shape[1]):
                e = np.zeros(y.shape[1])
                e[k] = step
                fwd_ok = base.contains(y + e)
                bwd_ok = base.contains(y - e)
                f0 = fun(y)
                fp = np.where(fwd_ok, fun(np.where(fwd_ok[:, None], y + e, y)), f0)
                fm = np.where(bwd_ok, fun(np.where(bwd_ok[:, None], y - e, y)), f0)
                width = step * (fwd_ok.astype(float) + bwd_ok.astype(float))
                out[:, k] = (fp - fm) / np.where(width > 0, width, 1.0)
            return out
        return grad

    return GraphBody(xi, base, f, g, fd(f), fd(g), symmetric=body.symmetric, bound=ch.bound)


def tabulated_graph(axis, samples, f_values, g_values) -> GraphBody:
    """Planar graph body from tables of ``f`` and ``g`` on an increasing grid.

    Interpolation is piecewise cubic and shape preserving; tables must
    contain the two base endpoints.
    """
    from scipy.interpolate import PchipInterpolator

    y = np.asarray(samples, dtype=float).reshape(-1)
    fv = np.asarray(f_values, dtype=float).reshape(-1)
    gv = np.asarray(g_values, dtype=float).reshape(-1)
    if y.size < 3 or y.size != fv.size or y.size != gv.size:
        raise ValueError("graph tables need matching samples, f and g (at least 3)")
    if np.any(np.diff(y) <= 0):
        raise ValueError("graph samples must be strictly increasing")
    if not np.all(np.isfinite(fv)) or not np.all(np.isfinite(gv)) or np.any(fv + gv < 0):
        raise ValueError("graph tables must be finite with f + g >= 0")
    axis = unit(axis)
    if axis.size != 2:
        raise ValueError("tabulated graph bodies are planar")
    fi, gi = PchipInterpolator(y, fv), PchipInterpolator(y, gv)
    dfi, dgi = fi.derivative(), gi.derivative()

    def wrap(fun):
        return lambda z: fun(np.atleast_2d(z)[:, 0])

    def wrap_grad(fun):
        return lambda z: fun(np.atleast_2d(z)[:, 0])[:, None]

    body = GraphBody(axis, IntervalBase(float(y[0]), float(y[-1])), wrap(fi), wrap(gi),
                     wrap_grad(dfi), wrap_grad(dgi))
    body.tables = (y, fv, gv)
    return body
