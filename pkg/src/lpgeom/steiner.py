"""Continuous Steiner symmetrization along an axis.

For ``K = {-g <= lambda <= f}`` the image at time ``t`` in [0, 2] is

    f_t = (1 - t/2) f + (t/2) g,    g_t = (1 - t/2) g + (t/2) f,

so every chord keeps its length while its midpoint ``(f - g)/2`` is scaled
by ``1 - t``.  ``t = 1`` is classical Steiner symmetrization and ``t = 2`` is
reflection in ``xi^perp``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .bodies import Ball, Body, Ellipsoid, Polytope, frame, unit
from .graph import GraphBody, graph_decompose
from .quadrature import sphere_rule
from .reports import VerificationReport


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 2.0:
        raise ValueError(f"Steiner parameter must lie in [0, 2], got {t}")
    return t


@dataclass(frozen=True)
class SteinerPath:
    """The pair ``(K, t)`` with the blended boundary data of ``S^t K``."""

    source: GraphBody
    t: float

    @property
    def weights(self):
        return 1.0 - 0.5 * self.t, 0.5 * self.t

    def f_t(self, y):
        a, b = self.weights
        return a * self.source.f(y) + b * self.source.g(y)

    def g_t(self, y):
        a, b = self.weights
        return a * self.source.g(y) + b * self.source.f(y)

    def grad_f_t(self, y):
        a, b = self.weights
        return a * self.source.grad_f(y) + b * self.source.grad_g(y)

    def grad_g_t(self, y):
        a, b = self.weights
        return a * self.source.grad_g(y) + b * self.source.grad_f(y)

    def bracket_f_t(self, y):
        a, b = self.weights
        return a * self.source.bracket_f(y) + b * self.source.bracket_g(y)

    def bracket_g_t(self, y):
        a, b = self.weights
        return a * self.source.bracket_g(y) + b * self.source.bracket_f(y)

    def theta(self, y):
        """Upper normal field ``(-grad f_t, 1)`` in frame coordinates."""
        g = self.grad_f_t(y)
        return np.concatenate([-g, np.ones((g.shape[0], 1))], axis=1)


def _ellipsoid_shear(body: Ellipsoid, xi, t: float) -> Ellipsoid:
    q = frame(xi)
    m = q.T @ np.linalg.inv(body.matrix @ body.matrix.T) @ q
    c = -m[:-1, -1] / m[-1, -1]  # chord midpoint slope in frame coordinates
    shear = np.eye(body.dim) - t * np.outer(xi, q[:, :-1] @ c)
    return Ellipsoid(shear @ body.matrix)


def _polytope_image(gb: GraphBody, path: SteinerPath) -> Polytope:
    poly: Polytope = gb.exact
    if poly.dim == 2:
        ys = np.asarray(gb.breakpoints, dtype=float)[:, None]
    else:
        ys = _overlay_points(poly, gb)
    top = path.f_t(ys)
    bot = -path.g_t(ys)
    pts = np.concatenate([gb.join(ys, top), gb.join(ys, bot)])
    return Polytope(pts)


def _overlay_points(poly: Polytope, gb: GraphBody) -> np.ndarray:
    """Vertices of the common refinement of the upper and lower facet projections."""
    from shapely.geometry import Polygon

    y_all = poly._points @ gb.perp
    nu = poly.normals @ gb.frame
    up, dn = [], []
    for i, idx in enumerate(poly.facet_vertices):
        if abs(nu[i, -1]) <= 1e-12:
            continue
        pts = y_all[idx]
        hull = ConvexHull(pts)
        shape = Polygon(pts[hull.vertices])
        (up if nu[i, -1] > 0 else dn).append(shape)
    out = [poly.vertices @ gb.perp]
    for a in up:
        for b in dn:
            if not a.intersects(b):
                continue
            inter = a.intersection(b)
            if inter.is_empty:
                continue
            geoms = getattr(inter, "geoms", [inter])
            for geom in geoms:
                coords = np.asarray(getattr(geom, "exterior", geom).coords, dtype=float)
                if coords.size:
                    out.append(coords.reshape(-1, 2))
    return np.unique(np.round(np.concatenate(out), 14), axis=0)


def steiner_t(body: Body, xi, t: float) -> GraphBody:
    """Graph body of ``S^t_xi K``; exact for ellipsoids and polytopes."""
    t = _check_t(t)
    xi = unit(xi)
    gb = graph_decompose(body, xi)
    path = SteinerPath(gb, t)
    exact = None
    if isinstance(gb.exact, Ellipsoid):
        exact = _ellipsoid_shear(gb.exact, xi, t)
    elif isinstance(gb.exact, Polytope):
        exact = _polytope_image(gb, path)
    grads = (path.grad_f_t, path.grad_g_t) if gb.has_gradients else (None, None)
    brackets = (path.bracket_f_t, path.bracket_g_t) if gb.has_gradients else (None, None)
    out = GraphBody(xi, gb.base, path.f_t, path.g_t, grads[0], grads[1], brackets[0], brackets[1],
                    exact=exact, breakpoints=gb.breakpoints, symmetric=gb.symmetric if gb._symmetric is not None
                    or gb.exact is not None else None, bound=None)
    out.path = path
    return out


def reflect(body: Body, xi) -> Body:
    """Reflection of ``body`` in the hyperplane ``xi^perp``."""
    xi = unit(xi)
    sigma = np.eye(xi.size) - 2.0 * np.outer(xi, xi)
    if isinstance(body, Ball):
        return body
    if isinstance(body, Ellipsoid):
        return Ellipsoid(sigma @ body.matrix)
    if isinstance(body, Polytope):
        return Polytope(body.vertices @ sigma)
    gb = graph_decompose(body, xi)
    exact = reflect(gb.exact, xi) if gb.exact is not None else None
    return GraphBody(xi, gb.base, gb.g, gb.f, gb.grad_g, gb.grad_f, gb._bracket_g, gb._bracket_f,
                     exact=exact, breakpoints=gb.breakpoints, symmetric=gb._symmetric)


def _compare(a: GraphBody, b: GraphBody, order: int | None = None) -> float:
    """Sup-node difference of two graph bodies over the same base."""
    if a.exact is not None and b.exact is not None:
        rule = sphere_rule(a.dim, order or (256 if a.dim == 2 else 32))
        return float(np.max(np.abs(a.exact._support(rule.nodes) - b.exact._support(rule.nodes))))
    pr = a.planar_rule(64 if a.dim == 2 else 32)
    y = pr.nodes
    return float(max(np.max(np.abs(a.f(y) - b.f(y))), np.max(np.abs(a.g(y) - b.g(y)))))


def steiner_compose_check(body: Body, xi, t1: float, t2: float, tol: float = 1e-9,
                          fixture: str = "") -> VerificationReport:
    """Compare ``S^lam S^{t1} K`` with ``S^{t2} K`` for ``lam = 1 - (1-t2)/(1-t1)``."""
    t1, t2 = float(t1), float(t2)
    if not 0.0 < t1 < t2 <= 1.0:
        raise ValueError("composition needs 0 < t1 < t2 <= 1")
    lam = 1.0 - (1.0 - t2) / (1.0 - t1)
    xi = unit(xi)
    first = steiner_t(body, xi, t1)
    lhs = steiner_t(first, xi, lam)
    rhs = steiner_t(body, xi, t2)
    worst = _compare(lhs, rhs)
    return VerificationReport("steiner_compose", fixture, body.dim, None, tuple(xi.tolist()), (t1, t2),
                              worst, tol, extra={"lambda": lam})


def midpoint_planarity_defect(body: Body, xi, resolution: int | None = None) -> float:
    """Relative sup residual of an affine least-squares fit of chord midpoints.

    Midpoints ``(f - g)/2`` are fitted by ``a . y + c`` over the base nodes and
    the residual is divided by the largest chord half-length.
    """
    gb = graph_decompose(body, xi)
    pr = gb.planar_rule(resolution or (128 if gb.dim == 2 else 32))
    y = pr.nodes
    f, g = gb.f(y), gb.g(y)
    mid = 0.5 * (f - g)
    half = 0.5 * (f + g)
    design = np.concatenate([y, np.ones((y.shape[0], 1))], axis=1)
    coef, *_ = np.linalg.lstsq(design, mid, rcond=None)
    resid = np.max(np.abs(design @ coef - mid))
    return float(resid / np.max(half))


def steiner_volume(body: Body, xi, t: float, planar_res: int | None = None) -> float:
    """Volume of ``S^t K`` by integrating chord lengths over the base."""
    sb = steiner_t(body, xi, t)
    pr = sb.planar_rule(planar_res)
    y = pr.nodes
    return pr.integrate(sb.f(y) + sb.g(y))


def hausdorff_rate(body: Body, xi, t0: float, ts, order: int | None = None):
    """``max |h_{S^t} - h_{S^t0}| / |t - t0|`` over the given times (exact bodies)."""
    base = steiner_t(body, xi, t0)
    rates = []
    for t in ts:
        other = steiner_t(body, xi, t)
        rates.append(_compare(other, base, order) / abs(t - t0))
    return max(rates)
