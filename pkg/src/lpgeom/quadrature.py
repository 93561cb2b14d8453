"""Quadrature on S^(n-1) and on planar base domains.

Sphere rules are product rules: equispaced angles on the circle, and
Gauss-Legendre in ``cos(theta)`` times equispaced azimuth on the 2-sphere.
Both are closed under the antipodal map, with the antipode of every node
stored as an exact negation.

Planar rules integrate over a base domain and are graded toward its
boundary, where integrands built from graph gradients behave like
``dist^(-1/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .domains import Base, EllipseBase, IntervalBase, PolygonBase, RadialBase
from .spectral import CircleTransform, SphereTransform

DEFAULT_SPHERE_ORDER = {2: 2048, 3: 128}
DEFAULT_PLANAR = {2: (512, 2.0), 3: (64, 2.0)}
_CHUNK = 1 << 22


def check_dim(dim: int) -> int:
    if dim not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dim}")
    return dim


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Nodes and weights of a product rule on S^(n-1).

    Attributes
    ----------
    dim : int
        Ambient dimension ``n``.
    order : int
        Number of angles on the circle, or polar Gauss nodes on the sphere
        (with twice as many azimuths).
    nodes : ndarray, shape (m, n)
    weights : ndarray, shape (m,)
    """

    dim: int
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    polar: np.ndarray | None = None
    polar_weights: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def grid_shape(self) -> tuple[int, ...]:
        if self.dim == 2:
            return (self.order,)
        return (self.order, 2 * self.order)

    @cached_property
    def antipode(self) -> np.ndarray:
        """Index of ``-node`` for every node."""
        if self.dim == 2:
            k = np.arange(self.order)
            return (k + self.order // 2) % self.order
        nt, nphi = self.grid_shape
        j, k = np.divmod(np.arange(self.size), nphi)
        return (nt - 1 - j) * nphi + (k + nphi // 2) % nphi

    @cached_property
    def transform(self):
        if self.dim == 2:
            return CircleTransform(self.order)
        return SphereTransform(self.polar, self.polar_weights, 2 * self.order)

    @cached_property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.nodes[:, 1], self.nodes[:, 0])

    def refined(self) -> "SphereRule":
        return sphere_rule(self.dim, 2 * self.order)


_RULE_CACHE: dict[tuple[int, int], SphereRule] = {}


def sphere_rule(dim: int, order: int | None = None) -> SphereRule:
    """Product rule on S^(dim-1); defaults are 2048 angles or 128 x 256 nodes."""
    check_dim(dim)
    if order is None:
        order = DEFAULT_SPHERE_ORDER[dim]
    if int(order) != order or order < 4 or order % 2:
        raise ValueError(f"sphere rule order must be an even integer >= 4, got {order}")
    order = int(order)
    key = (dim, order)
    if key in _RULE_CACHE:
        return _RULE_CACHE[key]
    if dim == 2:
        half = order // 2
        ang = 2.0 * np.pi * np.arange(half) / order
        first = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        nodes = np.concatenate([first, -first])
        weights = np.full(order, 2.0 * np.pi / order)
        rule = SphereRule(dim, order, nodes, weights)
    else:
        t, wt = roots_legendre(order)
        t = 0.5 * (t - t[::-1])
        wt = 0.5 * (wt + wt[::-1])
        nphi = 2 * order
        half = order
        ang = 2.0 * np.pi * np.arange(half) / nphi
        c = np.concatenate([np.cos(ang), -np.cos(ang)])
        s = np.concatenate([np.sin(ang), -np.sin(ang)])
        st = np.sqrt(1.0 - t * t)
        nodes = np.stack(
            [np.outer(st, c).ravel(), np.outer(st, s).ravel(), np.repeat(t, nphi)], axis=1
        )
        weights = np.repeat(wt, nphi) * (2.0 * np.pi / nphi)
        rule = SphereRule(dim, order, nodes, weights, polar=t, polar_weights=wt)
    _RULE_CACHE[key] = rule
    return rule


def _values(rule_nodes: np.ndarray, f) -> np.ndarray:
    if callable(f):
        vals = np.asarray(f(rule_nodes), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    return vals.reshape(rule_nodes.shape[0], *vals.shape[1:]) if vals.ndim else vals


def integrate_sphere(rule: SphereRule, f) -> float:
    """Integrate ``f`` over the sphere with compensated summation.

    ``f`` is either a vectorized callable on an ``(m, n)`` array of nodes or
    an array of node values.
    """
    vals = _values(rule.nodes, f)
    if vals.shape != (rule.size,):
        raise ValueError(f"expected {rule.size} node values, got shape {vals.shape}")
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"integrand is not finite at node {i}: {rule.nodes[i].tolist()}")
    return math.fsum(rule.weights * vals)


def abs_pow(s: np.ndarray, p: float) -> np.ndarray:
    """``|s|^p`` with cheap paths for small integer and half-integer ``p``."""
    if p == 2.0:
        return s * s
    a = np.abs(s)
    if p == 1.0:
        return a
    if p == 3.0:
        return a * a * a
    if p == 1.5:
        return a * np.sqrt(a)
    return a**p


def signed_pow(s: np.ndarray, q: float) -> np.ndarray:
    """``|s|^q sgn(s)``."""
    if q == 1.0:
        return s
    return np.sign(s) * abs_pow(s, q)


def power_sum(directions: np.ndarray, weights: np.ndarray, points: np.ndarray, p: float) -> np.ndarray:
    """``sum_i w_i |x . u_i|^p`` for every row ``x`` of ``points``."""
    points = np.atleast_2d(points)
    out = np.empty(points.shape[0])
    step = max(1, _CHUNK // max(1, directions.shape[0]))
    for start in range(0, points.shape[0], step):
        s = points[start : start + step] @ directions.T
        out[start : start + step] = abs_pow(s, p) @ weights
    return out


def power_sum_gradient(directions: np.ndarray, weights: np.ndarray, points: np.ndarray, p: float) -> np.ndarray:
    """``sum_i w_i |x . u_i|^(p-1) sgn(x . u_i) u_i`` for every row ``x``."""
    points = np.atleast_2d(points)
    out = np.empty_like(points, dtype=float)
    step = max(1, _CHUNK // max(1, directions.shape[0]))
    for start in range(0, points.shape[0], step):
        s = points[start : start + step] @ directions.T
        out[start : start + step] = (signed_pow(s, p - 1.0) * weights) @ directions
    return out


def zonal_transform(
    rule: SphereRule,
    density: np.ndarray,
    p: float,
    points: np.ndarray | None = None,
    method: str = "spectral",
) -> np.ndarray:
    """``T(x) = int G(xi) |xi . x|^p dxi`` for node samples ``density`` of G.

    With ``points=None`` the transform is returned at the rule nodes.  The
    spectral method applies the Funk-Hecke eigenvalues to the harmonic
    expansion of ``G``; the direct method sums the rule.
    """
    density = np.asarray(density, dtype=float).reshape(rule.size)
    if method == "direct":
        pts = rule.nodes if points is None else np.atleast_2d(points)
        return power_sum(rule.nodes, rule.weights * density, pts, p)
    if method != "spectral":
        raise ValueError(f"unknown zonal method {method!r}")
    tr = rule.transform
    if rule.dim == 2:
        coeffs = tr.zonal(density, p)
        if points is None:
            return tr.synthesize(coeffs)
        pts = np.atleast_2d(points)
        r = np.linalg.norm(pts, axis=1)
        vals = tr.evaluate(coeffs, np.arctan2(pts[:, 1], pts[:, 0]))
        return vals * r**p
    coeffs = tr.zonal(density.reshape(rule.grid_shape), p)
    if points is None:
        return tr.synthesize(coeffs).ravel()
    pts = np.atleast_2d(points)
    r = np.linalg.norm(pts, axis=1)
    safe = np.where(r > 0, r, 1.0)
    vals = tr.evaluate(coeffs, pts / safe[:, None])
    return np.where(r > 0, vals * r**p, 0.0)


@dataclass(frozen=True, eq=False)
class PlanarRule:
    """Nodes ``(k, n-1)`` and weights for integration over a base domain."""

    base: Base
    nodes: np.ndarray
    weights: np.ndarray
    resolution: int
    grading: float
    mirror: np.ndarray | None = field(default=None)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values: np.ndarray) -> float:
        return math.fsum(self.weights * np.asarray(values, dtype=float))


def _gl(k: int):
    x, w = roots_legendre(k)
    return 0.5 * (x + 1.0), 0.5 * w


def _graded_unit(panels: int, k: int, grading: float):
    """Nodes ``d`` in (0,1) and weights for ``int_0^1 . dd`` under ``d = v^q``."""
    x, w = _gl(k)
    edges = np.linspace(0.0, 1.0, panels + 1)
    v = (edges[:-1, None] + x[None, :] / panels).ravel()
    wv = np.tile(w / panels, panels)
    d = v**grading
    wd = wv * grading * v ** (grading - 1.0)
    return d, wd


def planar_rule(
    base: Base,
    resolution: int | None = None,
    grading: float | None = None,
    breakpoints: np.ndarray | None = None,
    order: int = 8,
) -> PlanarRule:
    """Graded composite Gauss rule on ``base``.

    ``resolution`` is the number of panels across an interval, or the number
    of angular nodes for two-dimensional bases.  ``grading`` is the exponent
    ``q`` of the change of variables ``dist = v^q`` toward the boundary; ``q=2``
    makes a ``dist^(-1/2)`` singularity smooth.  Interval ``breakpoints``
    (kinks of piecewise-linear data) switch to plain Gauss panels aligned
    with them.
    """
    dim = base.dim + 1
    res_default, q_default = DEFAULT_PLANAR[dim]
    resolution = res_default if resolution is None else int(resolution)
    grading = q_default if grading is None else float(grading)
    if resolution < 2:
        raise ValueError("planar resolution must be at least 2")
    if not 1.0 <= grading <= 4.0:
        raise ValueError(f"grading exponent must lie in [1, 4], got {grading}")
    if isinstance(base, IntervalBase):
        return _interval_rule(base, resolution, grading, breakpoints, order)
    if isinstance(base, (EllipseBase, RadialBase)):
        return _polar_rule(base, resolution, grading, order)
    if isinstance(base, PolygonBase):
        return _polygon_rule(base, resolution, grading, order)
    raise TypeError(f"unsupported base {type(base).__name__}")


def _interval_rule(base: IntervalBase, res: int, q: float, breakpoints, order: int) -> PlanarRule:
    lo, hi = base.lo, base.hi
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float).ravel()
        bp = np.unique(np.concatenate([[lo, hi], bp[(bp > lo) & (bp < hi)]]))
        x, w = _gl(order)
        total = hi - lo
        nodes, weights = [], []
        for a, b in zip(bp[:-1], bp[1:]):
            panels = max(1, int(round(res * (b - a) / total)))
            e = np.linspace(a, b, panels + 1)
            h = np.diff(e)
            nodes.append((e[:-1, None] + h[:, None] * x[None, :]).ravel())
            weights.append((h[:, None] * w[None, :]).ravel())
        y = np.concatenate(nodes)
        wy = np.concatenate(weights)
        return PlanarRule(base, y[:, None], wy, res, 1.0)
    d, wd = _graded_unit(max(1, res // 2), order, q)
    right = hi - hi * d
    w_right = hi * wd
    if base.symmetric:
        left, w_left = -right, w_right
    else:
        left = lo - lo * d
        w_left = -lo * wd
    y = np.concatenate([left[::-1], right])
    wy = np.concatenate([w_left[::-1], w_right])
    mirror = np.arange(y.size)[::-1] if base.symmetric else None
    return PlanarRule(base, y[:, None], wy, res, q, mirror)


def _angles(res: int) -> np.ndarray:
    return 2.0 * np.pi * (np.arange(res) + 0.5) / res


def _polar_rule(base, res: int, q: float, order: int) -> PlanarRule:
    if res % 2:
        res += 1
    d, wd = _graded_unit(max(2, res // 8), order, q)
    s = 1.0 - d
    phi = _angles(res)
    half = res // 2
    dphi = 2.0 * np.pi / res
    if isinstance(base, EllipseBase):
        c, sn = np.cos(phi[:half]), np.sin(phi[:half])
        unit = np.concatenate([np.stack([c, sn], 1), -np.stack([c, sn], 1)])
        dirs = unit @ base.matrix.T
        jac = np.full(res, abs(np.linalg.det(base.matrix)))
    else:
        r = base.radius(phi)
        unit = np.stack([np.cos(phi), np.sin(phi)], 1)
        if base.symmetric:
            unit = np.concatenate([unit[:half], -unit[:half]])
            r = np.concatenate([r[:half], r[:half]])
        dirs = unit * r[:, None]
        jac = r * r
    nodes = (dirs[:, None, :] * s[None, :, None]).reshape(-1, 2)
    weights = (jac[:, None] * (s * wd)[None, :] * dphi).ravel()
    mirror = None
    if base.symmetric:
        idx = np.arange(res * s.size).reshape(res, s.size)
        mirror = np.roll(idx, -half, axis=0).ravel()
    return PlanarRule(base, nodes, weights, res, q, mirror)


def _polygon_rule(base: PolygonBase, res: int, q: float, order: int) -> PlanarRule:
    v = base.vertices
    k = v.shape[0]
    d, wd = _graded_unit(max(2, res // 8), order, q)
    s = 1.0 - d
    tau, wt = _gl(max(order, res // k))
    nodes, weights = [], []
    for i in range(k):
        a, b = v[i], v[(i + 1) % k]
        jac = abs(a[0] * b[1] - a[1] * b[0])
        edge = (1.0 - tau)[:, None] * a + tau[:, None] * b
        nodes.append((edge[:, None, :] * s[None, :, None]).reshape(-1, 2))
        weights.append((wt[:, None] * (s * wd)[None, :] * jac).ravel())
    mirror = None
    if base.symmetric:
        per = tau.size * s.size
        mirror = np.roll(np.arange(k * per).reshape(k, per), -(k // 2), axis=0).ravel()
        first = np.concatenate(nodes[: k // 2])
        nodes = [first, -first]
        weights = [np.concatenate(weights[: k // 2])] * 2
    return PlanarRule(base, np.concatenate(nodes), np.concatenate(weights), res, q, mirror)


def integrate_planar(rule: PlanarRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    vals = np.asarray(f(rule.nodes), dtype=float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"integrand is not finite at base node {i}: {rule.nodes[i].tolist()}")
    return rule.integrate(vals)
