"""Convex bodies in R^2 and R^3 containing the origin in their interior.

Every body exposes vectorized support, radial and gauge functions.  Inputs
may be a single vector of shape ``(n,)`` (scalar result) or a stack of shape
``(k, n)`` (array result).  Bodies are immutable once constructed.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.spatial import QhullError

from .quadrature import check_dim, sphere_rule


def unit(xi) -> np.ndarray:
    """Normalize a direction; zero vectors are rejected."""
    v = np.asarray(xi, dtype=float).reshape(-1)
    r = float(np.linalg.norm(v))
    if not np.isfinite(r) or r < 1e-14:
        raise ValueError("direction must be a nonzero finite vector")
    return v / r


def _stack(u, dim: int):
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise ValueError(f"expected vectors of dimension {dim}, got shape {np.shape(u)}")
    return arr, single


def _out(vals, single):
    vals = np.asarray(vals, dtype=float)
    return float(vals[0]) if single else vals


class Body:
    """Base class.  Subclasses implement ``_support`` and ``_gauge`` on stacks."""

    kind = "body"
    dim: int

    # stack-level hooks
    def _support(self, u: np.ndarray) -> np.ndarray:
        return support_by_search(self, u)

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(x.shape[0])
        nz = r > 0
        out[nz] = r[nz] / self._radial(x[nz] / r[nz, None])
        return out

    def _radial(self, u: np.ndarray) -> np.ndarray:
        return 1.0 / self._gauge(u)

    # public API
    def support(self, u):
        arr, single = _stack(u, self.dim)
        return _out(self._support(arr), single)

    def radial(self, u):
        arr, single = _stack(u, self.dim)
        if np.any(np.linalg.norm(arr, axis=1) == 0):
            raise ValueError("radial function is undefined at the zero vector")
        return _out(self._radial(arr), single)

    def gauge(self, x):
        arr, single = _stack(x, self.dim)
        return _out(self._gauge(arr), single)

    def contains(self, x, tol: float = 1e-12):
        arr, single = _stack(x, self.dim)
        inside = self._gauge(arr) <= 1.0 + tol
        return bool(inside[0]) if single else inside

    @property
    def has_gauge_gradient(self) -> bool:
        return False

    def gauge_gradient(self, x) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no analytic gauge gradient")

    @property
    def symmetric(self) -> bool:
        rule = sphere_rule(self.dim, 64 if self.dim == 2 else 8)
        h = self._support(rule.nodes)
        return bool(np.max(np.abs(h - h[rule.antipode])) <= 1e-9 * max(1.0, h.max()))

    def volume(self, rule=None) -> float:
        """Volume by the polar formula ``(1/n) int rho^n``."""
        rule = sphere_rule(self.dim) if rule is None else rule
        rho = self._radial(rule.nodes)
        return math.fsum(rule.weights * rho**self.dim) / self.dim

    def bounding_radius(self) -> float:
        rule = sphere_rule(self.dim, 256 if self.dim == 2 else 16)
        return float(self._radial(rule.nodes).max()) * 1.05

    def polar(self) -> "Body":
        return PolarBody(self)


def support_by_search(body: Body, u: np.ndarray) -> np.ndarray:
    """Support values from the radial function: ``max_v rho(v) v . u``.

    A coarse scan over directions is refined by local optimization, which is
    accurate because the objective is flat at its maximum.
    """
    u = np.atleast_2d(u)
    dim = body.dim
    norms = np.linalg.norm(u, axis=1)
    out = np.zeros(u.shape[0])
    if dim == 2:
        grid = 2.0 * np.pi * np.arange(1440) / 1440
        dirs = np.stack([np.cos(grid), np.sin(grid)], 1)
        pts = dirs * body._radial(dirs)[:, None]
        best = np.argmax(u @ pts.T, axis=1)
        step = grid[1]

        def radial_at(a):
            d = np.array([[math.cos(a), math.sin(a)]])
            return float(body._radial(d)[0]), d[0]

        for i in range(u.shape[0]):
            if norms[i] == 0:
                continue
            ui = u[i]

            def neg(a):
                r, d = radial_at(a)
                return -r * float(d @ ui)

            a0 = grid[best[i]]
            res = minimize_scalar(neg, bounds=(a0 - step, a0 + step), method="bounded",
                                  options={"xatol": 1e-11})
            out[i] = max(-res.fun, float(pts[best[i]] @ ui))
        return out
    rule = sphere_rule(3, 32)
    dirs = rule.nodes
    pts = dirs * body._radial(dirs)[:, None]
    best = np.argmax(u @ pts.T, axis=1)
    for i in range(u.shape[0]):
        if norms[i] == 0:
            continue
        ui = u[i]
        v0 = dirs[best[i]]
        e1 = np.cross(v0, [1.0, 0.0, 0.0] if abs(v0[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(v0, e1)

        def neg(ab):
            v = v0 + ab[0] * e1 + ab[1] * e2
            v = v / np.linalg.norm(v)
            return -float(body._radial(v[None, :])[0]) * float(v @ ui)

        res = minimize(neg, np.zeros(2), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-15, "initial_simplex": [[0, 0], [0.05, 0], [0, 0.05]]})
        out[i] = max(-res.fun, float(pts[best[i]] @ ui))
    return out


class Ellipsoid(Body):
    """Image ``A B^n`` of the Euclidean unit ball."""

    kind = "ellipsoid"

    def __init__(self, matrix):
        a = np.array(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("ellipsoid matrix must be square")
        self.dim = check_dim(a.shape[0])
        det = float(np.linalg.det(a))
        if not np.all(np.isfinite(a)) or abs(det) < 1e-12:
            raise ValueError("ellipsoid matrix must be finite and nonsingular")
        a.setflags(write=False)
        self.matrix = a
        self._inv = np.linalg.inv(a)

    @property
    def det(self) -> float:
        return abs(float(np.linalg.det(self.matrix)))

    def _support(self, u):
        return np.linalg.norm(u @ self.matrix, axis=1)

    def _gauge(self, x):
        return np.linalg.norm(x @ self._inv.T, axis=1)

    @property
    def has_gauge_gradient(self) -> bool:
        return True

    def gauge_gradient(self, x):
        x = np.atleast_2d(x)
        w = x @ self._inv.T
        return (w @ self._inv) / np.linalg.norm(w, axis=1)[:, None]

    def support_gradient(self, u):
        u = np.atleast_2d(u)
        w = u @ self.matrix
        return (w @ self.matrix.T) / np.linalg.norm(w, axis=1)[:, None]

    @property
    def symmetric(self) -> bool:
        return True

    def volume(self, rule=None) -> float:
        from .lp_transforms import omega

        return self.det * omega(self.dim)

    def bounding_radius(self) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])

    def polar(self) -> "Ellipsoid":
        return Ellipsoid(self._inv.T)

    def surface_density(self, u):
        """Density of the surface area measure w.r.t. spherical Lebesgue measure."""
        u = np.atleast_2d(u)
        return self.det**2 * np.linalg.norm(u @ self.matrix, axis=1) ** (-(self.dim + 1))


class Ball(Ellipsoid):
    kind = "ball"

    def __init__(self, dim: int, radius: float = 1.0):
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        self.radius = float(radius)
        super().__init__(self.radius * np.eye(check_dim(dim)))


class Polytope(Body):
    """Convex hull of finitely many points, origin strictly inside."""

    kind = "polytope"

    def __init__(self, vertices):
        pts = np.array(vertices, dtype=float)
        if pts.ndim != 2:
            raise ValueError("vertices must be a 2-d array")
        self.dim = check_dim(pts.shape[1])
        if not np.all(np.isfinite(pts)):
            raise ValueError("vertices must be finite")
        try:
            hull = ConvexHull(pts)
        except (QhullError, ValueError) as exc:
            raise ValueError(f"degenerate polytope: {exc}".splitlines()[0]) from None
        self.vertices = pts[hull.vertices]
        eq = hull.equations
        normals = eq[:, :-1]
        offsets = -eq[:, -1]
        scale = max(1.0, float(np.abs(pts).max()))
        if np.any(offsets <= 1e-12 * scale):
            raise ValueError("polytope must contain the origin in its interior")
        # merge coplanar simplices into facets
        key = np.round(np.concatenate([normals, offsets[:, None] / scale], 1), 9)
        _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.ravel()
        simp = pts[hull.simplices]
        if self.dim == 2:
            areas = np.linalg.norm(simp[:, 1] - simp[:, 0], axis=1)
        else:
            areas = 0.5 * np.linalg.norm(np.cross(simp[:, 1] - simp[:, 0], simp[:, 2] - simp[:, 0]), axis=1)
        order = np.argsort(first)
        self.normals = normals[first[order]]
        self.offsets = offsets[first[order]]
        remap = np.empty_like(order)
        remap[order] = np.arange(order.size)
        group = remap[inverse]
        self.areas = np.bincount(group, weights=areas, minlength=order.size)
        self.facet_vertices = [np.unique(hull.simplices[group == i]) for i in range(order.size)]
        self._points = pts
        self._hull_volume = float(hull.volume)
        check = np.max(self.vertices @ self.normals.T, axis=0)
        if np.max(np.abs(check - self.offsets)) > 1e-9 * scale:
            raise ValueError("inconsistent facet data")

    def _support(self, u):
        return np.max(u @ self.vertices.T, axis=1)

    def _gauge(self, x):
        return np.maximum(np.max(x @ (self.normals / self.offsets[:, None]).T, axis=1), 0.0)

    @property
    def has_gauge_gradient(self) -> bool:
        return True

    def gauge_gradient(self, x):
        x = np.atleast_2d(x)
        scaled = self.normals / self.offsets[:, None]
        return scaled[np.argmax(x @ scaled.T, axis=1)]

    def support_gradient(self, u):
        u = np.atleast_2d(u)
        return self.vertices[np.argmax(u @ self.vertices.T, axis=1)]

    @property
    def symmetric(self) -> bool:
        v = self.vertices
        d = np.linalg.norm(v[:, None, :] + v[None, :, :], axis=2)
        return bool(np.all(d.min(axis=1) <= 1e-9 * max(1.0, np.abs(v).max())))

    def volume(self, rule=None) -> float:
        return self._hull_volume

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def polar(self) -> "Polytope":
        return Polytope(self.normals / self.offsets[:, None])

    def transformed(self, matrix) -> "Polytope":
        return Polytope(self.vertices @ np.asarray(matrix, dtype=float).T)


class PolarBody(Body):
    """Polar ``K° = {x : x . y <= 1 for all y in K}`` of another body."""

    kind = "polar"

    def __init__(self, source: Body):
        self.source = source
        self.dim = source.dim

    def _support(self, u):
        r = np.linalg.norm(u, axis=1)
        out = np.zeros(u.shape[0])
        nz = r > 0
        out[nz] = r[nz] / self.source._radial(u[nz] / r[nz, None])
        return out

    def _gauge(self, x):
        return self.source._support(x)

    @property
    def has_gauge_gradient(self) -> bool:
        return hasattr(self.source, "support_gradient")

    def gauge_gradient(self, x):
        return self.source.support_gradient(np.atleast_2d(x))

    @property
    def symmetric(self) -> bool:
        return self.source.symmetric

    def polar(self) -> Body:
        return self.source


class GaugeBody(Body):
    """Body given by an explicit gauge with an analytic gradient."""

    @property
    def has_gauge_gradient(self) -> bool:
        return True


class NormBody(GaugeBody):
    """Unit ball of ``x -> (sum_i |b_i . x|^q)^(1/q)`` for rows ``b_i``.

    With more rows than the dimension and ``q > 2`` the body is smooth with
    positive curvature but not an ellipsoid, which makes it a useful test
    shape.
    """

    kind = "norm"

    def __init__(self, rows, q: float):
        b = np.array(rows, dtype=float)
        if b.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        self.dim = check_dim(b.shape[1])
        if np.linalg.matrix_rank(b) < self.dim:
            raise ValueError("rows must span the space")
        if not q > 1:
            raise ValueError("norm exponent must exceed 1")
        self.rows = b
        self.q = float(q)

    def _gauge(self, x):
        return np.sum(np.abs(x @ self.rows.T) ** self.q, axis=1) ** (1.0 / self.q)

    def gauge_gradient(self, x):
        x = np.atleast_2d(x)
        s = x @ self.rows.T
        g = np.sum(np.abs(s) ** self.q, axis=1) ** (1.0 / self.q)
        w = np.sign(s) * np.abs(s) ** (self.q - 1.0)
        return (w @ self.rows) / (g ** (self.q - 1.0))[:, None]

    @property
    def symmetric(self) -> bool:
        return True

    def _support(self, u):
        # dual norm: min ||c||_{q*} subject to rows^T c = u
        qs = self.q / (self.q - 1.0)
        bt = self.rows.T
        c0 = u @ np.linalg.pinv(bt).T
        k = self.rows.shape[0]
        if k == self.dim:
            return np.sum(np.abs(c0) ** qs, axis=1) ** (1.0 / qs)
        if k != self.dim + 1:
            return support_by_search(self, u)
        null = np.linalg.svd(bt)[2][-1]

        def slope(z):
            c = c0 + z[:, None] * null
            return (np.sign(c) * np.abs(c) ** (qs - 1.0)) @ null

        lo = -np.ones(u.shape[0])
        hi = np.ones(u.shape[0])
        for _ in range(200):
            bad = slope(lo) > 0
            bad |= slope(hi) < 0
            if not bad.any():
                break
            lo = np.where(slope(lo) > 0, 2 * lo, lo)
            hi = np.where(slope(hi) < 0, 2 * hi, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            pos = slope(mid) > 0
            hi = np.where(pos, mid, hi)
            lo = np.where(pos, lo, mid)
        z = 0.5 * (lo + hi)
        c = c0 + z[:, None] * null
        return np.sum(np.abs(c) ** qs, axis=1) ** (1.0 / qs)


class Lens(GaugeBody):
    """Intersection of Euclidean balls ``B(c_i, r_i)``, origin inside each."""

    kind = "lens"

    def __init__(self, centers, radii):
        c = np.array(centers, dtype=float)
        r = np.array(radii, dtype=float).reshape(-1)
        if c.ndim != 2 or c.shape[0] != r.size or r.size < 1:
            raise ValueError("need one radius per center")
        self.dim = check_dim(c.shape[1])
        alpha = r**2 - np.sum(c**2, axis=1)
        if np.any(alpha <= 0):
            raise ValueError("every ball must contain the origin in its interior")
        self.centers, self.radii, self._alpha = c, r, alpha

    def _each(self, x):
        xc = x @ self.centers.T
        xx = np.sum(x * x, axis=1)[:, None]
        root = np.sqrt(xc**2 + self._alpha * xx)
        return (root - xc) / self._alpha, xc, root

    def _gauge(self, x):
        return self._each(x)[0].max(axis=1)

    def gauge_gradient(self, x):
        x = np.atleast_2d(x)
        t, xc, root = self._each(x)
        i = np.argmax(t, axis=1)
        rows = np.arange(x.shape[0])
        c = self.centers[i]
        a = self._alpha[i]
        rt = np.where(root[rows, i] > 0, root[rows, i], 1.0)
        return (-c + (xc[rows, i][:, None] * c + a[:, None] * x) / rt[:, None]) / a[:, None]

    @property
    def symmetric(self) -> bool:
        if self.centers.shape[0] != 2:
            return super().symmetric
        return bool(np.allclose(self.centers[0], -self.centers[1]) and np.isclose(*self.radii))


class SupportSampled(Body):
    """Body known through support values at the nodes of a sphere rule.

    Off-node support values are interpolated (``"first-order"``: linear in
    the angles; ``"nearest"``).  Radial, gauge and membership queries use the
    Wulff polytope ``{x : x . u_j <= h_j}``.
    """

    kind = "support_sampled"

    def __init__(self, rule, values, interpolation: str = "first-order", symmetric: bool | None = None):
        vals = np.array(values, dtype=float).reshape(-1)
        if vals.size != rule.size:
            raise ValueError(f"expected {rule.size} support values, got {vals.size}")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError("support samples must be positive and finite")
        if interpolation not in ("first-order", "nearest"):
            raise ValueError(f"unknown interpolation {interpolation!r}")
        self.rule = rule
        self.dim = rule.dim
        self.values = vals
        self.interpolation = interpolation
        self._symmetric = symmetric
        self._wulff = None

    @property
    def symmetric(self) -> bool:
        if self._symmetric is not None:
            return self._symmetric
        return bool(np.max(np.abs(self.values - self.values[self.rule.antipode])) <= 1e-9 * self.values.max())

    @property
    def wulff(self) -> Polytope:
        if self._wulff is None:
            u, h = self.rule.nodes, self.values
            if self.dim == 2:
                nxt = np.roll(np.arange(u.shape[0]), -1)
                order = np.argsort(self.rule.angles)
                u, h = u[order], h[order]
                a = np.stack([u, u[nxt]], axis=1)
                b = np.stack([h, h[nxt]], axis=1)
                verts = np.linalg.solve(a, b[..., None])[..., 0]
            else:
                hs = np.concatenate([u, -h[:, None]], axis=1)
                verts = HalfspaceIntersection(hs, np.zeros(3)).intersections
            self._wulff = Polytope(verts)
        return self._wulff

    def _gauge(self, x):
        return self.wulff._gauge(x)

    def _support(self, u):
        r = np.linalg.norm(u, axis=1)
        safe = np.where(r > 0, r, 1.0)
        v = u / safe[:, None]
        return np.where(r > 0, r * self._interp(v), 0.0)

    def _interp(self, v):
        rule = self.rule
        if self.interpolation == "nearest":
            return self.values[np.argmax(v @ rule.nodes.T, axis=1)]
        if self.dim == 2:
            n = rule.order
            ang = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2.0 * np.pi)
            pos = ang / (2.0 * np.pi) * n
            i0 = np.floor(pos).astype(int) % n
            frac = pos - np.floor(pos)
            grid = self._grid_values()
            return (1 - frac) * grid[i0] + frac * grid[(i0 + 1) % n]
        grid = self._grid_values()
        t = rule.polar
        nphi = 2 * rule.order
        tz = np.clip(v[:, 2], t[0], t[-1])
        j = np.clip(np.searchsorted(t, tz) - 1, 0, t.size - 2)
        ft = (tz - t[j]) / (t[j + 1] - t[j])
        pos = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2.0 * np.pi) / (2.0 * np.pi) * nphi
        k0 = np.floor(pos).astype(int) % nphi
        fp = pos - np.floor(pos)
        k1 = (k0 + 1) % nphi
        g0 = (1 - fp) * grid[j, k0] + fp * grid[j, k1]
        g1 = (1 - fp) * grid[j + 1, k0] + fp * grid[j + 1, k1]
        return (1 - ft) * g0 + ft * g1

    def _grid_values(self):
        # node values arranged on the (angle) or (polar, azimuth) grid
        rule = self.rule
        if rule.dim == 2:
            order = np.argsort(np.mod(rule.angles, 2.0 * np.pi))
            return self.values[order]
        return self.values.reshape(rule.grid_shape)

    def volume(self, rule=None) -> float:
        from .lp_transforms import surface_density_from_support

        dens = surface_density_from_support(self.rule, self.values)
        return math.fsum(self.rule.weights * self.values * dens) / self.dim

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.wulff.vertices, axis=1).max())


def frame(xi, dim: int | None = None) -> np.ndarray:
    """Orthonormal frame with ``xi`` as last column.

    The complement comes from Gram-Schmidt on the coordinate vectors, taken
    in order of increasing ``|e_i . xi|`` (ties broken by index).
    """
    xi = unit(xi)
    dim = xi.size if dim is None else dim
    check_dim(dim)
    if xi.size != dim:
        raise ValueError("direction has the wrong dimension")
    cols = [xi]
    for i in sorted(range(dim), key=lambda i: (abs(xi[i]), i)):
        v = np.eye(dim)[i]
        for c in cols:
            v = v - (v @ c) * c
        nv = np.linalg.norm(v)
        if nv > 1e-8 and len(cols) < dim:
            cols.append(v / nv)
    basis = np.stack(cols[1:] + [xi], axis=1)
    return basis
