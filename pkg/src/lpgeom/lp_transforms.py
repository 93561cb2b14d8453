"""L^p projection and centroid bodies.

Support functions are evaluated through their ``p``-th powers

    h^p_{Pi~ K}(x)    = int |xi . x|^p dS_{p,K}(xi)
    h^p_{Gamma~ K}(x) = int rho_K(xi)^(n+p) |xi . x|^p dxi

and the normalized operators divide by ``d_{n,p}`` and ``b_{n,p} |K|``.  The
surface measure can be produced by several routes:

``facets``      polytope facet atoms (exact)
``graph``       graph integrals over the projection along an axis
``pushforward`` boundary parametrization through the gauge gradient
``density``     curvature density times ``h^(1-p)`` on a sphere rule
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .bodies import Body, Ellipsoid, PolarBody, Polytope, SupportSampled
from .quadrature import (
    SphereRule,
    abs_pow,
    check_dim,
    power_sum,
    power_sum_gradient,
    sphere_rule,
    zonal_transform,
)


def omega(q: float) -> float:
    """Volume of the unit ball in R^q, ``pi^(q/2) / Gamma(1 + q/2)``, for real q > 0."""
    return math.exp(0.5 * q * math.log(math.pi) - gammaln(1.0 + 0.5 * q))


@dataclass(frozen=True)
class LpParams:
    p: float
    n: int

    def __post_init__(self):
        check_dim(self.n)
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise ValueError(f"exponent p must be a finite number > 1, got {self.p}")


def constants(params: LpParams):
    """``(b_{n,p}, d_{n,p}, omega)`` for the normalized operators."""
    n, p = params.n, params.p
    b = (n + p) * omega(n + p) / (omega(2) * omega(n) * omega(p - 1))
    d = 2.0 * omega(n + p - 2) / omega(p - 1)
    return b, d, omega


class DiscreteLpMeasure:
    """Finite measure ``sum_i w_i delta_{u_i}`` evaluated against ``|x . u|^p``.

    Atoms with non-unit directions are normalized, moving ``|u|^p`` into the
    weight.  Nonpositive weights are dropped and counted.
    """

    def __init__(self, directions, weights, p: float):
        u = np.array(directions, dtype=float)
        w = np.array(weights, dtype=float).reshape(-1)
        r = np.linalg.norm(u, axis=1)
        keep = (w > 0) & (r > 0) & np.isfinite(w)
        self.dropped = int(np.sum(~keep))
        u, w, r = u[keep], w[keep], r[keep]
        self.directions = u / r[:, None]
        self.weights = w * r**p
        self.p = float(p)
        self._quad = None

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    @property
    def quadratic_form(self) -> np.ndarray:
        if self._quad is None:
            u = self.directions
            self._quad = (u * self.weights[:, None]).T @ u
        return self._quad

    def power(self, x) -> np.ndarray:
        """``sum_i w_i |x . u_i|^p`` at rows of ``x``."""
        x = np.atleast_2d(x)
        if self.p == 2.0:
            return np.einsum("ij,jk,ik->i", x, self.quadratic_form, x)
        return power_sum(self.directions, self.weights, x, self.p)

    def gradient(self, x) -> np.ndarray:
        """Gradient of ``power / p``."""
        x = np.atleast_2d(x)
        if self.p == 2.0:
            return x @ self.quadratic_form
        return power_sum_gradient(self.directions, self.weights, x, self.p)

    def support(self, x) -> np.ndarray:
        return self.power(x) ** (1.0 / self.p)

    def symmetric(self, tol: float = 1e-12) -> bool:
        u, w = self.directions, self.weights
        d = np.linalg.norm(u[:, None, :] + u[None, :, :], axis=2)
        j = np.argmin(d, axis=1)
        return bool(np.all(d[np.arange(u.shape[0]), j] <= tol) and np.allclose(w, w[j], rtol=tol, atol=0))


class SpectralPower:
    """``x -> int G(xi) |xi . x|^p dxi`` from node samples of ``G``."""

    def __init__(self, rule: SphereRule, density: np.ndarray, p: float):
        self.rule = rule
        self.density = np.asarray(density, dtype=float)
        self.p = float(p)
        self._nodes = None

    def power(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        if x is self.rule.nodes or (x.shape == self.rule.nodes.shape and np.array_equal(x, self.rule.nodes)):
            return self.power_at_nodes()
        return zonal_transform(self.rule, self.density, self.p, points=x)

    def power_at_nodes(self) -> np.ndarray:
        if self._nodes is None:
            self._nodes = zonal_transform(self.rule, self.density, self.p)
        return self._nodes

    def gradient(self, x) -> np.ndarray:
        return power_sum_gradient(self.rule.nodes, self.rule.weights * self.density, np.atleast_2d(x), self.p)


def surface_density_from_support(rule: SphereRule, h: np.ndarray) -> np.ndarray:
    """Density of the surface area measure from support samples at rule nodes.

    On the circle this is ``h + h''``; on the sphere it is the determinant of
    the spherical Hessian of ``h`` plus ``h`` times the identity.  Both are
    computed spectrally, so ``h`` should be smooth.
    """
    h = np.asarray(h, dtype=float).reshape(rule.size)
    tr = rule.transform
    if rule.dim == 2:
        c = tr.forward(h)
        return h + tr.synthesize(tr.derivative(c, 2))
    grid = h.reshape(rule.grid_shape)
    c = tr.forward(grid)
    t = rule.polar[:, None]
    st = np.sqrt(1.0 - t * t)
    cot = t / st
    ell = np.arange(tr.lmax + 1)
    m = np.arange(tr.lmax + 1)
    h_t = tr.synthesize(c, tr.dtable)
    h_p = tr.synthesize_phi(c, 1)
    h_pp = tr.synthesize_phi(c, 2)
    h_tp = tr.synthesize_phi(c, 1, tr.dtable)
    # second theta derivative from the associated Legendre equation
    lam = (ell * (ell + 1))[None, :, None] - (m * m)[:, None, None] / (st.ravel() ** 2)[None, None, :]
    d2 = -(cot.ravel())[None, None, :] * tr.dtable - lam * tr.table
    h_tt = tr.synthesize(c, d2)
    a11 = h_tt + grid
    a12 = (h_tp - cot * h_p) / st
    a22 = h_pp / st**2 + cot * h_t + grid
    return (a11 * a22 - a12 * a12).ravel()


_CACHE: "weakref.WeakKeyDictionary[Body, dict]" = weakref.WeakKeyDictionary()


def _cached(body: Body, key, build):
    store = _CACHE.setdefault(body, {})
    if key not in store:
        store[key] = build()
    return store[key]


def default_route(body: Body) -> str:
    if isinstance(body, Polytope):
        return "facets"
    if isinstance(body, (Ellipsoid, SupportSampled)):
        return "density"
    from .graph import GraphBody

    if isinstance(body, GraphBody):
        return "facets" if isinstance(body.exact, Polytope) else "graph"
    if body.has_gauge_gradient:
        return "pushforward"
    return "density"


def lp_surface_measure(body: Body, params: LpParams, route: str | None = None, rule: SphereRule | None = None,
                       axis=None, planar_res: int | None = None, grading: float | None = None,
                       surface: str = "both", t: float = 0.0) -> DiscreteLpMeasure:
    """Discrete approximation (exact for polytopes) of ``S_{p,K}``."""
    if params.n != body.dim:
        raise ValueError("parameter dimension does not match the body")
    route = default_route(body) if route is None else route
    p = params.p
    if route == "facets":
        from .graph import GraphBody

        poly = body.exact if isinstance(body, GraphBody) else body
        if not isinstance(poly, Polytope):
            raise TypeError("facet route needs a polytope")
        return DiscreteLpMeasure(poly.normals, poly.offsets ** (1.0 - p) * poly.areas, p)
    if route == "graph":
        from .graph import GraphBody, graph_decompose

        if isinstance(body, GraphBody) and (axis is None or np.allclose(axis, body.axis)):
            gb = body
        else:
            gb = graph_decompose(body, np.eye(body.dim)[-1] if axis is None else axis)
        pr = gb.planar_rule(planar_res, grading)
        return graph_measure(gb, params, pr, t=t, surface=surface)
    rule = sphere_rule(body.dim) if rule is None else rule
    if route == "pushforward":
        if not body.has_gauge_gradient:
            raise TypeError("pushforward route needs a gauge gradient")
        xi = rule.nodes
        phi = body._gauge(xi)
        grad = body.gauge_gradient(xi)
        return DiscreteLpMeasure(grad, rule.weights * phi ** (-body.dim), p)
    if route == "density":
        return DiscreteLpMeasure(rule.nodes, rule.weights * _density_weights(body, rule, p), p)
    raise ValueError(f"unknown route {route!r}")


def _density_weights(body: Body, rule: SphereRule, p: float) -> np.ndarray:
    if isinstance(body, Ellipsoid):
        h = body._support(rule.nodes)
        return h ** (1.0 - p) * body.surface_density(rule.nodes)
    if isinstance(body, SupportSampled) and body.rule is rule:
        h = body.values
    else:
        h = body._support(rule.nodes)
    return h ** (1.0 - p) * surface_density_from_support(rule, h)


def graph_measure(gb, params: LpParams, rule, t: float = 0.0, surface: str = "both") -> DiscreteLpMeasure:
    """Atoms of ``S_{p}`` of the Steiner image ``S^t K`` from graph data.

    The upper surface contributes directions ``(-grad f_t, 1)`` with weights
    ``<f_t>^(1-p)`` and the lower surface ``(-grad g_t, -1)`` with
    ``<g_t>^(1-p)``.  ``surface="upper"`` (or ``"lower"``) doubles one
    sheet, which is exact for origin-symmetric bodies.
    """
    p = params.p
    if isinstance(gb.exact, Polytope) and np.any(np.abs(gb.exact.normals @ gb.axis) <= 1e-12):
        # facets parallel to the axis project to the boundary of the base and carry no graph area
        raise ValueError("polytope has facets parallel to the graph axis; use the facet route or another axis")
    data = gb.data(rule)
    a, b = 1.0 - 0.5 * t, 0.5 * t
    dirs, wts = [], []
    k = rule.size
    if surface in ("both", "upper"):
        grad = a * data.grad_f + b * data.grad_g
        brk = a * data.bracket_f + b * data.bracket_g
        dirs.append(np.concatenate([-grad, np.ones((k, 1))], 1))
        wts.append(rule.weights * brk ** (1.0 - p))
    if surface in ("both", "lower"):
        grad = a * data.grad_g + b * data.grad_f
        brk = a * data.bracket_g + b * data.bracket_f
        dirs.append(np.concatenate([-grad, -np.ones((k, 1))], 1))
        wts.append(rule.weights * brk ** (1.0 - p))
    if not dirs:
        raise ValueError(f"unknown surface {surface!r}")
    scale = 2.0 if surface != "both" else 1.0
    frame_dirs = np.concatenate(dirs) @ gb.frame.T
    return DiscreteLpMeasure(frame_dirs, scale * np.concatenate(wts), p)


def pi_evaluator(body: Body, params: LpParams, rule: SphereRule | None = None, route: str | None = None, **opts):
    """Object with ``power(x) = h^p_{Pi~ K}(x)`` (and usually ``gradient``)."""
    route = default_route(body) if route is None else route
    rule = sphere_rule(body.dim) if rule is None else rule
    key = ("pi", params.p, route, id(rule), tuple(sorted((k, repr(v)) for k, v in opts.items())))
    if route == "density" and opts.get("method", "spectral") == "spectral":
        return _cached(body, key, lambda: SpectralPower(rule, _density_weights(body, rule, params.p), params.p))
    opts.pop("method", None)
    return _cached(body, key, lambda: lp_surface_measure(body, params, route, rule, **opts))


def pi_p_support(body: Body, x, params: LpParams, rule: SphereRule | None = None, route: str | None = None,
                 normalized: bool = False, **opts):
    """Support of ``Pi~_p K`` (or ``Pi_p K`` when normalized) at ``x``."""
    ev = pi_evaluator(body, params, rule, route, **opts)
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    hp = ev.power(xs)
    if normalized:
        hp = hp / constants(params)[1]
    out = np.maximum(hp, 0.0) ** (1.0 / params.p)
    return float(out[0]) if np.ndim(x) == 1 else out


def _radial_samples(body: Body, rule: SphereRule) -> np.ndarray:
    if isinstance(body, TransformedBody) and body.rule is rule and body.radial_nodes is not None:
        return body.radial_nodes
    return body._radial(rule.nodes)


def gamma_evaluator(body: Body, params: LpParams, rule: SphereRule | None = None, method: str = "spectral"):
    rule = sphere_rule(body.dim) if rule is None else rule
    key = ("gamma", params.p, method, id(rule))

    def build():
        dens = _radial_samples(body, rule) ** (body.dim + params.p)
        if method == "direct":
            return DiscreteLpMeasure(rule.nodes, rule.weights * dens, params.p)
        return SpectralPower(rule, dens, params.p)

    return _cached(body, key, build)


def polar_volume(body: Body, rule: SphereRule | None = None) -> float:
    rule = sphere_rule(body.dim) if rule is None else rule
    rho = _radial_samples(body, rule)
    return math.fsum(rule.weights * rho**body.dim) / body.dim


def gamma_p_support(body: Body, x, params: LpParams, rule: SphereRule | None = None, normalized: bool = False,
                    method: str = "spectral"):
    """Support of ``Gamma~_p K`` (or ``Gamma_p K`` when normalized) at ``x``."""
    ev = gamma_evaluator(body, params, rule, method)
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    hp = ev.power(xs)
    if normalized:
        hp = hp / (constants(params)[0] * polar_volume(body, rule))
    out = np.maximum(hp, 0.0) ** (1.0 / params.p)
    return float(out[0]) if np.ndim(x) == 1 else out


def gamma_p_gradient(body: Body, x, params: LpParams, rule: SphereRule | None = None):
    """``grad (h^p_{Gamma~_p K} / p)(x) = int rho^(n+p) |xi.x|^(p-1) sgn(xi.x) xi dxi``."""
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(np.linalg.norm(xs, axis=1) == 0):
        raise ValueError("gradient is evaluated at nonzero points only")
    ev = gamma_evaluator(body, params, rule, "direct")
    out = ev.gradient(xs)
    return out[0] if np.ndim(x) == 1 else out


class TransformedBody(Body):
    """Output of an L^p operator, cached on a sphere rule.

    Support-type kinds (``pi_tilde``, ``pi``, ``gamma_tilde``, ``gamma``,
    ``composed``) evaluate support exactly at any point through the
    underlying integral and use the sampled Wulff shape for radial queries.
    ``pi_polar`` evaluates radial and gauge exactly and support through the
    sampled projection body.
    """

    kinds = ("pi_tilde", "pi", "gamma_tilde", "gamma", "pi_polar", "composed")

    def __init__(self, kind: str, source: Body, params: LpParams, rule: SphereRule, evaluator, scale: float,
                 inner: "TransformedBody | None" = None):
        if kind not in self.kinds:
            raise ValueError(f"unknown transformed kind {kind!r}")
        self.kind = kind
        self.source = source
        self.params = params
        self.rule = rule
        self.dim = source.dim
        self.evaluator = evaluator
        self.scale = float(scale)
        self.inner = inner
        if kind == "pi_polar":
            self.radial_nodes = 1.0 / inner.support_nodes
            self.support_nodes = None
        else:
            hp = evaluator.power_at_nodes() if hasattr(evaluator, "power_at_nodes") else evaluator.power(rule.nodes)
            if np.any(hp <= 0) or not np.all(np.isfinite(hp)):
                raise ValueError(f"{kind} support is not positive at every node")
            self.support_nodes = (self.scale * hp) ** (1.0 / params.p)
            self.radial_nodes = None
        self._sampled = None

    @property
    def sampled(self) -> SupportSampled:
        if self._sampled is None:
            self._sampled = SupportSampled(self.rule, self.support_nodes)
        return self._sampled

    def _power(self, x):
        return self.scale * self.evaluator.power(x)

    def _is_nodes(self, u):
        return u is self.rule.nodes or (u.shape == self.rule.nodes.shape and np.array_equal(u, self.rule.nodes))

    def _support(self, u):
        if self.kind == "pi_polar":
            if self._is_nodes(u):
                return 1.0 / self.inner.sampled._radial(u)
            return PolarBody(self.inner.sampled)._support(u)
        if self._is_nodes(u):
            return self.support_nodes
        return np.maximum(self._power(u), 0.0) ** (1.0 / self.params.p)

    def _gauge(self, x):
        if self.kind == "pi_polar":
            return self.inner._support(x)
        return self.sampled._gauge(x)

    def _radial(self, u):
        if self.kind == "pi_polar" and self._is_nodes(u):
            return self.radial_nodes
        return 1.0 / self._gauge(u)

    @property
    def has_gauge_gradient(self) -> bool:
        return self.kind == "pi_polar" and hasattr(self.inner.evaluator, "gradient")

    def gauge_gradient(self, x):
        inner = self.inner
        x = np.atleast_2d(x)
        h = inner._support(x)
        return inner.scale * inner.evaluator.gradient(x) * (h ** (1.0 - self.params.p))[:, None]

    def support_gradient(self, u):
        if self.kind == "pi_polar" or not hasattr(self.evaluator, "gradient"):
            raise NotImplementedError
        u = np.atleast_2d(u)
        h = self._support(u)
        return self.scale * self.evaluator.gradient(u) * (h ** (1.0 - self.params.p))[:, None]

    @property
    def symmetric(self) -> bool:
        return True

    def bounding_radius(self) -> float:
        if self.kind == "pi_polar":
            return float(self.radial_nodes.max()) * 1.05
        return float(self.support_nodes.max())

    def volume(self, rule=None) -> float:
        if self.kind == "pi_polar" and (rule is None or rule is self.rule):
            return math.fsum(self.rule.weights * self.radial_nodes**self.dim) / self.dim
        return super().volume(rule)


def pi_body(body: Body, params: LpParams, rule: SphereRule | None = None, normalized: bool = False,
            route: str | None = None, **opts) -> TransformedBody:
    rule = sphere_rule(body.dim) if rule is None else rule
    ev = pi_evaluator(body, params, rule, route, **opts)
    scale = 1.0 / constants(params)[1] if normalized else 1.0
    return TransformedBody("pi" if normalized else "pi_tilde", body, params, rule, ev, scale)


def pi_polar_body(body: Body, params: LpParams, rule: SphereRule | None = None, normalized: bool = False,
                  route: str | None = None, **opts) -> TransformedBody:
    """Polar of the (tilde or normalized) L^p projection body."""
    inner = pi_body(body, params, rule, normalized, route, **opts)
    return TransformedBody("pi_polar", body, params, inner.rule, None, 1.0, inner=inner)


def gamma_body(body: Body, params: LpParams, rule: SphereRule | None = None, normalized: bool = False,
               method: str = "spectral") -> TransformedBody:
    rule = sphere_rule(body.dim) if rule is None else rule
    ev = gamma_evaluator(body, params, rule, method)
    scale = 1.0 / (constants(params)[0] * polar_volume(body, rule)) if normalized else 1.0
    return TransformedBody("gamma" if normalized else "gamma_tilde", body, params, rule, ev, scale)


def compose_gamma_pi_polar(body: Body, params: LpParams, rule: SphereRule | None = None, normalized: bool = True,
                           route: str | None = None, method: str = "spectral", **opts) -> TransformedBody:
    """``Gamma_p Pi_p° K`` (or ``Gamma~_p Pi~_p° K`` with ``normalized=False``)."""
    polar_body = pi_polar_body(body, params, rule, normalized, route, **opts)
    g = gamma_body(polar_body, params, polar_body.rule, normalized, method)
    out = TransformedBody("composed", body, params, g.rule, g.evaluator, g.scale, inner=polar_body)
    return out


def node_support(body: Body, rule: SphereRule) -> np.ndarray:
    if isinstance(body, TransformedBody) and body.rule is rule and body.support_nodes is not None:
        return body.support_nodes
    if isinstance(body, SupportSampled) and body.rule is rule:
        return body.values
    return body._support(rule.nodes)


def best_dilation(k: Body, l: Body, rule: SphereRule | None = None):
    """``(defect, c)`` with ``defect = (max r - min r)/2`` for ``r = log(h_L/h_K)``."""
    rule = sphere_rule(k.dim) if rule is None else rule
    r = np.log(node_support(l, rule) / node_support(k, rule))
    hi, lo = float(r.max()), float(r.min())
    return 0.5 * (hi - lo), math.exp(0.5 * (hi + lo))


def dilation_defect(k: Body, l: Body, rule: SphereRule | None = None) -> float:
    return best_dilation(k, l, rule)[0]


def ellipsoid_fit(h: np.ndarray, nodes: np.ndarray):
    """Least-squares quadratic form ``M`` with ``u^T M u ~ h(u)^2``.

    Returns ``(M, defect)`` where the defect is the sup-norm residual relative
    to ``max h^2``; it is infinite if ``M`` is not positive definite.
    """
    n = nodes.shape[1]
    iu = np.triu_indices(n)
    cols = np.stack([nodes[:, i] * nodes[:, j] * (1.0 if i == j else 2.0) for i, j in zip(*iu)], 1)
    target = np.asarray(h, dtype=float) ** 2
    coef, *_ = np.linalg.lstsq(cols, target, rcond=None)
    m = np.zeros((n, n))
    m[iu] = coef
    m = m + m.T - np.diag(np.diag(m))
    resid = np.max(np.abs(cols @ coef - target)) / np.max(target)
    if np.linalg.eigvalsh(m)[0] <= 0:
        return m, math.inf
    return m, float(resid)


def ellipsoid_defect(body: Body, rule: SphereRule | None = None) -> float:
    rule = sphere_rule(body.dim) if rule is None else rule
    return ellipsoid_fit(node_support(body, rule), rule.nodes)[1]


def lp_mixing_bound(a: float, b: float, c: float, d: float, p: float):
    """Both sides of ``(a+b)^p (c+d)^(1-p) <= a^p c^(1-p) + b^p d^(1-p)``.

    Valid for ``a, b >= 0``, ``c, d > 0`` and ``p > 1``; equality holds iff
    ``a d = b c``.  Returns ``(lhs, rhs)``.
    """
    if min(a, b) < 0 or min(c, d) <= 0 or not p > 1:
        raise ValueError("need a, b >= 0, c, d > 0 and p > 1")
    lhs = (a + b) ** p * (c + d) ** (1.0 - p)
    rhs = a**p * c ** (1.0 - p) + b**p * d ** (1.0 - p)
    return lhs, rhs


def abs_kernel(s, p):
    return abs_pow(np.asarray(s, dtype=float), p)
