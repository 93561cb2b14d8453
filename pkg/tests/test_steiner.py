import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpgeom.bodies import Ball, Ellipsoid, Lens, NormBody, Polytope, unit
from lpgeom.graph import graph_decompose
from lpgeom.quadrature import sphere_rule
from lpgeom.steiner import (
    hausdorff_rate,
    midpoint_planarity_defect,
    reflect,
    steiner_compose_check,
    steiner_t,
    steiner_volume,
)

TRIANGLE = Polytope([[0.0, 1.0], [1.0, -1.0], [-1.0, -0.5]])
SHEARED = Ellipsoid(np.array([[1.0, 0.6], [0.0, 2.0]]))
NORM2 = NormBody([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]], 4.0)
LENS = Lens([[0.5, 0.0], [-0.5, 0.0]], [1.2, 1.2])


def test_endpoints_are_identity_and_reflection():
    rule = sphere_rule(2, 256)
    xi = unit([1.0, 1.0])
    assert np.allclose(steiner_t(SHEARED, xi, 0.0).support(rule.nodes), SHEARED.support(rule.nodes))
    assert np.allclose(steiner_t(SHEARED, xi, 2.0).support(rule.nodes), reflect(SHEARED, xi).support(rule.nodes))


def test_classical_symmetral_is_reflection_symmetric():
    for body in (SHEARED, NORM2, TRIANGLE):
        s = steiner_t(body, [1.0, 1.0], 1.0)
        y = s.planar_rule(16).nodes
        assert np.allclose(s.f(y), s.g(y), atol=1e-12)


def test_ellipse_symmetral_is_an_ellipse():
    s = steiner_t(SHEARED, [0.0, 1.0], 0.5)
    assert isinstance(s.exact, Ellipsoid)
    y = s.planar_rule(16).nodes
    assert np.allclose(s.exact.gauge(s.join(y, s.f(y))), 1.0, atol=1e-12)


def test_triangle_chords_slide():
    # chord lengths are kept and midpoints scale by 1 - t
    gb = graph_decompose(TRIANGLE, [0.0, 1.0])
    s = steiner_t(TRIANGLE, [0.0, 1.0], 0.5)
    y = np.array([[0.0], [0.3], [-0.4]])
    assert np.allclose(s.f(y) + s.g(y), gb.f(y) + gb.g(y))
    assert np.allclose(s.f(y) - s.g(y), 0.5 * (gb.f(y) - gb.g(y)))
    assert isinstance(s.exact, Polytope)
    assert s.exact.volume() == pytest.approx(TRIANGLE.volume(), rel=1e-12)


def test_rejects_t_outside_range():
    with pytest.raises(ValueError):
        steiner_t(Ball(2), [1.0, 0.0], 2.5)
    with pytest.raises(ValueError):
        steiner_compose_check(Ball(2), [1.0, 0.0], 0.6, 0.4)


@given(st.floats(0.0, 2.0), st.sampled_from(["sheared", "norm", "lens", "triangle"]))
def test_volume_is_invariant(t, name):
    body = {"sheared": SHEARED, "norm": NORM2, "lens": LENS, "triangle": TRIANGLE}[name]
    ref = body.volume() if name != "lens" else steiner_volume(body, [1.0, 1.0], 0.0)
    assert steiner_volume(body, [1.0, 1.0], t) == pytest.approx(ref, rel=1e-8)


@given(st.floats(0.05, 0.45), st.floats(0.55, 1.0))
def test_composition_identity(t1, t2):
    for body in (SHEARED, NORM2):
        rep = steiner_compose_check(body, [math.cos(1.0), math.sin(1.0)], t1, t2)
        assert rep.passed, rep.worst_violation


@given(st.floats(0.0, 2.0))
def test_reflection_identity(t):
    xi = [1.0, 1.0]
    lhs = steiner_t(NORM2, xi, 2.0 - t)
    rhs = reflect(steiner_t(NORM2, xi, t), xi)
    y = lhs.planar_rule(16).nodes
    assert np.allclose(lhs.f(y), rhs.f(y), atol=1e-12)
    assert np.allclose(lhs.g(y), rhs.g(y), atol=1e-12)


def test_steiner_3d_ellipsoid_and_polytope():
    xi = unit([0.3, -0.5, 0.81])
    e = Ellipsoid(np.diag([1.0, 1.5, 2.0]))
    s = steiner_t(e, xi, 0.7)
    assert s.exact.volume() == pytest.approx(e.volume(), rel=1e-12)
    cube = Polytope(np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).reshape(3, -1).T)
    sc = steiner_t(cube, xi, 0.7)
    assert sc.exact.volume() == pytest.approx(8.0, rel=1e-10)


def test_midpoint_planarity():
    assert midpoint_planarity_defect(SHEARED, [1.0, 1.0]) <= 1e-12
    assert midpoint_planarity_defect(LENS, [1.0, 1.0]) > 1e-2


def test_hausdorff_rate_is_finite_and_linear_for_ellipses():
    rate = hausdorff_rate(SHEARED, [0.0, 1.0], 0.5, [0.4, 0.6])
    assert 0 < rate < 10
