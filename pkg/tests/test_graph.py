import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpgeom.bodies import Ball, Ellipsoid, Lens, NormBody, Polytope, unit
from lpgeom.domains import IntervalBase, PolygonBase
from lpgeom.graph import bracket, graph_decompose, section_length, tabulated_graph

NORM2 = NormBody([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]], 4.0)
NORM3 = NormBody([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], [1, -1, 0.5]], 4.0)


def test_ball_graph_closed_form():
    gb = graph_decompose(Ball(2), [0.0, 1.0])
    y = np.array([[0.0], [0.6], [-0.8]])
    assert np.allclose(gb.f(y), np.sqrt(1 - y[:, 0] ** 2))
    assert np.allclose(gb.g(y), np.sqrt(1 - y[:, 0] ** 2))
    assert isinstance(gb.base, IntervalBase)
    assert gb.base.hi == pytest.approx(1.0)


def test_ellipse_section_length():
    e = Ellipsoid(np.diag([1.0, 2.0]))
    assert section_length(e, [0.0, 1.0], [0.0]) == pytest.approx(4.0)
    assert section_length(e, [0.0, 1.0], [0.6]) == pytest.approx(4.0 * 0.8)
    assert section_length(e, [0.0, 1.0], [1.5]) == 0.0


@pytest.mark.parametrize("body", [Ellipsoid(np.array([[1.0, 0.6], [0.0, 2.0]])), NORM2,
                                  Lens([[0.5, 0.0], [-0.5, 0.0]], [1.2, 1.2])])
@pytest.mark.parametrize("xi", [[1.0, 0.0], [1.0, 1.0], [math.cos(1.0), math.sin(1.0)]])
def test_graph_points_lie_on_boundary(body, xi):
    gb = graph_decompose(body, xi)
    y = gb.planar_rule(8).nodes
    top = gb.join(y, gb.f(y))
    bot = gb.join(y, -gb.g(y))
    assert np.allclose(body.gauge(top), 1.0, atol=1e-10)
    assert np.allclose(body.gauge(bot), 1.0, atol=1e-10)


@pytest.mark.parametrize("body", [Ellipsoid(np.diag([1.0, 1.5, 2.0])), NORM3])
def test_graph_volume_matches_body(body):
    gb = graph_decompose(body, unit([0.3, -0.5, 0.81]))
    pr = gb.planar_rule(32)
    y = pr.nodes
    vol = pr.integrate(gb.f(y) + gb.g(y))
    assert vol == pytest.approx(body.volume(), rel=1e-6)


@pytest.mark.parametrize("body", [NORM2, Ellipsoid(np.array([[1.0, 0.6], [0.0, 2.0]]))])
def test_graph_gradient_and_bracket(body):
    gb = graph_decompose(body, [1.0, 1.0])
    y = np.array([[0.2], [-0.3]])
    h = 1e-6
    fd = (gb.f(y + h) - gb.f(y - h)) / (2 * h)
    assert np.allclose(gb.grad_f(y)[:, 0], fd, rtol=1e-6, atol=1e-8)
    # <f> is the support of the body at the graph normal (-grad f, 1)
    normal = gb.join(np.zeros((2, 1)), np.ones(2)) - gb.join(gb.grad_f(y), np.zeros(2))
    assert np.allclose(gb.bracket_f(y), body.support(normal), rtol=1e-8)
    assert bracket(gb, "f", [0.2]) == pytest.approx(gb.bracket_f(y)[0])


def test_bracket_rejects_points_outside():
    gb = graph_decompose(Ball(2), [0.0, 1.0])
    with pytest.raises(ValueError):
        bracket(gb, "f", [1.0])


def test_polytope_graph_is_exact():
    body = Polytope([[2, 0], [1, 1.5], [-2, 0], [-1, -1.5]])
    gb = graph_decompose(body, [0.0, 1.0])
    assert gb.exact is body
    y = gb.planar_rule(8).nodes
    assert np.allclose(body.gauge(gb.join(y, gb.f(y))), 1.0)
    cube = Polytope(np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).reshape(3, -1).T)
    assert isinstance(graph_decompose(cube, [1.0, 1.0, 1.0]).base, PolygonBase)


def test_graph_of_graph_body_reuses_axis():
    gb = graph_decompose(Ball(2), [1.0, 0.0])
    assert graph_decompose(gb, [1.0, 0.0]) is gb


def test_tabulated_graph_validation():
    y = np.linspace(-1, 1, 5)
    with pytest.raises(ValueError):
        tabulated_graph([0, 1], y, np.ones(5), -2 * np.ones(5))
    with pytest.raises(ValueError):
        tabulated_graph([0, 1], y[::-1], np.ones(5), np.ones(5))
    with pytest.raises(ValueError):
        tabulated_graph([0, 0, 1], y, np.ones(5), np.ones(5))


def test_tabulated_graph_reproduces_table():
    y = np.linspace(-1, 1, 41)
    f = np.sqrt(1 - y**2) + 0.1
    g = np.sqrt(1 - y**2) - 0.1
    gb = tabulated_graph([0.0, 1.0], y, f, g)
    assert np.allclose(gb.f(y[:, None]), f)
    assert gb.base.lo == -1.0


@given(st.floats(0.3, 3.0), st.floats(-1.0, 1.0), st.floats(0.0, 2 * math.pi))
def test_ellipse_graph_chords(a, b, angle):
    e = Ellipsoid(np.array([[a, b], [0.0, 1.0]]))
    xi = [math.cos(angle), math.sin(angle)]
    gb = graph_decompose(e, xi)
    y = np.array([[0.5 * gb.base.lo], [0.0], [0.5 * gb.base.hi]])
    assert np.all(gb.f(y) + gb.g(y) > 0)
    assert np.allclose(e.gauge(gb.join(y, gb.f(y))), 1.0, atol=1e-12)
