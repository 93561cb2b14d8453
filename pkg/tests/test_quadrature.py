import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import beta

from lpgeom.domains import EllipseBase, IntervalBase, PolygonBase
from lpgeom.quadrature import abs_pow, planar_rule, power_sum, signed_pow, sphere_rule, zonal_transform
from lpgeom.spectral import funk_hecke_eigenvalues


@pytest.mark.parametrize("dim,order", [(2, 16), (2, 2048), (3, 8), (3, 24)])
def test_sphere_rule_total_mass(dim, order):
    rule = sphere_rule(dim, order)
    area = 2 * math.pi if dim == 2 else 4 * math.pi
    assert rule.weights.sum() == pytest.approx(area, rel=1e-14)
    assert np.allclose(np.linalg.norm(rule.nodes, axis=1), 1.0)


@pytest.mark.parametrize("dim", [2, 3])
def test_sphere_rule_antipode(dim):
    rule = sphere_rule(dim, 16)
    assert np.allclose(rule.nodes[rule.antipode], -rule.nodes, atol=1e-15)


def test_sphere_rule_polynomial_exactness():
    rule = sphere_rule(3, 24)
    x, y, z = rule.nodes.T
    assert np.dot(rule.weights, z**2) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    assert np.dot(rule.weights, x**4) == pytest.approx(4 * math.pi / 5, rel=1e-13)
    assert np.dot(rule.weights, x**2 * y**2 * z**2) == pytest.approx(4 * math.pi / 105, rel=1e-12)
    circle = sphere_rule(2, 32)
    c = circle.nodes[:, 0]
    assert np.dot(circle.weights, c**6) == pytest.approx(2 * math.pi * 5 / 16, rel=1e-14)


@pytest.mark.parametrize("order", [3, 5, 2])
def test_sphere_rule_rejects_bad_order(order):
    with pytest.raises(ValueError):
        sphere_rule(2, order)


def test_sphere_rule_rejects_bad_dim():
    with pytest.raises(ValueError):
        sphere_rule(4, 8)


@given(st.floats(-3, 3), st.floats(1.01, 9.0))
def test_signed_and_abs_pow(s, p):
    a = abs_pow(np.array([s]), p)[0]
    assert a == pytest.approx(abs(s) ** p, rel=1e-12, abs=1e-300)
    q = signed_pow(np.array([s]), p)[0]
    assert q == pytest.approx(math.copysign(abs(s) ** p, s), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("dim,p", [(2, 1.5), (2, 3.0), (3, 1.5), (3, 3.0), (3, 6.5)])
def test_funk_hecke_degree_zero(dim, p):
    # the degree-zero eigenvalue is the integral of |xi . e|^p over the sphere
    lam0 = funk_hecke_eigenvalues(dim, p, 4)[0]
    if dim == 2:
        ref = 2 * beta((p + 1) / 2, 0.5)
        num = 4 * quad(lambda a: math.cos(a) ** p, 0, math.pi / 2, epsabs=0, epsrel=1e-12, limit=200)[0]
    else:
        ref = 4 * math.pi / (p + 1)
        num = 4 * math.pi * quad(lambda t: t**p, 0, 1, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert lam0 == pytest.approx(ref, rel=1e-12)
    assert lam0 == pytest.approx(num, rel=1e-9)


def test_funk_hecke_odd_degrees_vanish():
    lam = funk_hecke_eigenvalues(3, 2.5, 9)
    assert np.all(lam[1::2] == 0)


@pytest.mark.parametrize("dim,order", [(2, 64), (3, 16)])
def test_zonal_spectral_matches_direct_for_even_integer_p(dim, order):
    # for p = 2, 4 the kernel is a polynomial and the direct sum is exact
    rule = sphere_rule(dim, order)
    rng = np.random.default_rng(3)
    a = rng.normal(size=(dim, dim))
    dens = np.einsum("ij,jk,ik->i", rule.nodes, a @ a.T + np.eye(dim), rule.nodes)
    for p in (2.0, 4.0):
        spec = zonal_transform(rule, dens, p)
        direct = zonal_transform(rule, dens, p, method="direct")
        assert np.max(np.abs(spec - direct)) <= 1e-11 * np.max(np.abs(direct))


@given(st.integers(0, 2**31 - 1), st.sampled_from([1.5, 2.5, 3.0]))
def test_zonal_transform_is_homogeneous(seed, p):
    rule = sphere_rule(2, 64)
    rng = np.random.default_rng(seed)
    dens = 1.0 + 0.3 * np.cos(2 * np.arctan2(rule.nodes[:, 1], rule.nodes[:, 0]))
    x = rng.normal(size=(1, 2))
    r = rng.uniform(0.1, 3.0)
    v1 = zonal_transform(rule, dens, p, points=x)[0]
    v2 = zonal_transform(rule, dens, p, points=r * x)[0]
    assert v2 == pytest.approx(r**p * v1, rel=1e-10)


def test_power_sum_matches_loop():
    rng = np.random.default_rng(1)
    u = rng.normal(size=(7, 3))
    w = rng.uniform(size=7)
    x = rng.normal(size=(4, 3))
    ref = [sum(w[i] * abs(u[i] @ xx) ** 2.7 for i in range(7)) for xx in x]
    assert np.allclose(power_sum(u, w, x, 2.7), ref, rtol=1e-13)


def test_interval_rule_smooths_sqrt_endpoint():
    rule = planar_rule(IntervalBase(-1.0, 1.0), 16, 2.0)
    val = rule.integrate(np.sqrt(1 - rule.nodes[:, 0] ** 2))
    assert val == pytest.approx(math.pi / 2, rel=1e-12)


def test_interval_rule_breakpoints_integrate_kinks_exactly():
    rule = planar_rule(IntervalBase(-1.0, 2.0), 4, 1.0, breakpoints=np.array([-1.0, 0.3, 2.0]))
    val = rule.integrate(np.abs(rule.nodes[:, 0] - 0.3))
    assert val == pytest.approx(0.5 * 1.3**2 + 0.5 * 1.7**2, rel=1e-14)


def test_ellipse_base_area():
    base = EllipseBase(np.array([[2.0, 0.5], [0.0, 1.0]]))
    rule = planar_rule(base, 32, 2.0)
    assert rule.integrate(np.ones(rule.size)) == pytest.approx(base.area, rel=1e-12)
    assert base.area == pytest.approx(2 * math.pi, rel=1e-14)


def test_polygon_base_area():
    base = PolygonBase(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]))
    rule = planar_rule(base, 16, 2.0)
    assert rule.integrate(np.ones(rule.size)) == pytest.approx(2.0, rel=1e-12)
    assert rule.integrate(rule.nodes[:, 0] ** 2) == pytest.approx(1.0 / 3.0, rel=1e-10)


@pytest.mark.parametrize("grading", [0.5, 4.5])
def test_grading_out_of_range(grading):
    with pytest.raises(ValueError, match="grading"):
        planar_rule(IntervalBase(-1.0, 1.0), 8, grading)


def test_trapezoid_error_for_lipschitz_kernel_is_second_order():
    # |cos| has two kinks, so the equispaced rule converges like m^-2, not spectrally
    e1 = np.array([1.0, 0.0])
    errs = [abs(np.dot(sphere_rule(2, m).weights, np.abs(sphere_rule(2, m).nodes @ e1)) - 4.0)
            for m in (512, 1024, 2048)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-3)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=1e-3)
    rule = sphere_rule(2, 2048)
    for a in np.linspace(0.0, 1.5, 16):
        u = np.array([math.cos(a), math.sin(a)])
        assert abs(np.dot(rule.weights, np.abs(rule.nodes @ u)) - 4.0) <= 0.5 * (2 * math.pi / 2048) ** 2
    # the Funk-Hecke transform of the constant density has no such error
    spec = zonal_transform(sphere_rule(2, 64), np.ones(64), 1.0 + 1e-12, points=e1[None, :])[0]
    assert spec == pytest.approx(4.0, rel=1e-10)
