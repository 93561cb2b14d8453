import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpgeom.bodies import Ball, Ellipsoid, Lens, NormBody, Polytope, unit
from lpgeom.fixtures import builtin_fixtures
from lpgeom.graph import graph_decompose
from lpgeom.lp_transforms import LpParams
from lpgeom.steiner import steiner_t
from lpgeom.verifier import (
    CheckSettings,
    PreconditionError,
    SteinerModel,
    check_convexity,
    check_derivative_zero_at_fixed_point,
    check_inclusion,
    check_section_monotone,
    check_steiner_algebra,
    check_variation,
    direction_sample,
    fixed_point_probe,
    run_suite,
    steiner_radial,
    variation_fd,
    variation_rhs,
)

FAST = CheckSettings(sphere_order=64, planar_res=48, refine=False)
NORM2 = NormBody([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]], 4.0)
SHEARED = Ellipsoid(np.array([[1.0, 0.6], [0.0, 2.0]]))
ONE_SIDED = Lens([[0.3, 0.0], [-0.1, 0.0]], [1.0, 1.2])


def test_settings_resolution():
    s = CheckSettings()
    assert s.resolve(2) == (256, 128)
    assert s.resolve(3) == (24, 48)
    d = s.doubled(3)
    assert d.resolve(3) == (48, 96) and not d.refine
    assert s.describe(2)["sphere_order"] == 256


def test_direction_sample_is_seeded():
    a = direction_sample(3, 8, 10, seed=4)
    b = direction_sample(3, 8, 10, seed=4)
    c = direction_sample(3, 8, 10, seed=5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)


@given(st.floats(0.05, 1.95))
def test_steiner_radial_matches_exact_ellipse(t):
    xi = unit([1.0, 1.0])
    exact = steiner_t(SHEARED, xi, t).exact
    dirs = direction_sample(2, 32, 8)
    r = steiner_radial(graph_decompose(SHEARED, xi), t, dirs)
    assert np.allclose(r, exact.radial(dirs), rtol=1e-10)


@pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_inclusion_holds_and_predicate_agrees(t, p):
    rad, pred = check_inclusion(NORM2, [1.0, 1.0], t, LpParams(p, 2), settings=FAST, fixture="norm")
    assert rad.passed and pred.passed
    assert pred.extra["agrees_with_radial"]
    assert rad.check == ("steiner_inclusion_classical" if t == 1.0 else "steiner_inclusion")


def test_inclusion_preconditions():
    with pytest.raises(ValueError):
        check_inclusion(NORM2, [1.0, 0.0], 0.0, LpParams(2.0, 2), settings=FAST)
    with pytest.raises(PreconditionError):
        check_inclusion(ONE_SIDED, [1.0, 0.0], 0.5, LpParams(2.0, 2), settings=FAST)
    with pytest.raises(PreconditionError):
        SteinerModel(Polytope([[2, 0], [0, 1], [-1, -1]]), [1.0, 0.0], LpParams(2.0, 2), FAST)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_section_monotone_and_even(p):
    mono, even = check_section_monotone(NORM2, [1.0, 1.0], params=LpParams(p, 2), settings=FAST)
    assert mono.passed, mono.worst_violation
    assert even.passed and even.tolerance == 1e-8
    assert mono.extra["origin_identity"] <= 1e-12


def test_convexity_and_symmetry():
    conv, sym = check_convexity(NORM2, [1.0, 1.0], params=LpParams(2.5, 2), settings=FAST)
    assert conv.passed and sym.passed


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_variation_formula_matches_finite_difference(p):
    rep = check_variation(NORM2, [1.0, 1.0], 0.5, LpParams(p, 2), settings=CheckSettings(refine=False))
    assert not rep.extra["zero_case"]
    assert rep.passed, rep.worst_violation


def test_variation_zero_cases():
    ell = check_variation(SHEARED, [1.0, 1.0], 0.5, LpParams(2.0, 2), settings=FAST)
    mid = check_variation(NORM2, [1.0, 1.0], 1.0, LpParams(2.0, 2), settings=FAST)
    assert ell.extra["zero_case"] and ell.passed
    assert mid.extra["zero_case"] and mid.passed


def test_variation_is_sensitive_to_time():
    model = SteinerModel(NORM2, [1.0, 1.0], LpParams(2.0, 2), CheckSettings(refine=False))
    rhs = variation_rhs(model, 0.5)
    assert abs(rhs - variation_fd(model, 0.5)) <= 1e-3 * abs(rhs)
    assert abs(rhs - variation_fd(model, 0.2)) > 1e-2 * abs(rhs)


def test_fixed_point_derivative():
    params = LpParams(2.0, 2)
    axes = [[1.0, 0.0], [1.0, 1.0]]
    ball = check_derivative_zero_at_fixed_point(Ball(2), axes, params, settings=FAST)
    assert ball.status == "checked" and ball.passed
    norm = check_derivative_zero_at_fixed_point(NORM2, axes, params, settings=FAST)
    assert norm.status == "not-applicable" and norm.passed


def test_probe_keeps_ellipses():
    trace = fixed_point_probe(SHEARED, LpParams(3.0, 2), iters=3, order=256)
    assert not trace.aborted and len(trace.steps) == 4
    assert trace.max_dilation_defect <= 1e-10
    assert trace.max_ellipsoid_defect <= 1e-10


def test_probe_rejects_asymmetric_body():
    with pytest.raises(PreconditionError):
        fixed_point_probe(ONE_SIDED, LpParams(2.0, 2))


def test_probe_aborts_on_failure(monkeypatch):
    import lpgeom.verifier as verifier

    def boom(*args, **kwargs):
        raise ValueError("blowup")

    monkeypatch.setattr(verifier, "compose_gamma_pi_polar", boom)
    trace = fixed_point_probe(Ball(2), LpParams(2.0, 2), iters=2, order=64)
    assert trace.aborted and "blowup" in trace.message


def test_steiner_algebra_reports():
    reps = check_steiner_algebra(NORM2, [1.0, 1.0])
    assert [r.check for r in reps] == ["steiner_volume", "steiner_reflection", "steiner_compose"]
    assert all(r.passed for r in reps)


def test_report_row_layout():
    rep = check_steiner_algebra(SHEARED, [0.0, 1.0])[0]
    row = rep.row()
    assert row[0] == "steiner_volume" and len(row) == 12


def test_run_suite_order_does_not_depend_on_jobs():
    fixtures = [f for f in builtin_fixtures() if f.name in ("2d-norm4", "2d-ball")]
    a = run_suite("steiner", fixtures, settings=FAST, jobs=1)
    b = run_suite("steiner", fixtures, settings=FAST, jobs=2)
    assert [r.row() for r in a] == [r.row() for r in b]
    assert [r.fixture for r in a][0] == "2d-ball"


def test_run_suite_rejects_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope", builtin_fixtures()[:1])
