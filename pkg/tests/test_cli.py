import json
import shutil

import numpy as np
import pytest

from lpgeom.bodyfile import read_body
from lpgeom.cli import build_parser, main
from lpgeom.fixtures import bundled_fixture_dir
from lpgeom.quadrature import sphere_rule


def run(*argv):
    return main([str(a) for a in argv])


def csv_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, lines[1:]


@pytest.fixture
def fixture_dir(tmp_path):
    out = tmp_path / "fx"
    out.mkdir()
    for name in ("2d-ball", "2d-norm4"):
        shutil.copy(bundled_fixture_dir() / f"{name}.json", out)
    return out


def test_gen_ball(tmp_path):
    out = tmp_path / "ball.json"
    assert run("gen", "ball", "--dim", 2, "--out", out) == 0
    body = read_body(out)
    assert np.allclose(body.support(sphere_rule(2, 32).nodes), 1.0)


def test_gen_ellipsoid(tmp_path):
    out = tmp_path / "e.json"
    assert run("gen", "ellipsoid", "--matrix", "1,0;0,2", "--out", out) == 0
    assert read_body(out).support([0.0, 1.0]) == pytest.approx(2.0)


def test_gen_random_polytope_is_deterministic_and_symmetric(tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    for path, seed in ((a, 7), (b, 7), (c, 8)):
        assert run("gen", "random-symmetric-polytope", "--seed", seed, "--dim", 3, "--out", path) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    body = read_body(a)
    assert body.symmetric


@pytest.mark.parametrize("kind", ["cube", "lens"])
def test_gen_other_kinds(kind, tmp_path):
    out = tmp_path / "k.json"
    assert run("gen", kind, "--dim", 2, "--out", out) == 0
    assert read_body(out).symmetric


def test_gen_usage_errors(tmp_path, capsys):
    assert run("gen", "ellipsoid", "--out", tmp_path / "x.json") == 2
    assert run("gen", "ellipsoid", "--matrix", "1,0;0", "--out", tmp_path / "x.json") == 2
    assert run("gen", "ball", "--p", 11) == 2
    assert run("gen", "ball", "--dim", 4) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        run("gen", "blob")
    assert exc.value.code == 2


def test_op_pi_on_ball(tmp_path):
    ball = tmp_path / "ball.json"
    run("gen", "ball", "--dim", 3, "--out", ball)
    out = tmp_path / "pi.json"
    assert run("op", "pi", "--body", ball, "--p", 3, "--sphere-order", 16, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["kind"] == "support_sampled" and data["order"] == 16
    assert np.allclose(data["values"], 1.0, atol=1e-12)


def test_op_polar_and_defect(tmp_path):
    e = tmp_path / "e.json"
    run("gen", "ellipsoid", "--matrix", "1,0;0,2", "--out", e)
    pol = tmp_path / "pol.json"
    assert run("op", "polar", "--body", e, "--sphere-order", 64, "--out", pol) == 0
    assert read_body(pol).support([0.0, 1.0]) == pytest.approx(0.5)
    comp = tmp_path / "c.json"
    assert run("op", "compose", "--body", e, "--p", 2.5, "--sphere-order", 256, "--out", comp) == 0
    rep = tmp_path / "d.csv"
    assert run("op", "defect", "--a", e, "--b", comp, "--sphere-order", 256, "--report", rep) == 0
    header, rows = csv_rows(rep)
    vals = dict(zip(header, rows[0].split(",")))
    assert float(vals["dilation_defect"]) <= 1e-10
    assert run("op", "defect", "--a", e) == 2


def test_symmetrize(tmp_path):
    e = tmp_path / "e.json"
    run("gen", "ellipsoid", "--matrix", "1,0.6;0,2", "--out", e)
    out = tmp_path / "s.json"
    assert run("symmetrize", "--body", e, "--xi", "1,1", "--t", 1, "--out", out) == 0
    s = read_body(out)
    assert s.volume() == pytest.approx(read_body(e).volume())
    assert s.symmetric
    lens = tmp_path / "l.json"
    run("gen", "lens", "--out", lens)
    out2 = tmp_path / "ls.json"
    assert run("symmetrize", "--body", lens, "--xi", "1,1", "--t", 0.5, "--out", out2) == 0
    assert json.loads(out2.read_text())["kind"] == "graph"
    assert run("symmetrize", "--body", lens, "--xi", "1,1,0", "--t", 0.5) == 2
    assert run("symmetrize", "--body", lens, "--xi", "1,1", "--t", 3) == 2


def test_verify_passes_and_is_deterministic(fixture_dir, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["verify", "--suite", "monotone", "--fixtures", fixture_dir, "--sphere-order", 64, "--planar-res", 48]
    assert run(*args, "--report", a) == 0
    assert run(*args, "--report", b) == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text().splitlines()
    assert text[0] == "# lpgeom report v1"
    config = json.loads(text[1][len("# config "):])
    assert config["sphere_order"] == 64 and config["options"]["suite"] == "monotone"
    header, rows = csv_rows(a)
    assert header[:3] == ["check", "fixture", "dim"]
    assert len(rows) == 16


def test_verify_reports_failure(fixture_dir, tmp_path):
    # zero-case derivatives are compared with --tol, which no roundoff can meet at 1e-300
    rep = tmp_path / "r.csv"
    assert run("verify", "--suite", "variation", "--fixtures", fixture_dir, "--sphere-order", 16,
               "--planar-res", 4, "--tol", 1e-300, "--report", rep) == 1
    _, rows = csv_rows(rep)
    assert any(",False," in r for r in rows)


def test_verify_fixture_errors(tmp_path, fixture_dir):
    assert run("verify", "--suite", "inclusion", "--fixtures", tmp_path / "nope", "--report", tmp_path / "r") == 2
    (fixture_dir / "zz.json").write_text('{"schema": 1, "dim": 2, "kind": "ellipsoid", "matrix": [[1, 0]]}')
    assert run("verify", "--suite", "inclusion", "--fixtures", fixture_dir, "--report", tmp_path / "r") == 2


def test_probe_ball_and_ellipse(tmp_path):
    ball = tmp_path / "ball.json"
    run("gen", "ball", "--dim", 2, "--out", ball)
    trace = tmp_path / "t.csv"
    assert run("probe", "--body", ball, "--iters", 5, "--trace", trace) == 0
    header, rows = csv_rows(trace)
    assert header[:4] == ["iterate", "dilation_defect", "ellipsoid_defect", "scale"]
    assert len(rows) == 6
    assert all(float(r.split(",")[1]) <= 1e-6 and float(r.split(",")[2]) <= 1e-6 for r in rows)
    e = tmp_path / "e.json"
    run("gen", "ellipsoid", "--matrix", "1,0;0,2", "--out", e)
    assert run("probe", "--body", e, "--p", 2, "--iters", 5, "--trace", trace) == 0
    _, rows = csv_rows(trace)
    assert all(float(r.split(",")[2]) <= 1e-5 for r in rows)


def test_probe_random_polytope_trace_is_reproducible(tmp_path):
    poly = tmp_path / "p.json"
    run("gen", "random-symmetric-polytope", "--seed", 7, "--out", poly)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("probe", "--body", poly, "--trace", a) == 0
    assert run("probe", "--body", poly, "--trace", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_probe_abort_flushes_partial_trace(tmp_path, monkeypatch):
    import lpgeom.verifier as verifier

    ball = tmp_path / "ball.json"
    run("gen", "ball", "--dim", 2, "--out", ball)
    real = verifier.compose_gamma_pi_polar
    calls = []

    def flaky(*args, **kwargs):
        calls.append(1)
        if len(calls) > 2:
            raise ValueError("iterate blew up")
        return real(*args, **kwargs)

    monkeypatch.setattr(verifier, "compose_gamma_pi_polar", flaky)
    trace = tmp_path / "t.csv"
    assert run("probe", "--body", ball, "--iters", 5, "--trace", trace) == 3
    text = trace.read_text()
    assert "# aborted: iterate 2: iterate blew up" in text
    assert len(csv_rows(trace)[1]) == 2


def test_probe_bad_body(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run("probe", "--body", bad) == 2


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["verify", "--help"])
    out = capsys.readouterr().out
    for flag in ("--dim", "--p", "--sphere-order", "--planar-res", "--grading", "--tol", "--seed", "--out",
                 "--report", "--jobs"):
        assert flag in out
    assert "default: 2.0" in out and "default: 1e-06" in out
