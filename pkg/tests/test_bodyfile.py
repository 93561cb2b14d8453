import json

import numpy as np
import pytest

from lpgeom.bodies import Ball, Ellipsoid, Lens, NormBody, Polytope, SupportSampled
from lpgeom.bodyfile import BodyFileError, body_from_dict, body_to_dict, dumps, read_body, read_body_file, write_body
from lpgeom.fixtures import builtin_fixtures, bundled_fixture_dir, load_fixture, load_fixtures, write_fixtures
from lpgeom.graph import tabulated_graph
from lpgeom.quadrature import sphere_rule
from lpgeom.steiner import steiner_t

BODIES = [
    Ball(3, 2.0),
    Ellipsoid(np.array([[1.0, 0.6], [0.0, 2.0]])),
    Polytope([[-1, -1], [1, -1], [1, 1], [-1, 1]]),
    NormBody([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]], 4.0),
    Lens([[0.5, 0.0], [-0.5, 0.0]], [1.2, 1.2]),
    SupportSampled(sphere_rule(2, 64), np.ones(64)),
]


@pytest.mark.parametrize("body", BODIES, ids=lambda b: b.kind)
def test_roundtrip(body, tmp_path):
    path = tmp_path / "b.json"
    write_body(body, path)
    back = read_body(path)
    rule = sphere_rule(body.dim, 32 if body.dim == 2 else 8)
    assert type(back) is type(body)
    assert np.allclose(back.support(rule.nodes), body.support(rule.nodes), rtol=1e-12)
    assert path.read_text() == dumps(body_to_dict(back))


def test_graph_roundtrip(tmp_path):
    y = np.linspace(-1, 1, 21)
    gb = tabulated_graph([0.0, 1.0], y, np.sqrt(1 - y**2), np.sqrt(1 - y**2))
    path = tmp_path / "g.json"
    write_body(gb, path)
    back, data = read_body_file(path)
    assert data["kind"] == "graph"
    assert np.allclose(back.f(y[:, None]), gb.f(y[:, None]))


def test_exact_steiner_image_is_written_exactly():
    data = body_to_dict(steiner_t(Ellipsoid(np.diag([1.0, 2.0])), [1.0, 1.0], 0.5))
    assert data["kind"] == "ellipsoid"


@pytest.mark.parametrize("data,msg", [
    ({"schema": 2, "dim": 2, "kind": "ball"}, "schema"),
    ({"schema": 1, "dim": 4, "kind": "ball"}, "dimension"),
    ({"schema": 1, "dim": 2, "kind": "blob"}, "kind"),
    ({"schema": 1, "dim": 2, "kind": "ellipsoid"}, "matrix"),
    ({"schema": 1, "dim": 2, "kind": "ellipsoid", "matrix": [[1, 0], [0, "x"]]}, "numeric"),
    ({"schema": 1, "dim": 3, "kind": "ellipsoid", "matrix": [[1, 0], [0, 1]]}, "dimension"),
    ({"schema": 1, "dim": 2, "kind": "polytope", "vertices": [[1, 1], [2, 1], [1, 2]]}, "origin"),
    ({"schema": 1, "dim": 3, "kind": "graph", "axis": [0, 0, 1], "samples": [0], "f": [0], "g": [0]}, "planar"),
    ([1, 2], "object"),
])
def test_invalid_files(data, msg):
    with pytest.raises(BodyFileError, match=msg):
        body_from_dict(data)


def test_unreadable_files(tmp_path):
    with pytest.raises(BodyFileError, match="cannot read"):
        read_body(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(BodyFileError, match="not valid JSON"):
        read_body(bad)


def test_bundled_fixtures_match_builtin_definitions(tmp_path):
    write_fixtures(tmp_path)
    bundled = sorted(p.name for p in bundled_fixture_dir().glob("*.json"))
    assert bundled == sorted(p.name for p in tmp_path.glob("*.json"))
    for name in bundled:
        assert (tmp_path / name).read_text() == (bundled_fixture_dir() / name).read_text()


def test_fixture_set_shape():
    fixtures = load_fixtures()
    assert len(fixtures) == 12
    assert [f.name for f in fixtures] == sorted(f.name for f in fixtures)
    assert sum(f.dim == 2 for f in fixtures) == 6
    assert all(f.axes.shape == (4, f.dim) for f in fixtures)
    assert all(f.body.symmetric for f in fixtures)
    assert [f.name for f in fixtures] == [f.name for f in builtin_fixtures()]


def test_fixture_errors(tmp_path):
    with pytest.raises(BodyFileError, match="does not exist"):
        load_fixtures(tmp_path / "nope")
    with pytest.raises(BodyFileError, match="no fixtures"):
        load_fixtures(tmp_path)
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"schema": 1, "dim": 2, "kind": "ball", "axes": [[0, 0]]}))
    with pytest.raises(BodyFileError, match="axes"):
        load_fixture(path)
