"""The bundled verification fixtures and helpers to load fixture directories."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .bodies import Ball, Body, Ellipsoid, NormBody, unit
from .bodyfile import BodyFileError, body_to_dict, dumps, read_body_file

DEFAULT_AXES = {
    2: [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [float(np.cos(1.0)), float(np.sin(1.0))]],
    3: [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.3, -0.5, 0.81]],
}

_ROWS2 = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
_ROWS3 = np.array([
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [1.0, -1.0, 0.5],
])


def _rot(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass
class Fixture:
    name: str
    body: Body
    axes: np.ndarray

    @property
    def dim(self) -> int:
        return self.body.dim


def builtin_fixtures() -> list[Fixture]:
    """Origin-symmetric smooth test bodies, six per dimension."""
    shear2 = np.array([[1.0, 0.6], [0.0, 1.0]])
    shear3 = np.array([[1.0, 0.4, 0.0], [0.0, 1.0, 0.5], [0.0, 0.0, 1.0]])
    rows3 = _ROWS3 / np.linalg.norm(_ROWS3, axis=1)[:, None]
    bodies = {
        "2d-ball": Ball(2),
        "2d-ellipse": Ellipsoid(np.diag([1.0, 2.0])),
        "2d-ellipse-sheared": Ellipsoid(shear2 @ np.diag([1.0, 2.0])),
        "2d-norm4": NormBody(_ROWS2, 4.0),
        "2d-norm4-sheared": NormBody(_ROWS2 @ np.linalg.inv(shear2), 4.0),
        "2d-norm6": NormBody(_ROWS2 @ _rot(0.4), 6.0),
        "3d-ball": Ball(3),
        "3d-ellipsoid": Ellipsoid(np.diag([1.0, 1.5, 2.0])),
        "3d-ellipsoid-sheared": Ellipsoid(shear3 @ np.diag([1.0, 1.5, 2.0])),
        "3d-norm4": NormBody(rows3, 4.0),
        "3d-norm4-sheared": NormBody(rows3 @ np.linalg.inv(shear3), 4.0),
        "3d-norm6": NormBody(rows3, 6.0),
    }
    return [Fixture(name, body, np.array([unit(a) for a in DEFAULT_AXES[body.dim]]))
            for name, body in sorted(bodies.items())]


def write_fixtures(directory, fixtures: list[Fixture] | None = None) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for fx in fixtures or builtin_fixtures():
        data = body_to_dict(fx.body)
        data["axes"] = fx.axes.tolist()
        path = directory / f"{fx.name}.json"
        path.write_text(dumps(data))
        out.append(path)
    return out


def bundled_fixture_dir() -> Path:
    return Path(str(resources.files("lpgeom") / "data" / "fixtures"))


def load_fixture(path) -> Fixture:
    body, data = read_body_file(path)
    axes = data.get("axes", DEFAULT_AXES[body.dim])
    try:
        axes = np.array([unit(a) for a in axes])
    except ValueError as exc:
        raise BodyFileError(f"{path}: invalid axes ({exc})") from exc
    if axes.ndim != 2 or axes.shape[1] != body.dim:
        raise BodyFileError(f"{path}: axes must be {body.dim}-vectors")
    return Fixture(Path(path).stem, body, axes)


def load_fixtures(directory=None) -> list[Fixture]:
    """All ``*.json`` fixtures of a directory, ordered by name."""
    directory = bundled_fixture_dir() if directory is None else Path(directory)
    if not directory.is_dir():
        raise BodyFileError(f"fixture directory {directory} does not exist")
    paths = sorted(directory.glob("*.json"), key=lambda p: p.stem)
    if not paths:
        raise BodyFileError(f"no fixtures in {directory}")
    return [load_fixture(p) for p in paths]
