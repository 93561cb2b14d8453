"""JSON body files.

Every file is an object with ``"schema": 1``, ``"dim"`` and ``"kind"``;
the remaining keys depend on the kind:

=================  ==========================================================
``ball``           ``radius``
``ellipsoid``      ``matrix`` (rows of ``A`` with ``K = A B^n``)
``polytope``       ``vertices``
``norm``           ``rows``, ``q``
``lens``           ``centers``, ``radii``
``support_sampled`` ``order``, ``values``, ``interpolation``
``graph``          ``axis``, ``samples``, ``f``, ``g`` (planar only)
=================  ==========================================================

Fixture files may carry an extra ``"axes"`` list of symmetrization axes.
Files are written with sorted keys so identical bodies give identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bodies import Ball, Body, Ellipsoid, Lens, NormBody, Polytope, SupportSampled
from .graph import GraphBody, tabulated_graph
from .quadrature import sphere_rule

SCHEMA = 1
KINDS = ("ball", "ellipsoid", "polytope", "norm", "lens", "support_sampled", "graph")


class BodyFileError(ValueError):
    """Malformed or unsupported body file."""


def _array(data: dict, key: str, ndim: int) -> np.ndarray:
    if key not in data:
        raise BodyFileError(f"missing field {key!r}")
    try:
        arr = np.array(data[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise BodyFileError(f"field {key!r} is not numeric") from exc
    if arr.ndim != ndim or not np.all(np.isfinite(arr)):
        raise BodyFileError(f"field {key!r} must be a finite {ndim}-d array")
    return arr


def body_from_dict(data: dict) -> Body:
    """Build a body from a parsed file; raises :class:`BodyFileError`."""
    if not isinstance(data, dict):
        raise BodyFileError("body file must hold a JSON object")
    if data.get("schema") != SCHEMA:
        raise BodyFileError(f"unsupported schema {data.get('schema')!r} (expected {SCHEMA})")
    kind = data.get("kind")
    dim = data.get("dim")
    if kind not in KINDS:
        raise BodyFileError(f"unknown body kind {kind!r}")
    if dim not in (2, 3):
        raise BodyFileError(f"dimension must be 2 or 3, got {dim!r}")
    try:
        if kind == "ball":
            body = Ball(dim, float(data.get("radius", 1.0)))
        elif kind == "ellipsoid":
            body = Ellipsoid(_array(data, "matrix", 2))
        elif kind == "polytope":
            body = Polytope(_array(data, "vertices", 2))
        elif kind == "norm":
            body = NormBody(_array(data, "rows", 2), float(data["q"]))
        elif kind == "lens":
            body = Lens(_array(data, "centers", 2), _array(data, "radii", 1))
        elif kind == "support_sampled":
            rule = sphere_rule(dim, int(data["order"]))
            body = SupportSampled(rule, _array(data, "values", 1), data.get("interpolation", "first-order"))
        else:
            if dim != 2:
                raise BodyFileError("graph body files are planar")
            body = tabulated_graph(_array(data, "axis", 1), _array(data, "samples", 1),
                                   _array(data, "f", 1), _array(data, "g", 1))
    except BodyFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise BodyFileError(f"invalid {kind} body: {exc}") from exc
    if body.dim != dim:
        raise BodyFileError(f"declared dimension {dim} does not match the data ({body.dim})")
    return body


def body_to_dict(body: Body, order: int | None = None) -> dict:
    """Serializable description; generic bodies are written as support samples."""
    out = {"schema": SCHEMA, "dim": body.dim}
    if isinstance(body, Ball):
        out.update(kind="ball", radius=body.radius)
    elif isinstance(body, Ellipsoid):
        out.update(kind="ellipsoid", matrix=body.matrix.tolist())
    elif isinstance(body, Polytope):
        out.update(kind="polytope", vertices=body.vertices.tolist())
    elif isinstance(body, NormBody):
        out.update(kind="norm", rows=body.rows.tolist(), q=body.q)
    elif isinstance(body, Lens):
        out.update(kind="lens", centers=body.centers.tolist(), radii=body.radii.tolist())
    elif isinstance(body, GraphBody) and body.exact is not None:
        return body_to_dict(body.exact, order)
    elif isinstance(body, GraphBody) and body.dim == 2 and hasattr(body, "tables"):
        y, f, g = body.tables
        out.update(kind="graph", axis=body.axis.tolist(), samples=y.tolist(), f=f.tolist(), g=g.tolist())
    elif isinstance(body, SupportSampled) and order is None:
        out.update(kind="support_sampled", order=body.rule.order, values=body.values.tolist(),
                   interpolation=body.interpolation)
    else:
        rule = sphere_rule(body.dim, order or (512 if body.dim == 2 else 32))
        out.update(kind="support_sampled", order=rule.order, values=body._support(rule.nodes).tolist(),
                   interpolation="first-order")
    return out


def dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def read_body(path) -> Body:
    return read_body_file(path)[0]


def read_body_file(path) -> tuple[Body, dict]:
    """Body and raw dictionary from a file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise BodyFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BodyFileError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    try:
        return body_from_dict(data), data
    except BodyFileError as exc:
        raise BodyFileError(f"{path}: {exc}") from exc


def write_body(body: Body, path, order: int | None = None, **extra) -> None:
    data = body_to_dict(body, order)
    data.update(extra)
    Path(path).write_text(dumps(data))
