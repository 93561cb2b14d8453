"""Command-line interface: ``lpgeom gen|op|symmetrize|verify|probe``.

Exit codes: 0 success, 1 a check failed, 2 usage or input-file error,
3 runtime abort.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import Ball, Body, Ellipsoid, Lens, Polytope, SupportSampled, unit
from .bodyfile import BodyFileError, body_to_dict, dumps, read_body
from .graph import GraphBody
from .quadrature import DEFAULT_SPHERE_ORDER, sphere_rule
from .reports import COLUMNS
from .lp_transforms import (
    LpParams,
    best_dilation,
    compose_gamma_pi_polar,
    ellipsoid_defect,
    gamma_body,
    pi_body,
)

REPORT_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3
P_RANGE = (1.0, 10.0)
GEN_KINDS = ("ball", "ellipsoid", "cube", "random-symmetric-polytope", "lens")
OPS = ("pi", "gamma", "polar", "compose", "defect")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything that determines the output of a command."""

    command: str
    dim: int | None = None
    p: float = 2.0
    sphere_order: int | None = None
    planar_res: int | None = None
    grading: float = 2.0
    tol: float = 1e-6
    seed: int = 0
    jobs: int = 1
    outputs: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.dim is not None and self.dim not in (2, 3):
            raise UsageError(f"--dim must be 2 or 3, got {self.dim}")
        if not (P_RANGE[0] < self.p <= P_RANGE[1]):
            raise UsageError(f"--p must lie in (1, 10], got {self.p}")
        if self.sphere_order is not None and (self.sphere_order < 4 or self.sphere_order % 2):
            raise UsageError(f"--sphere-order must be an even integer >= 4, got {self.sphere_order}")
        if self.planar_res is not None and self.planar_res < 2:
            raise UsageError(f"--planar-res must be at least 2, got {self.planar_res}")
        if not 1.0 <= self.grading <= 4.0:
            raise UsageError(f"--grading must lie in [1, 4], got {self.grading}")
        if not self.tol > 0:
            raise UsageError(f"--tol must be positive, got {self.tol}")
        if self.jobs < 1:
            raise UsageError(f"--jobs must be at least 1, got {self.jobs}")
        return self

    def embedded(self) -> dict:
        """Config as written into outputs; output paths do not change content and are left out."""
        out = asdict(self)
        out.pop("outputs")
        return out

    def header(self) -> list[str]:
        return [f"# lpgeom report v{REPORT_VERSION}",
                "# config " + json.dumps(self.embedded(), sort_keys=True, separators=(",", ":"))]


def _config(args, command: str, **options) -> RunConfig:
    outputs = {k: str(getattr(args, k)) for k in ("out", "report", "trace") if getattr(args, k, None)}
    return RunConfig(command=command, dim=args.dim, p=args.p, sphere_order=args.sphere_order,
                     planar_res=args.planar_res, grading=args.grading, tol=args.tol, seed=args.seed,
                     jobs=args.jobs, outputs=outputs, options=options).validate()


def _parse_matrix(text: str) -> np.ndarray:
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";") if row.strip()]
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise UsageError(f"cannot parse matrix {text!r}: use rows like '1,0;0,2'") from exc
    if arr.ndim != 2:
        raise UsageError(f"matrix rows have different lengths: {text!r}")
    return arr


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}: use 'x,y[,z]'") from exc


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_csv(path, header: list[str], columns, rows) -> None:
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    _emit(buf.getvalue(), path)


def _load(path) -> Body:
    return read_body(path)


def _rule_for(body: Body, cfg: RunConfig):
    return sphere_rule(body.dim, cfg.sphere_order or DEFAULT_SPHERE_ORDER[body.dim])


# gen


def random_symmetric_polytope(dim: int, count: int, seed: int) -> Polytope:
    """Hull of ``count`` seeded Gaussian points and their negatives."""
    rng = np.random.default_rng(seed)
    for _ in range(100):
        pts = rng.normal(size=(count, dim))
        try:
            return Polytope(np.concatenate([pts, -pts]))
        except ValueError:
            continue
    raise RuntimeError("could not draw a full-dimensional polytope")


def cmd_gen(args) -> int:
    cfg = _config(args, "gen", kind=args.kind)
    dim = cfg.dim or 2
    if args.kind == "ball":
        body = Ball(dim, args.radius)
    elif args.kind == "ellipsoid":
        if args.matrix is None:
            raise UsageError("gen ellipsoid needs --matrix")
        m = _parse_matrix(args.matrix)
        if args.dim is not None and m.shape[0] != args.dim:
            raise UsageError("--matrix does not match --dim")
        body = Ellipsoid(m)
    elif args.kind == "cube":
        corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * dim, indexing="ij")).reshape(dim, -1).T
        body = Polytope(args.radius * corners)
    elif args.kind == "random-symmetric-polytope":
        count = args.vertices or (5 if dim == 2 else 8)
        if count < dim:
            raise UsageError(f"--vertices must be at least {dim}")
        body = random_symmetric_polytope(dim, count, cfg.seed)
    else:
        if args.centers is None:
            c = np.zeros((2, dim))
            c[0, 0], c[1, 0] = 0.5, -0.5
            radii = np.array([1.2, 1.2])
        else:
            c = _parse_matrix(args.centers)
            radii = _parse_vector(args.radii) if args.radii else np.full(c.shape[0], 1.0)
        body = Lens(c, radii)
    data = body_to_dict(body)
    data["config"] = cfg.embedded()
    _emit(dumps(data), args.out)
    return EXIT_OK


# op


def cmd_op(args) -> int:
    if args.op == "defect":
        return _cmd_defect(args)
    if args.body is None:
        raise UsageError(f"op {args.op} needs --body")
    body = _load(args.body)
    cfg = _config(args, "op", op=args.op, normalized=not args.tilde)
    if cfg.dim is not None and cfg.dim != body.dim:
        raise UsageError("--dim does not match the body file")
    params = LpParams(cfg.p, body.dim)
    rule = _rule_for(body, cfg)
    cfg.sphere_order = rule.order
    normalized = not args.tilde
    if args.op == "pi":
        values = pi_body(body, params, rule, normalized).support_nodes
    elif args.op == "gamma":
        values = gamma_body(body, params, rule, normalized).support_nodes
    elif args.op == "compose":
        values = compose_gamma_pi_polar(body, params, rule, normalized).support_nodes
    else:
        values = body.polar()._support(rule.nodes)
    data = body_to_dict(SupportSampled(rule, values))
    data["config"] = cfg.embedded()
    _emit(dumps(data), args.out)
    return EXIT_OK


def _cmd_defect(args) -> int:
    a_path = args.a or args.body
    if a_path is None or args.b is None:
        raise UsageError("op defect needs --a FILE --b FILE")
    a, b = _load(a_path), _load(args.b)
    if a.dim != b.dim:
        raise UsageError("the two bodies have different dimensions")
    cfg = _config(args, "op", op="defect")
    rule = _rule_for(a, cfg)
    cfg.sphere_order = rule.order
    defect, scale = best_dilation(a, b, rule)
    row = [str(a.dim), str(rule.order), repr(defect), repr(scale), repr(ellipsoid_defect(a, rule)),
           repr(ellipsoid_defect(b, rule))]
    _write_csv(args.report or args.out, cfg.header(),
               ["dim", "sphere_order", "dilation_defect", "best_c", "ellipsoid_defect_a", "ellipsoid_defect_b"],
               [row])
    return EXIT_OK


# symmetrize


def _graph_table(gb: GraphBody, count: int = 401) -> dict:
    lo, hi = gb.base.lo, gb.base.hi
    y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * -np.cos(np.pi * np.arange(count) / (count - 1))
    y[0], y[-1] = lo, hi
    yy = y[:, None]
    inner = yy[1:-1]
    f = np.empty(count)
    g = np.empty(count)
    f[1:-1], g[1:-1] = gb.f(inner), gb.g(inner)
    # chords degenerate to points at the ends of the base
    for k, yk in ((0, y[:1]), (-1, y[-1:])):
        fv, gv = gb.f(yk[:, None])[0], gb.g(yk[:, None])[0]
        if not (np.isfinite(fv) and np.isfinite(gv)):
            fv = gv = np.nan
        f[k], g[k] = fv, gv
    for k, nb in ((0, 1), (-1, -2)):
        if not np.isfinite(f[k]) or f[k] + g[k] < 0:
            mid = 0.5 * (f[nb] - g[nb])
            f[k], g[k] = mid, -mid
    return {"schema": 1, "dim": 2, "kind": "graph", "axis": gb.axis.tolist(), "samples": y.tolist(),
            "f": f.tolist(), "g": g.tolist()}


def cmd_symmetrize(args) -> int:
    from .steiner import steiner_t

    body = _load(args.body)
    cfg = _config(args, "symmetrize", xi=args.xi, t=args.t)
    xi = _parse_vector(args.xi)
    if xi.size != body.dim:
        raise UsageError(f"--xi needs {body.dim} components")
    try:
        xi = unit(xi)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not 0.0 <= args.t <= 2.0:
        raise UsageError(f"--t must lie in [0, 2], got {args.t}")
    out = steiner_t(body, xi, args.t)
    if out.exact is not None:
        data = body_to_dict(out.exact)
    elif body.dim == 2:
        data = _graph_table(out)
    else:
        rule = _rule_for(body, cfg) if cfg.sphere_order else sphere_rule(3, 32)
        data = body_to_dict(SupportSampled(rule, out._support(rule.nodes)))
    data["config"] = cfg.embedded()
    _emit(dumps(data), args.out)
    return EXIT_OK


# verify


def cmd_verify(args) -> int:
    from .fixtures import load_fixtures
    from .verifier import CheckSettings, run_suite

    cfg = _config(args, "verify", suite=args.suite, fixtures=str(args.fixtures) if args.fixtures else "bundled")
    fixtures = load_fixtures(args.fixtures)
    if cfg.dim is not None:
        fixtures = [f for f in fixtures if f.dim == cfg.dim]
    settings = CheckSettings(sphere_order=cfg.sphere_order, planar_res=cfg.planar_res, grading=cfg.grading,
                             seed=cfg.seed, tol=cfg.tol)
    cfg.options["resolved"] = {str(d): settings.describe(d) for d in sorted({f.dim for f in fixtures})}
    reports = run_suite(args.suite, fixtures, cfg.p, settings, jobs=cfg.jobs)
    _write_csv(args.report, cfg.header(), COLUMNS, [r.row() for r in reports])
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed", file=sys.stderr)
    for r in failed[:20]:
        print(f"FAIL {r.check} {r.fixture} xi={r.xi} t={r.t} worst={r.worst_violation!r} tol={r.tolerance!r}",
              file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# probe

PROBE_COLUMNS = ("iterate", "dilation_defect", "ellipsoid_defect", "scale", "volume")


def cmd_probe(args) -> int:
    from .verifier import PROBE_ORDER, fixed_point_probe

    body = _load(args.body)
    cfg = _config(args, "probe", iters=args.iters)
    if args.iters < 0:
        raise UsageError("--iters must be non-negative")
    cfg.sphere_order = cfg.sphere_order or PROBE_ORDER[body.dim]
    params = LpParams(cfg.p, body.dim)
    trace = fixed_point_probe(body, params, args.iters, order=cfg.sphere_order)
    rows = [[str(s.iterate), repr(s.dilation_defect), repr(s.ellipsoid_defect), repr(s.scale), repr(s.volume)]
            for s in trace.steps]
    header = cfg.header()
    if trace.aborted:
        header.append(f"# aborted: {trace.message}")
    _write_csv(args.trace or args.report, header, PROBE_COLUMNS, rows)
    if trace.aborted:
        print(f"probe aborted: {trace.message}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--dim", type=int, default=None, help="dimension, 2 or 3 (default: from the input)")
    g.add_argument("--p", type=float, default=2.0, help="exponent p in (1, 10] (default: %(default)s)")
    g.add_argument("--sphere-order", type=int, default=None,
                   help="sphere rule order (default: 2048 in 2D and 128 in 3D for operators; "
                        "256 and 24 for verification)")
    g.add_argument("--planar-res", type=int, default=None,
                   help="planar rule resolution (default: 128 in 2D and 48 in 3D for verification)")
    g.add_argument("--grading", type=float, default=2.0, help="boundary grading exponent in [1, 4] "
                   "(default: %(default)s)")
    g.add_argument("--tol", type=float, default=1e-6, help="base tolerance of the checks (default: %(default)s)")
    g.add_argument("--seed", type=int, default=0, help="random seed (default: %(default)s)")
    g.add_argument("--out", default=None, help="output file (default: stdout)")
    g.add_argument("--report", default=None, help="CSV report file (default: stdout)")
    g.add_argument("--jobs", type=int, default=1, help="worker processes (default: %(default)s)")

    parser = argparse.ArgumentParser(prog="lpgeom", description="L^p projection and centroid bodies, "
                                     "continuous Steiner symmetrization and numerical checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write a body file")
    p.add_argument("kind", choices=GEN_KINDS)
    p.add_argument("--radius", type=float, default=1.0, help="ball radius or cube half-side (default: 1)")
    p.add_argument("--matrix", help="ellipsoid matrix A, rows separated by ';' (K = A B^n)")
    p.add_argument("--vertices", type=int, default=None, help="number of random points before symmetrizing")
    p.add_argument("--centers", help="lens ball centers, rows separated by ';'")
    p.add_argument("--radii", help="lens ball radii, comma separated")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("op", parents=[common], help="apply an L^p operator")
    p.add_argument("op", choices=OPS)
    p.add_argument("--body", help="input body file")
    p.add_argument("--a", help="first body for 'defect' (same as --body)")
    p.add_argument("--b", help="second body for 'defect'")
    p.add_argument("--tilde", action="store_true", help="use the operators without normalizing constants")
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("symmetrize", parents=[common], help="continuous Steiner symmetrization")
    p.add_argument("--body", required=True, help="input body file")
    p.add_argument("--xi", required=True, help="axis 'x,y[,z]'")
    p.add_argument("--t", type=float, required=True, help="parameter in [0, 2]")
    p.set_defaults(func=cmd_symmetrize)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", default="all",
                   choices=("inclusion", "monotone", "convexity", "variation", "fixedpoint", "steiner", "all"),
                   help="suite to run (default: %(default)s)")
    p.add_argument("--fixtures", default=None, help="directory of fixture files (default: bundled set)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", parents=[common], help="fixed-point iteration trace")
    p.add_argument("--body", required=True, help="initial body file")
    p.add_argument("--iters", type=int, default=5, help="number of iterations (default: %(default)s)")
    p.add_argument("--trace", default=None, help="CSV trace file (default: --report or stdout)")
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lpgeom {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BodyFileError as exc:
        print(f"lpgeom {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"lpgeom {args.command}: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
