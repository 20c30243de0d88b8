"""Batch command line: run configured simulations and print tables.

Subcommands::

    diffwillmore run <config.yaml>
    diffwillmore profile [--points N]
    diffwillmore energy <snapshot>
    diffwillmore bench radius <config.yaml>

A run config is a YAML document with the sections ``grid``, ``model``,
``flow``, ``constraints``, ``shape``, ``output`` and ``numerics``.  Unknown
keys are rejected.  The environment variable ``DIFFWILLMORE_OUTPUT_DIR``
overrides ``output.dir``.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import geometry, spectral
from .energies import EnergyReport, energy_report, radius_from_perimeter
from .exceptions import ParseError, ValidationError
from .flows import FlowParams, SimulationError, dt_guidance, run_simulation
from .profile import potential_W, potential_Wo, profile_model
from .reference import RadiusState, integrate_radius

OUTPUT_ENV = "DIFFWILLMORE_OUTPUT_DIR"
CSV_COLUMNS = EnergyReport.columns() + ["radius_estimate", "fp_iterations"]

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------

class _Mapping(dict):
    """dict that remembers the source line of each key."""

    lines: dict


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Mapping()
    out.lines = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = key_node.start_mark.line + 1
    return out


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


@dataclass(frozen=True)
class GridConfig:
    dim: int
    m: int
    eps: float


@dataclass(frozen=True)
class FlowConfig:
    lambda1_o: float
    lambda2_o: float
    dt: float
    t_end: float


@dataclass(frozen=True)
class ConstraintConfig:
    volume: bool = False
    perimeter: bool = False


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "run"
    csv_stride: int = 10
    snapshot_stride: int = 10


@dataclass(frozen=True)
class NumericsConfig:
    fp_tol: float = 1e-9
    fp_max_iters: int = 200
    dealias: bool = False
    auto_halve: bool = False
    solver: str = "newton"


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    flow: FlowConfig
    shape: object
    model: str = "gradient_free"
    constraints: ConstraintConfig = field(default_factory=ConstraintConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)

    def flow_params(self):
        return FlowParams(
            eps=self.grid.eps, lambda1_o=self.flow.lambda1_o, lambda2_o=self.flow.lambda2_o,
            dt=self.flow.dt, fp_tol=self.numerics.fp_tol, fp_max_iters=self.numerics.fp_max_iters,
            conserve_volume=self.constraints.volume, conserve_perimeter=self.constraints.perimeter,
            solver=self.numerics.solver, auto_halve=self.numerics.auto_halve,
            dealias=self.numerics.dealias)

    def torus(self):
        return spectral.TorusGrid(self.grid.dim, self.grid.m, self.grid.eps)


def _check_keys(doc, allowed, where):
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected a mapping, got {type(doc).__name__}")
    for key in doc:
        if key not in allowed:
            line = getattr(doc, "lines", {}).get(key)
            at = f" (line {line})" if line else ""
            raise ParseError(f"{where}: unknown key {key!r}{at}")


def _get(doc, key, kind, where, default=None, required=False):
    if key not in doc:
        if required:
            raise ValidationError(f"{where}.{key} is required")
        return default
    value = doc[key]
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}.{key} must be {kind.__name__}, got {value!r}") from None


def _positive(value, name):
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return value


def _point(doc, key, dim, where):
    value = doc.get(key)
    if not isinstance(value, (list, tuple)) or len(value) != dim:
        raise ValidationError(f"{where}.{key} must be a list of {dim} numbers")
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}.{key} must be a list of {dim} numbers") from None


_SHAPE_KEYS = {
    "ball": {"type", "center", "radius"},
    "cuboid": {"type", "center", "half_widths"},
    "slab": {"type", "axis", "lower", "upper"},
    "union": {"type", "members"},
    "xor": {"type", "members"},
    "random_balls": {"type", "count", "radius_range", "seed"},
    "two_touching_circles": {"type", "radius"},
    "inverted_touching_circles": {"type", "radius"},
    "three_touching_circles": {"type", "radius"},
}


def _parse_shape(doc, dim, where="shape"):
    if not isinstance(doc, dict) or "type" not in doc:
        raise ValidationError(f"{where} needs a 'type'")
    kind = doc["type"]
    if kind not in _SHAPE_KEYS:
        raise ValidationError(f"{where}.type {kind!r} is not one of {sorted(_SHAPE_KEYS)}")
    _check_keys(doc, _SHAPE_KEYS[kind], where)
    if kind == "ball":
        radius = _positive(_get(doc, "radius", float, where, required=True), f"{where}.radius")
        return geometry.Ball(_point(doc, "center", dim, where), radius)
    if kind == "cuboid":
        widths = _point(doc, "half_widths", dim, where)
        for w in widths:
            _positive(w, f"{where}.half_widths")
        return geometry.Cuboid(_point(doc, "center", dim, where), widths)
    if kind == "slab":
        axis = _get(doc, "axis", int, where, required=True)
        if not 0 <= axis < dim:
            raise ValidationError(f"{where}.axis must lie in [0, {dim})")
        lower = _get(doc, "lower", float, where, required=True)
        upper = _get(doc, "upper", float, where, required=True)
        if not lower < upper:
            raise ValidationError(f"{where}: lower must be below upper")
        return geometry.Slab(axis, lower, upper)
    if kind in ("union", "xor"):
        members = doc.get("members")
        if not isinstance(members, list) or not members:
            raise ValidationError(f"{where}.members must be a nonempty list")
        parsed = tuple(_parse_shape(mb, dim, f"{where}.members[{i}]") for i, mb in enumerate(members))
        return geometry.Union(parsed) if kind == "union" else geometry.Xor(parsed)
    if kind == "random_balls":
        if "seed" not in doc:
            raise ValidationError(f"{where}.seed is mandatory for random_balls")
        count = _positive(_get(doc, "count", int, where, required=True), f"{where}.count")
        lo, hi = _point(doc, "radius_range", 2, where)
        if not 0 < lo <= hi:
            raise ValidationError(f"{where}.radius_range must satisfy 0 < low <= high")
        return geometry.RandomBalls(count, (lo, hi), _get(doc, "seed", int, where), dim)
    if dim != 2:
        raise ValidationError(f"{where}.type {kind!r} is a 2D preset")
    preset = getattr(geometry, kind)
    if "radius" in doc:
        return preset(_positive(_get(doc, "radius", float, where), f"{where}.radius"))
    return preset()


def parse_config(text):
    """Parse and validate a YAML run config; returns a :class:`RunConfig`."""
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}" if mark is not None else ""
        raise ParseError(f"malformed config{at}: {exc}") from None
    _check_keys(doc, {"grid", "model", "flow", "constraints", "shape", "output", "numerics"}, "config")
    for section in ("grid", "flow", "shape"):
        if section not in doc:
            raise ValidationError(f"config.{section} is required")

    g = doc["grid"]
    _check_keys(g, {"dim", "m", "eps"}, "grid")
    dim = _get(g, "dim", int, "grid", required=True)
    if dim not in (1, 2, 3):
        raise ValidationError(f"grid.dim must be 1, 2 or 3, got {dim}")
    m = _get(g, "m", int, "grid", required=True)
    if m < 2 or m & (m - 1):
        raise ValidationError(f"grid.m must be a power of two, got {m}")
    eps = _positive(_get(g, "eps", float, "grid", required=True), "grid.eps")
    grid = GridConfig(dim, m, eps)

    model = doc.get("model", "gradient_free")
    if model not in ("gradient_free", "standard"):
        raise ValidationError(f"model must be 'gradient_free' or 'standard', got {model!r}")

    f = doc["flow"]
    _check_keys(f, {"lambda1_o", "lambda2_o", "dt", "t_end"}, "flow")
    lam1 = _get(f, "lambda1_o", float, "flow", required=True)
    lam2 = _get(f, "lambda2_o", float, "flow", required=True)
    if lam1 < 0 or lam2 < 0:
        raise ValidationError("flow.lambda1_o and flow.lambda2_o must be nonnegative")
    dt = _positive(_get(f, "dt", float, "flow", default=dt_guidance(eps, lam1)), "flow.dt")
    t_end = _get(f, "t_end", float, "flow", required=True)
    if t_end < 0:
        raise ValidationError("flow.t_end must be nonnegative")
    flow = FlowConfig(lam1, lam2, dt, t_end)

    c = doc.get("constraints", {}) or {}
    _check_keys(c, {"volume", "perimeter"}, "constraints")
    constraints = ConstraintConfig(_get(c, "volume", bool, "constraints", False),
                                   _get(c, "perimeter", bool, "constraints", False))

    o = doc.get("output", {}) or {}
    _check_keys(o, {"dir", "csv_stride", "snapshot_stride"}, "output")
    output = OutputConfig(
        str(o.get("dir", OutputConfig.dir)),
        _positive(_get(o, "csv_stride", int, "output", 10), "output.csv_stride"),
        _positive(_get(o, "snapshot_stride", int, "output", 10), "output.snapshot_stride"))

    n = doc.get("numerics", {}) or {}
    _check_keys(n, {"fp_tol", "fp_max_iters", "dealias", "auto_halve", "solver"}, "numerics")
    solver = n.get("solver", "newton")
    if solver not in ("newton", "picard"):
        raise ValidationError(f"numerics.solver must be 'newton' or 'picard', got {solver!r}")
    numerics = NumericsConfig(
        _positive(_get(n, "fp_tol", float, "numerics", 1e-9), "numerics.fp_tol"),
        _positive(_get(n, "fp_max_iters", int, "numerics", 200), "numerics.fp_max_iters"),
        _get(n, "dealias", bool, "numerics", False),
        _get(n, "auto_halve", bool, "numerics", False),
        solver)

    shape = _parse_shape(doc["shape"], dim)
    if dt > dt_guidance(eps, lam1):
        log.warning("flow.dt = %g exceeds the step-size guidance %g", dt, dt_guidance(eps, lam1))
    return RunConfig(grid, flow, shape, model, constraints, output, numerics)


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _radius(report, dim):
    if dim == 1:
        return math.nan
    return radius_from_perimeter(report.perimeter_ag, dim)


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def simulate(config, model=None, out_dir=None, snapshots=True):
    """Run ``config`` and return the CSV rows; writes files when ``out_dir`` is set."""
    grid = config.torus()
    params = config.flow_params()
    u0 = geometry.initialize(grid, config.shape)
    rows = []
    csv_stride = config.output.csv_stride
    snap_stride = config.output.snapshot_stride
    n_steps = int(np.ceil(config.flow.t_end / params.dt - 1e-9)) if config.flow.t_end > 0 else 0

    def observe(point, u):
        last = point.step == n_steps
        if point.step % csv_stride == 0 or last:
            rows.append(point.report.as_row()
                        + (_radius(point.report, grid.dim), point.diagnostics.fp_iterations))
        if out_dir is not None and snapshots and (point.step % snap_stride == 0 or last):
            spectral.write_snapshot(out_dir / f"{point.step}.snap", u, grid, point.time)

    run_simulation(u0, grid, params, config.flow.t_end, model=model or config.model,
                   observers=(observe,), stride=math.gcd(csv_stride, snap_stride))
    return rows


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def cmd_run(args):
    config = load_config(args.config)
    out_dir = Path(os.environ.get(OUTPUT_ENV) or config.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = simulate(config, out_dir=out_dir)
    _write_csv(out_dir / "trajectory.csv", CSV_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {out_dir / 'trajectory.csv'}")
    return 0


def cmd_profile(args):
    model = profile_model()
    r = np.linspace(-1.0, 1.0, args.points)
    w, dw, d2w = potential_W(r)
    wo, dwo, d2wo = potential_Wo(r)
    out = sys.stdout
    out.write(f"# c0 = {model.c0!r}\n# sigma = {model.sigma!r}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["r", "W", "dW", "d2W", "W_o", "dW_o", "d2W_o"])
    for row in zip(r, w, dw, d2w, wo, dwo, d2wo):
        writer.writerow([_fmt(x) for x in row])
    return 0


def cmd_energy(args):
    try:
        u, grid, time = spectral.read_snapshot(args.snapshot)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read snapshot {args.snapshot}: {exc}") from None
    report = energy_report(u, grid, time)
    for name, value in zip(EnergyReport.columns(), report.as_row()):
        print(f"{name} = {value!r}")
    print(f"radius_estimate = {_radius(report, grid.dim)!r}")
    return 0


def cmd_bench_radius(args):
    config = load_config(args.config)
    if not isinstance(config.shape, geometry.Ball):
        raise ValidationError("bench radius needs a 'ball' shape")
    if config.grid.dim not in (2, 3):
        raise ValidationError("bench radius needs grid.dim 2 or 3")
    cols = EnergyReport.columns()
    t_col, r_col = cols.index("time"), len(cols)
    std = simulate(config, model="standard", snapshots=False)
    gf = simulate(config, model="gradient_free", snapshots=False)
    times = [row[t_col] for row in gf]
    # the last step may overshoot t_end, so integrate up to the last sample time
    ode_dt = config.flow.dt / 10.0
    ode = integrate_radius(RadiusState(config.shape.radius, config.grid.dim),
                           config.flow.lambda1_o, config.flow.lambda2_o, times[-1], ode_dt)
    rows = [(t, s[r_col], g[r_col], float(ode.at(t))) for t, s, g in zip(times, std, gf)]
    header = ["t", "r_diffuse_standard", "r_diffuse_gf", "r_ode"]
    if args.out:
        _write_csv(args.out, header, rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="diffwillmore", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a simulation from a YAML config")
    p.add_argument("config")
    p.set_defaults(func=cmd_run, where="flows.run_simulation")

    p = sub.add_parser("profile", help="print c0, sigma and a table of both potentials")
    p.add_argument("--points", type=int, default=41)
    p.set_defaults(func=cmd_profile, where="profile.compute_constants")

    p = sub.add_parser("energy", help="print the energies of a snapshot file")
    p.add_argument("snapshot")
    p.set_defaults(func=cmd_energy, where="spectral.read_snapshot")

    p = sub.add_parser("bench", help="sharp-interface benchmarks")
    bench = p.add_subparsers(dest="bench", required=True)
    p = bench.add_parser("radius", help="diffuse radii of both models next to the radius ODE")
    p.add_argument("config")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench_radius, where="reference.integrate_radius")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        where = args.where if args.command == "energy" else "cli.parse_config"
        print(f"error: {where}: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"error: {args.where}: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"error: {args.where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
