"""Command line front end: sampling, walks, kernels, validation, histograms.

Five subcommands cover the pipeline end to end: `sample` draws first
crossings of a single barrier, `walk` runs walk-on-half-spaces into the
slab, `density` evaluates any closed-form kernel at given points,
`validate` runs the statistical suites, and `hist` bins a sample CSV
into histogram CSVs.

Exit codes: 0 success or pass, 1 a validation suite failed, 2 bad
usage, 3 domain or runtime error. Numeric text output carries 17
significant digits, and every command is a pure function of its flags
and seed, so a rerun writes byte-identical files.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .kernels import (
    Barrier,
    Direction,
    LadderKind,
    Point,
    StableParams,
    ball_hitting_density,
    double_density,
    green_halfspace,
    jump_density,
    ladder_potentials,
    overshoot_density,
    overshoot_density_conditioned,
    pcr_density,
    triple_density,
)
from .numerics import ConvergenceError, DomainError
from .samplers import (
    ConditionedSamplerCache,
    RngStream,
    mv_cauchy,
    overshoot_first_coord_conditioned,
    overshoot_point,
)
from .stats_validate import SUITES, Histogram2D, run_suite
from .walk_engine import Measure, Mode, WalkConfig, batch_walk

__all__ = ["main"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3


class UsageError(Exception):
    """Bad flag or config combination; reported with exit code 2."""


# ------------------------------------------------------------ plumbing


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _parse_floats(raw, name: str) -> list:
    if isinstance(raw, (list, tuple)):
        vals = raw
    else:
        vals = [tok for tok in str(raw).split(",") if tok.strip() != ""]
    try:
        out = [float(v) for v in vals]
    except (TypeError, ValueError):
        raise UsageError(
            f"--{name} wants comma-separated numbers, got {raw!r}") from None
    if not out:
        raise UsageError(f"--{name} is empty")
    return out


def _parse_pair(raw, name: str, cast):
    vals = str(raw).split(",")
    if len(vals) != 2:
        raise UsageError(f"--{name} wants two comma-separated values")
    try:
        return cast(vals[0]), cast(vals[1])
    except (TypeError, ValueError):
        raise UsageError(f"--{name} could not parse {raw!r}") from None


def _as_int(val, name: str) -> int:
    try:
        return int(val)
    except (TypeError, ValueError):
        raise UsageError(f"--{name} must be an integer, got {val!r}") from None


def _as_float(val, name: str) -> float:
    try:
        return float(val)
    except (TypeError, ValueError):
        raise UsageError(f"--{name} must be a number, got {val!r}") from None


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    # keys match flag names; underscores are accepted as dash stand-ins
    return {str(k).replace("_", "-").lower(): v for k, v in data.items()}


def _resolve(args, cfg: dict, name: str, default=None):
    """A flag wins over the config file, which wins over the default."""
    val = getattr(args, name.replace("-", "_"))
    if val is None:
        val = cfg.get(name, default)
    return val


def _resolve_seed(args, cfg: dict) -> int:
    val = _resolve(args, cfg, "seed")
    if val is None:
        val = os.environ.get("WOHS_SEED", 0)
    return _as_int(val, "seed")


def _resolve_geometry(args, cfg: dict):
    start_raw = _resolve(args, cfg, "start")
    if start_raw is None:
        raise UsageError("--start is required")
    coords = _parse_floats(start_raw, "start")
    dim_raw = _resolve(args, cfg, "dim")
    dim = len(coords) if dim_raw is None else _as_int(dim_raw, "dim")
    if dim != len(coords):
        raise UsageError(f"--dim {dim} does not match the {len(coords)} "
                         "coordinates of --start")
    alpha_raw = _resolve(args, cfg, "alpha")
    if alpha_raw is None:
        raise UsageError("--alpha is required")
    alpha = _as_float(alpha_raw, "alpha")
    return Point.from_array(coords), StableParams(alpha, dim)


def _direction(val) -> Direction:
    try:
        return Direction(str(val).strip().lower())
    except ValueError:
        raise UsageError(
            f"direction must be 'down' or 'up', got {val!r}") from None


def _choice(val, name: str, allowed) -> str:
    s = str(val).strip().lower()
    if s not in allowed:
        raise UsageError(
            f"--{name} must be one of {', '.join(sorted(allowed))}, "
            f"got {val!r}")
    return s


@contextlib.contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        fh = open(path, "w", newline="")
        try:
            yield fh
        finally:
            fh.close()


def _sharded_rows(n: int, workers: int, fn) -> list:
    """Evaluate fn(i) for i < n across threads; order is always by i."""
    rows = [None] * n

    def run(lo, hi):
        for i in range(lo, hi):
            rows[i] = fn(i)

    if workers <= 1 or n <= 1:
        run(0, n)
        return rows
    bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(run, lo, hi)
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        for f in futs:
            f.result()
    return rows


# ------------------------------------------------------------ sample


def cmd_sample(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    start, params = _resolve_geometry(args, cfg)
    level = _as_float(_resolve(args, cfg, "barrier", 1.0), "barrier")
    direction = _direction(_resolve(args, cfg, "direction", "down"))
    barrier = Barrier(level, direction)
    measure = _choice(_resolve(args, cfg, "measure", "plain"), "measure",
                      ("plain", "conditioned"))
    n = _as_int(_resolve(args, cfg, "n", 1000), "n")
    if n < 0:
        raise UsageError("--n must be nonnegative")
    workers = _as_int(_resolve(args, cfg, "workers", 1), "workers")
    seed = _resolve_seed(args, cfg)
    out_path = _resolve(args, cfg, "out")
    fmt = _choice(_resolve(args, cfg, "format", "csv"), "format",
                  ("csv", "jsonl"))

    if measure == "plain":
        def draw(i):
            y = overshoot_point(start, barrier, params, RngStream(seed, i))
            return y.as_array(), 1.0
    else:
        # the conditioned law is defined for crossings into the slab, so
        # the barrier must be one of its faces, oriented inward
        if level == 1.0 and direction is Direction.DOWN:
            face = 1
        elif level == -1.0 and direction is Direction.UP:
            face = -1
        else:
            raise DomainError(
                "conditioned draws need --barrier 1 --direction down or "
                "--barrier -1 --direction up")
        cache = ConditionedSamplerCache(face, params)
        expo = params.alpha - 1.0
        w_start = abs(start.first) ** expo

        def draw(i):
            rng = RngStream(seed, i)
            y1 = overshoot_first_coord_conditioned(
                start.first, face, params.alpha, cache, rng.first_lane)
            if params.d > 1:
                t = start.transverse + mv_cauchy(
                    abs(start.first - y1), params.d - 1, rng.transverse_lane)
            else:
                t = np.empty(0)
            return np.concatenate([[y1], t]), w_start / abs(y1) ** expo

    rows = _sharded_rows(n, workers, draw)
    names = [f"y{k}" for k in range(1, params.d + 1)]
    with _open_out(out_path) as fh:
        if fmt == "csv":
            w = csv.writer(fh)
            w.writerow(["sample_id"] + names + ["weight"])
            for i, (y, weight) in enumerate(rows):
                w.writerow([i] + [_fmt(v) for v in y] + [_fmt(weight)])
        else:
            for i, (y, weight) in enumerate(rows):
                rec = {"sample_id": i}
                rec.update((nm, float(v)) for nm, v in zip(names, y))
                rec["weight"] = float(weight)
                fh.write(json.dumps(rec) + "\n")
    return EXIT_OK


# ------------------------------------------------------------ walk


_MODES = {"full": Mode.FULL_TRACE, "full-trace": Mode.FULL_TRACE,
          "collapsed": Mode.COLLAPSED}


def cmd_walk(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    start, params = _resolve_geometry(args, cfg)
    measure = Measure(_choice(_resolve(args, cfg, "measure", "plain"),
                              "measure", ("plain", "conditioned")))
    mode = _MODES[_choice(_resolve(args, cfg, "mode", "collapsed"), "mode",
                          _MODES)]
    n = _as_int(_resolve(args, cfg, "n", 1000), "n")
    if n < 0:
        raise UsageError("--n must be nonnegative")
    workers = _as_int(_resolve(args, cfg, "workers", 1), "workers")
    seed = _resolve_seed(args, cfg)
    out_path = _resolve(args, cfg, "out")
    fmt = _choice(_resolve(args, cfg, "format", "csv"), "format",
                  ("csv", "jsonl"))
    trace_path = _resolve(args, cfg, "trace")
    mc_raw = _resolve(args, cfg, "max-crossings")
    max_crossings = None if mc_raw is None else _as_int(mc_raw,
                                                        "max-crossings")

    config = WalkConfig(params=params, start=start, measure=measure,
                        mode=mode, max_crossings=max_crossings,
                        record_trace=trace_path is not None)
    results = batch_walk(config, n, workers=workers, rng_master=seed)

    names = [f"y{k}" for k in range(1, params.d + 1)]
    with _open_out(out_path) as fh:
        if fmt == "csv":
            w = csv.writer(fh)
            w.writerow(["sample_id", "status", "n_crossings", "weight"]
                       + names)
            for i, res in enumerate(results):
                if res.final_point is not None:
                    pt = [_fmt(v) for v in res.final_point.as_array()]
                else:
                    pt = [""] * params.d
                w.writerow([i, res.status.value, res.n_crossings,
                            _fmt(res.weight)] + pt)
        else:
            for i, res in enumerate(results):
                rec = {"sample_id": i, "status": res.status.value,
                       "n_crossings": res.n_crossings,
                       "weight": float(res.weight)}
                arr = (res.final_point.as_array()
                       if res.final_point is not None else [None] * params.d)
                for nm, v in zip(names, arr):
                    rec[nm] = None if v is None else float(v)
                fh.write(json.dumps(rec) + "\n")

    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            for i, res in enumerate(results):
                for ev in res.trace or ():
                    rec = {"sample_id": i, "k": ev.index, "face": ev.face,
                           "x1": float(ev.first)}
                    if ev.transverse is not None:
                        rec["transverse"] = [float(v) for v in ev.transverse]
                    fh.write(json.dumps(rec) + "\n")
    return EXIT_OK


# ------------------------------------------------------------ density


_KERNEL_POINTS = {
    "pcr": ("x", "y"),
    "triple": ("x", "w", "y", "z"),
    "double": ("x", "y", "z"),
    "overshoot": ("x", "z"),
    "overshoot-cond": ("x", "y"),
    "green": ("x", "y"),
    "jump": ("v",),
    "ladder-asc": ("x", "z"),
    "ladder-desc": ("x", "arg"),
    "ball": ("x", "y", "center"),
}
_NEEDS_BARRIER = frozenset(
    ("triple", "double", "overshoot", "overshoot-cond", "green"))
_SCALAR_ARGS = frozenset(("arg",))


def _kernel_evaluator(kernel, params, barrier, radius):
    if kernel == "ball":
        if radius is None:
            raise UsageError("--radius is required for the ball kernel")
        return lambda g: ball_hitting_density(g["x"], g["y"], g["center"],
                                              radius, params)
    table = {
        "pcr": lambda g: pcr_density(g["x"], g["y"], params),
        "triple": lambda g: triple_density(g["x"], g["w"], g["y"], g["z"],
                                           barrier, params),
        "double": lambda g: double_density(g["x"], g["y"], g["z"], barrier,
                                           params),
        "overshoot": lambda g: overshoot_density(g["x"], g["z"], barrier,
                                                 params),
        "overshoot-cond": lambda g: overshoot_density_conditioned(
            g["x"], g["y"], barrier, params),
        "green": lambda g: green_halfspace(g["x"], g["y"], barrier, params),
        "jump": lambda g: jump_density(g["v"].as_array(), params),
        "ladder-asc": lambda g: ladder_potentials(LadderKind.ASCENDING,
                                                  g["x"], g["z"], params),
        "ladder-desc": lambda g: ladder_potentials(
            LadderKind.DESCENDING_RENEWAL, g["x"], g["arg"], params),
    }
    return table[kernel]


def _read_points_file(path, names, d: int) -> list:
    expected = []
    for nm in names:
        if nm in _SCALAR_ARGS:
            expected.append(nm)
        else:
            expected.extend(f"{nm}{k}" for k in range(1, d + 1))
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DomainError("points file is empty") from None
            if header != expected:
                raise DomainError(
                    f"points file header must be {','.join(expected)}")
            raw = [row for row in reader if row]
    except OSError as exc:
        raise DomainError(f"cannot read points file: {exc}") from None
    if not raw:
        raise DomainError("points file has no data rows")
    groups = []
    for row in raw:
        if len(row) != len(expected):
            groups.append(None)
            continue
        try:
            vals = [float(cell) for cell in row]
        except ValueError:
            groups.append(None)
            continue
        g = {}
        pos = 0
        for nm in names:
            if nm in _SCALAR_ARGS:
                g[nm] = vals[pos]
                pos += 1
            else:
                g[nm] = Point.from_array(vals[pos:pos + d])
                pos += d
        groups.append(g)
    return groups


def cmd_density(args) -> int:
    kernel = args.kernel
    params = StableParams(args.alpha, args.dim)
    barrier = None
    if kernel in _NEEDS_BARRIER:
        barrier = Barrier(args.barrier, _direction(args.direction))
    evaluate = _kernel_evaluator(kernel, params, barrier, args.radius)
    names = _KERNEL_POINTS[kernel]

    if args.points is not None:
        for nm in names:
            if getattr(args, nm) is not None:
                raise UsageError(
                    "--points and per-point flags are mutually exclusive")
        groups = _read_points_file(args.points, names, params.d)
    else:
        g = {}
        for nm in names:
            raw = getattr(args, nm)
            if raw is None:
                raise UsageError(f"--{nm} is required for kernel {kernel}")
            if nm in _SCALAR_ARGS:
                g[nm] = _as_float(raw, nm)
            else:
                coords = _parse_floats(raw, nm)
                if len(coords) != params.d:
                    raise UsageError(f"--{nm} needs {params.d} coordinates, "
                                     f"got {len(coords)}")
                g[nm] = Point.from_array(coords)
        groups = [g]

    # out-of-domain rows become markers; only a batch with no good row
    # at all turns into a nonzero exit
    values = []
    n_err = 0
    for g in groups:
        if g is None:
            values.append("error")
            n_err += 1
            continue
        try:
            values.append(_fmt(evaluate(g)))
        except DomainError:
            values.append("error")
            n_err += 1
    with _open_out(args.out) as fh:
        w = csv.writer(fh)
        w.writerow(["value"])
        for v in values:
            w.writerow([v])
    return EXIT_DOMAIN if n_err == len(groups) else EXIT_OK


# ------------------------------------------------------------ validate


def cmd_validate(args) -> int:
    if args.all == (args.suite is not None):
        raise UsageError("give exactly one of --suite or --all")
    if (args.alpha is None) != (args.dim is None):
        raise UsageError("--alpha and --dim must be given together")
    param_sets = None
    if args.alpha is not None:
        param_sets = [(a, d) for a in args.alpha for d in args.dim]
    seed = _resolve_seed(args, {})

    names = sorted(SUITES) if args.all else [args.suite]
    reports = [run_suite(nm, param_sets, master_seed=seed, n=args.n,
                         workers=args.workers) for nm in names]
    passed = all(r.overall_pass for r in reports)
    if len(reports) == 1:
        text = reports[0].to_json()
    else:
        text = json.dumps(
            {"overall_pass": passed,
             "suites": [json.loads(r.to_json()) for r in reports]},
            indent=2)
    with _open_out(args.out) as fh:
        fh.write(text + "\n")
    return EXIT_OK if passed else EXIT_FAIL


# ------------------------------------------------------------ hist


def _read_sample_columns(path):
    """First coordinate and first transverse coordinate of a sample CSV."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DomainError("input CSV is empty") from None
            try:
                i1, i2 = header.index("y1"), header.index("y2")
            except ValueError:
                raise DomainError(
                    "input CSV must carry y1 and y2 columns") from None
            xs, ys = [], []
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise DomainError("malformed input CSV: ragged row")
                if row[i1] == "" and row[i2] == "":
                    continue  # capped walks carry no endpoint
                try:
                    xs.append(float(row[i1]))
                    ys.append(float(row[i2]))
                except ValueError as exc:
                    raise DomainError(
                        f"malformed input CSV: {exc}") from None
    except OSError as exc:
        raise DomainError(f"cannot read input CSV: {exc}") from None
    if not xs:
        raise DomainError("input CSV has no usable rows")
    return np.array(xs), np.array(ys)


def _write_marginal(path, edges, counts) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count"])
        for k in range(len(counts)):
            w.writerow([f"{edges[k]:.17g}", f"{edges[k + 1]:.17g}",
                        int(counts[k])])


def cmd_hist(args) -> int:
    nx, ny = _parse_pair(args.bins, "bins", int)
    x_range = _parse_pair(args.xrange, "xrange", float)
    y_range = _parse_pair(args.yrange, "yrange", float)
    xs, ys = _read_sample_columns(args.infile)
    hist = Histogram2D.from_samples(xs, ys, x_range=x_range, y_range=y_range,
                                    nx=nx, ny=ny)
    hist.to_csv(args.out)
    root, ext = os.path.splitext(args.out)
    _write_marginal(root + "_mx" + (ext or ".csv"), *hist.marginal_x())
    _write_marginal(root + "_my" + (ext or ".csv"), *hist.marginal_y())
    print(f"{len(xs)} rows read, {int(hist.counts.sum())} binned, "
          f"{hist.clipped_count} clipped")
    return EXIT_OK


# ------------------------------------------------------------ parser


def _add_run_flags(p) -> None:
    p.add_argument("--config",
                   help="JSON file with flat keys matching flag names; "
                        "explicit flags override it")
    p.add_argument("--alpha", type=float, help="stability index in (0,2)")
    p.add_argument("--dim", type=int,
                   help="ambient dimension (default: length of --start)")
    p.add_argument("--start", help="start point 'x1,x2,...'")
    p.add_argument("--n", type=int, help="number of draws (default 1000)")
    p.add_argument("--seed", type=int,
                   help="master seed (default: WOHS_SEED or 0)")
    p.add_argument("--workers", type=int,
                   help="thread shards for the batch (default 1)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"],
                   help="output format (default csv)")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="wohs",
        description="First-passage Monte Carlo for isotropic stable "
                    "processes: exact overshoot sampling, walk-on-half-"
                    "spaces into the slab, closed-form kernels, and "
                    "statistical validation.")
    sub = top.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sample",
                        help="draw first crossings of a single barrier")
    _add_run_flags(ps)
    ps.add_argument("--barrier", type=float,
                    help="barrier level (default 1)")
    ps.add_argument("--direction", choices=["down", "up"],
                    help="crossing direction (default down)")
    ps.add_argument("--measure", choices=["plain", "conditioned"],
                    help="sampling measure (default plain)")
    ps.set_defaults(func=cmd_sample)

    pw = sub.add_parser("walk", help="walk on half-spaces into the slab")
    _add_run_flags(pw)
    pw.add_argument("--measure", choices=["plain", "conditioned"],
                    help="walk measure (default plain)")
    pw.add_argument("--mode", choices=["full", "collapsed"],
                    help="transverse handling (default collapsed)")
    pw.add_argument("--max-crossings", type=int,
                    help="crossing cap per walk")
    pw.add_argument("--trace",
                    help="also write per-crossing events as JSONL here")
    pw.set_defaults(func=cmd_walk)

    pk = sub.add_parser("density", help="evaluate a closed-form kernel")
    pk.add_argument("--kernel", required=True,
                    choices=sorted(_KERNEL_POINTS))
    pk.add_argument("--alpha", type=float, required=True)
    pk.add_argument("--dim", type=int, default=2)
    pk.add_argument("--barrier", type=float, default=0.0,
                    help="barrier level for barrier kernels (default 0)")
    pk.add_argument("--direction", choices=["down", "up"], default="down")
    pk.add_argument("--x", help="point 'x1,...,xd'; use --x=-1,0 for "
                                "values starting with a minus sign")
    pk.add_argument("--w", help="point 'w1,...,wd'")
    pk.add_argument("--y", help="point 'y1,...,yd'")
    pk.add_argument("--z", help="point 'z1,...,zd'")
    pk.add_argument("--center", help="ball center 'c1,...,cd'")
    pk.add_argument("--v", help="jump displacement 'v1,...,vd'")
    pk.add_argument("--arg", type=float,
                    help="scalar argument of ladder-desc")
    pk.add_argument("--radius", type=float, help="ball radius")
    pk.add_argument("--points",
                    help="CSV of evaluation points, one kernel argument "
                         "tuple per row")
    pk.add_argument("--out", help="output path (default: stdout)")
    pk.set_defaults(func=cmd_density)

    pv = sub.add_parser("validate", help="run statistical validation suites")
    pv.add_argument("--suite", choices=sorted(SUITES))
    pv.add_argument("--all", action="store_true",
                    help="run every suite")
    pv.add_argument("--alpha", type=float, nargs="+",
                    help="alpha grid (with --dim)")
    pv.add_argument("--dim", type=int, nargs="+",
                    help="dimension grid (with --alpha)")
    pv.add_argument("--n", type=int, default=100_000,
                    help="sample size per check (default 100000)")
    pv.add_argument("--seed", type=int,
                    help="master seed (default: WOHS_SEED or 0)")
    pv.add_argument("--workers", type=int, default=1)
    pv.add_argument("--out", help="report path (default: stdout)")
    pv.set_defaults(func=cmd_validate)

    ph = sub.add_parser("hist", help="bin a sample CSV into histogram CSVs")
    ph.add_argument("--in", dest="infile", required=True,
                    help="sample or walk CSV")
    ph.add_argument("--out", required=True,
                    help="histogram CSV path; marginals get _mx/_my")
    ph.add_argument("--bins", default="60,60", help="'NX,NY' (default 60,60)")
    ph.add_argument("--xrange", default="-1,1",
                    help="'LO,HI' for the first coordinate (default -1,1)")
    ph.add_argument("--yrange", default="-8,8",
                    help="'LO,HI' for the transverse coordinate "
                         "(default -8,8)")
    ph.set_defaults(func=cmd_hist)

    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wohs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ConvergenceError, OSError) as exc:
        print(f"wohs: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
