"""Command-line interface.

Every command is deterministic given its inputs and ``--seed``. JSON reports
carry a ``timings`` object that is the only part allowed to vary between runs.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (singular or
degenerate geometry), 4 internal error. Errors are reported as a JSON object
on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import fused_covariance, overall_std
from .errors import InputError, MocapError, NumericalError
from .experiments import PAIR_ANGLES, run_accuracy_sweep, run_pair_angle_sweep
from .geometry import depth
from .montecarlo import McConfig, mc_covariance, percent_std_difference
from .scenario import DEFAULT_FOCAL, DEFAULT_SIGMA, error_map, error_map_mc, ring_scenario
from .scenario_file import dump_scenario, load_scenario, scenario_hash
from .selection import greedy_select, rank_pairs

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_INTERNAL = 0, 2, 3, 4


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- formatting -------------------------------------------------------------


def fmt(x) -> str:
    """9 significant digits; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".9g")


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def report(command: str, params: dict, results: dict, timings: dict, shash=None) -> str:
    doc = {
        "command": {"name": command, "params": params},
        "version": __version__,
        "scenario_hash": shash,
        "results": results,
        "timings": timings,
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def strip_timings(text: str) -> str:
    """Report text with the non-deterministic ``timings`` field removed."""
    doc = json.loads(text)
    doc.pop("timings", None)
    return json.dumps(doc, sort_keys=True)


# --- argument helpers -------------------------------------------------------


def _floats(text: str, n: int = None, name: str = "value"):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{name}: expected {n} numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{name}: values must be finite")
    return vals


def _ints(text: str, name: str):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{name}: empty list")
    return vals


def _point(args, scenario):
    p = np.array(_floats(args.point, 3, "--point"))
    if not scenario.contains(p):
        raise UsageError(f"point {p.tolist()} is outside the room")
    return p


def _subset(args):
    if not getattr(args, "subset", None):
        return None
    return [s.strip() for s in args.subset.split(",") if s.strip()]


def _scenario(args):
    sc = load_scenario(args.scenario)
    return sc, scenario_hash(sc)


def _seed(args, default: int) -> int:
    return default if args.seed is None else args.seed


# --- commands ---------------------------------------------------------------


def cmd_eval(args):
    t0 = time.perf_counter()
    sc, shash = _scenario(args)
    point = _point(args, sc)
    cams = sc.subset(_subset(args))
    vis = sc.visible_cameras(point, cams)
    if not vis:
        raise NumericalError("no camera sees the point")
    cov = fused_covariance(vis, point, sc.m_policy)
    per_camera = [
        {
            "id": c.id,
            "depth": depth(c, point),
            "propagated_std": c.noise_std(point) * depth(c, point) / c.focal,
        }
        for c in vis
    ]
    results = {
        "point": point,
        "m_policy": sc.m_policy.mode,
        "covariance": cov.reshape(-1),
        "overall_std": overall_std(cov),
        "cameras": per_camera,
        "not_visible": [c.id for c in cams if c not in vis],
    }
    params = {"scenario": str(args.scenario), "point": point, "subset": _subset(args)}
    if args.format == "csv":
        rows = [("overall_std", results["overall_std"])]
        rows += [(f"cov_{i}{j}", cov[i, j]) for i in range(3) for j in range(3)]
        rows += [(f"depth[{c['id']}]", c["depth"]) for c in per_camera]
        rows += [(f"propagated_std[{c['id']}]", c["propagated_std"]) for c in per_camera]
        return to_csv(["name", "value"], rows)
    return report("eval", params, results, {"total_s": time.perf_counter() - t0}, shash)


def cmd_mc_compare(args):
    t0 = time.perf_counter()
    sc, shash = _scenario(args)
    point = _point(args, sc)
    cams = sc.visible_cameras(point, sc.subset(_subset(args)))
    seed = _seed(args, sc.seed)
    theory = fused_covariance(cams, point, sc.m_policy)
    t1 = time.perf_counter()
    mc = mc_covariance(cams, point, McConfig(args.trials, seed, args.estimator), workers=args.threads)
    t2 = time.perf_counter()
    pct = percent_std_difference(mc, theory)
    results = {
        "theory_covariance": theory.reshape(-1),
        "mc_covariance": mc.sample_cov.reshape(-1),
        "mc_mean_error": mc.sample_mean_error,
        "theory_std": overall_std(theory),
        "mc_std": overall_std(mc.sample_cov),
        "percent_difference": pct,
        "trials_used": mc.trials_used,
        "trials_excluded": mc.trials_excluded,
    }
    params = {
        "scenario": str(args.scenario),
        "point": point,
        "trials": args.trials,
        "seed": seed,
        "estimator": args.estimator,
        "subset": _subset(args),
    }
    if args.format == "csv":
        keys = ["theory_std", "mc_std", "percent_difference", "trials_used", "trials_excluded"]
        return to_csv(["name", "value"], [(k, results[k]) for k in keys])
    timings = {"closed_form_s": t1 - t0, "mc_s": t2 - t1}
    return report("mc-compare", params, results, timings, shash)


FIG4_HEADER = ["m", "mean_percent_diff", "stderr", "points_used"]


def cmd_fig4(args):
    t0 = time.perf_counter()
    m_values = _ints(args.m_list, "--m-list")
    seed = _seed(args, 0)
    sc = ring_scenario(args.ring_size, args.radius, focal=args.focal, sigma=args.sigma, seed=seed)
    rows = run_accuracy_sweep(
        sc, m_values, args.points, McConfig(args.trials, seed, args.estimator), workers=args.threads
    )
    table = [(r.m, r.mean_percent_diff, r.stderr, r.points_used) for r in rows]
    if args.format == "csv":
        return to_csv(FIG4_HEADER, table)
    params = {
        "m_list": m_values,
        "points": args.points,
        "trials": args.trials,
        "seed": seed,
        "ring_size": args.ring_size,
        "radius": args.radius,
        "focal": args.focal,
        "sigma": args.sigma,
        "estimator": args.estimator,
    }
    results = {"columns": FIG4_HEADER, "rows": table}
    return report("fig4", params, results, {"total_s": time.perf_counter() - t0}, scenario_hash(sc))


FIG5_HEADER = [
    "angle_rad",
    "theory_major",
    "theory_minor",
    "mc_major",
    "mc_minor",
    "theory_angle_deg",
    "mc_angle_deg",
]


def cmd_fig5(args):
    t0 = time.perf_counter()
    seed = _seed(args, 0)
    sc = ring_scenario(16, args.radius, focal=args.focal, sigma=args.sigma, seed=seed)
    rows = run_pair_angle_sweep(PAIR_ANGLES, McConfig(args.trials, seed, args.estimator), sc)
    table = [
        (
            r.angle,
            r.theory.major,
            r.theory.minor,
            r.mc.major,
            r.mc.minor,
            math.degrees(r.theory.angle),
            math.degrees(r.mc.angle),
        )
        for r in rows
    ]
    if args.polyline_out:
        poly = []
        for r in rows:
            for name, sec in (("theory", r.theory), ("mc", r.mc)):
                for i, p in enumerate(sec.polyline(args.polyline_points)):
                    poly.append((r.angle, name, i, *p))
        _write(args.polyline_out, to_csv(["angle_rad", "curve", "index", "x", "y", "z"], poly))
    if args.format == "csv":
        return to_csv(FIG5_HEADER, table)
    params = {"trials": args.trials, "seed": seed, "radius": args.radius, "focal": args.focal,
              "sigma": args.sigma, "estimator": args.estimator}
    results = {"columns": FIG5_HEADER, "rows": table}
    return report("fig5", params, results, {"total_s": time.perf_counter() - t0}, scenario_hash(sc))


def _dims(text: str):
    try:
        dims = [int(t) for t in text.lower().replace("x", ",").split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--dims: expected NX,NY,NZ, got {text!r}") from None
    if len(dims) != 3 or min(dims) < 1:
        raise UsageError(f"--dims: expected three integers >= 1, got {text!r}")
    return dims


def cmd_error_map(args):
    dims = _dims(args.dims)
    sc, shash = _scenario(args)
    subset = _subset(args)
    t0 = time.perf_counter()
    emap = error_map(sc, dims, subset)
    t_closed = time.perf_counter() - t0
    mc_std = None
    timings = {"closed_form_s": t_closed}
    seed = _seed(args, sc.seed)
    if args.with_mc:
        t1 = time.perf_counter()
        mc_std = error_map_mc(sc, dims, McConfig(args.trials, seed, args.estimator), subset, args.threads)
        t_mc = time.perf_counter() - t1
        timings.update(mc_s=t_mc, speed_ratio=t_mc / max(t_closed, 1e-12))

    centers = emap.centers()
    idx = np.indices(emap.dims).reshape(3, -1).T
    std = emap.std.reshape(-1)
    count = emap.visible_count.reshape(-1)
    header = ["ix", "iy", "iz", "x", "y", "z", "std", "visible_count"]
    cols = [idx[:, 0], idx[:, 1], idx[:, 2], centers[:, 0], centers[:, 1], centers[:, 2], std, count]
    if mc_std is not None:
        header.append("mc_std")
        cols.append(mc_std.reshape(-1))
    grid_rows = list(zip(*[c.tolist() for c in cols]))

    if args.out:
        if str(args.out).endswith(".npz"):
            extra = {} if mc_std is None else {"mc_std": mc_std}
            np.savez(args.out, origin=emap.origin, spacing=emap.spacing, std=emap.std,
                     visible_count=emap.visible_count, **extra)
        else:
            _write(args.out, to_csv(header, grid_rows))
    if args.format == "csv":
        return to_csv(header, grid_rows)

    finite = std[np.isfinite(std)]
    results = {
        "dims": emap.dims,
        "origin": emap.origin,
        "spacing": emap.spacing,
        "voxels": int(std.size),
        "unreconstructable": int(std.size - finite.size),
        "std_min": float(finite.min()) if finite.size else None,
        "std_max": float(finite.max()) if finite.size else None,
        "std_mean": float(finite.mean()) if finite.size else None,
    }
    if mc_std is not None:
        ok = np.isfinite(mc_std.reshape(-1)) & np.isfinite(std)
        rel = np.abs(mc_std.reshape(-1)[ok] - std[ok]) / std[ok]
        results["mc_mean_percent_diff"] = float(100 * rel.mean()) if rel.size else None
    if len(grid_rows) == 1:
        results["std"] = std[0]
    params = {"scenario": str(args.scenario), "dims": dims, "subset": subset, "with_mc": args.with_mc,
              "trials": args.trials if args.with_mc else None, "seed": seed}
    return report("error-map", params, results, timings, shash)


def cmd_select(args):
    t0 = time.perf_counter()
    sc, shash = _scenario(args)
    point = _point(args, sc)
    if args.k < 2:
        raise UsageError("--k must be >= 2")
    if args.k > len(sc.cameras):
        raise UsageError(f"--k {args.k} exceeds the camera count {len(sc.cameras)}")
    ranking = rank_pairs(sc, point)
    selection = greedy_select(sc, point, args.k)
    table = [(p.camera_a, p.camera_b, p.quality) for p in ranking]
    if args.format == "csv":
        return to_csv(["camera_a", "camera_b", "quality"], table)
    results = {
        "ranking": [{"camera_a": a, "camera_b": b, "quality": q} for a, b, q in table],
        "greedy": {"camera_ids": selection.camera_ids, "stds": selection.stds},
    }
    params = {"scenario": str(args.scenario), "point": point, "k": args.k}
    return report("select", params, results, {"total_s": time.perf_counter() - t0}, shash)


def cmd_ring_gen(args):
    sc = ring_scenario(args.m, args.radius, args.height, args.focal, args.sigma, _seed(args, 0))
    return dump_scenario(sc)


# --- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the scenario seed)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--output", "-o", default=None, help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    def ring_args(p, radius=True):
        if radius:
            p.add_argument("--radius", type=float, default=10.0)
        p.add_argument("--focal", type=float, default=DEFAULT_FOCAL)
        p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)

    def mc_args(p, trials):
        p.add_argument("--trials", "-N", type=int, default=trials)
        p.add_argument("--estimator", choices=("gls", "midpoint"), default="gls")

    parser = _Parser(prog="mocapvar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", parents=[common], help="closed-form covariance at a point")
    p.add_argument("scenario")
    p.add_argument("--point", required=True)
    p.add_argument("--subset")
    p.set_defaults(func=cmd_eval, default_format="json")

    p = sub.add_parser("mc-compare", parents=[common], help="closed form vs Monte Carlo at a point")
    p.add_argument("scenario")
    p.add_argument("--point", required=True)
    p.add_argument("--subset")
    mc_args(p, 100_000)
    p.set_defaults(func=cmd_mc_compare, default_format="json")

    p = sub.add_parser("fig4", parents=[common], help="accuracy sweep over camera counts")
    p.add_argument("--m-list", default="2,4,16,64")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--ring-size", type=int, default=256)
    mc_args(p, 10_000)
    ring_args(p)
    p.set_defaults(func=cmd_fig4, default_format="csv")

    p = sub.add_parser("fig5", parents=[common], help="1-sigma ellipses for camera pairs on a 16-ring")
    mc_args(p, 100_000)
    ring_args(p)
    p.add_argument("--polyline-out", default=None, help="CSV of sampled 1-sigma curves")
    p.add_argument("--polyline-points", type=int, default=64)
    p.set_defaults(func=cmd_fig5, default_format="csv")

    p = sub.add_parser("error-map", parents=[common], help="voxel grid of closed-form std")
    p.add_argument("scenario")
    p.add_argument("--dims", required=True, help="NX,NY,NZ")
    p.add_argument("--out", default=None, help="grid output (.csv or .npz)")
    p.add_argument("--subset")
    p.add_argument("--with-mc", action="store_true", help="also run Monte Carlo per voxel and time both")
    mc_args(p, 10_000)
    p.set_defaults(func=cmd_error_map, default_format="json")

    p = sub.add_parser("select", parents=[common], help="rank camera pairs and grow a subset")
    p.add_argument("scenario")
    p.add_argument("--point", required=True)
    p.add_argument("--k", type=int, default=2)
    p.set_defaults(func=cmd_select, default_format="json")

    p = sub.add_parser("ring-gen", parents=[common], help="emit a ring scenario file")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--height", type=float, default=0.0)
    ring_args(p)
    p.set_defaults(func=cmd_ring_gen, default_format="json")
    return parser


def _write(path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def run(argv=None) -> tuple:
    """Run a command; returns ``(exit_code, stdout_text, stderr_text)``."""
    try:
        args = build_parser().parse_args(argv)
        if args.format is None:
            args.format = args.default_format
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if hasattr(args, "trials") and args.trials < 2:
            raise UsageError("--trials must be >= 2")
        out = args.func(args)
        if args.output:
            _write(args.output, out)
            return EXIT_OK, "", ""
        return EXIT_OK, out, ""
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0), "", ""
    except InputError as exc:
        return EXIT_INPUT, "", _error_json(exc, EXIT_INPUT)
    except NumericalError as exc:
        return EXIT_NUMERICAL, "", _error_json(exc, EXIT_NUMERICAL)
    except MocapError as exc:
        return EXIT_INTERNAL, "", _error_json(exc, EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001
        return EXIT_INTERNAL, "", _error_json(exc, EXIT_INTERNAL)


def _error_json(exc: BaseException, code: int) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n"


def main(argv=None) -> int:
    code, out, err = run(argv)
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
