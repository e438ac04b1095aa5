"""Command-line entry point: ``gastrack simulate | postprocess | metrics | scenario``.

Exit codes: 0 success, 2 configuration or schema error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import config as cfgio
from . import logio, post, sim
from .geo import GeodeticPosition, LocalFrame

log = logging.getLogger("gastrack")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
OUT_ENV = "GASTRACK_OUT"
MANIFEST = "manifest.json"
FILES = {
    "telemetry": "telemetry.csv",
    "measurements": "measurements.csv",
    "tracker": "tracker.csv",
    "truth": "truth.csv",
}


class UsageError(Exception):
    """Bad input files or arguments; maps to exit code 2."""


def _version() -> str:
    try:
        return metadata.version("gastrack")
    except metadata.PackageNotFoundError:
        return "unknown"


# --- simulate ----------------------------------------------------------------

def write_run(logs: sim.RunLogs, out: Path) -> None:
    cfg = logs.config
    out.mkdir(parents=True, exist_ok=True)
    logio.write_telemetry(out / FILES["telemetry"], logio.telemetry_rows(logs.telemetry))
    logio.write_measurements(out / FILES["measurements"], [logio.MeasurementRow.from_record(m) for m in logs.measurements])
    logio.write_tracker(out / FILES["tracker"], logio.tracker_rows(logs.tracker))
    truth = []
    for k, row in enumerate(logs.truth):
        g = logs.truth_geodetic(row)
        truth.append(logio.TelemetryRow(row.t, g.latitude, g.longitude, g.altitude, k))
    logio.write_telemetry(out / FILES["truth"], truth)
    (out / "config.yaml").write_text(cfgio.dumps(cfg), encoding="utf-8")
    o = logs.frame.origin
    manifest = {
        "scenario": cfg.name,
        "seed": cfg.seed,
        "config_sha256": cfgio.config_hash(cfg),
        "versions": {
            "gastrack": _version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "origin": {"lat": o.latitude, "lon": o.longitude, "alt": o.altitude},
        # antenna -> optical endpoint, for postprocessing with corrected geometry
        "laser_offset": [0.0 - x for x in cfg.station.antenna_offset],
        "reflector_offset": list(cfg.drone.reflector_offset),
        "background_ppm": cfg.gas.background_ppm,
        "link": logs.link_stats,
        "waypoint_arrivals": [[t, i] for t, i in logs.waypoint_arrivals],
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _prepare_out(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()) and not force:
        raise UsageError(f"{out} exists and is not empty; pass --force to overwrite")


def _simulate_one(cfg: sim.ScenarioConfig, out: Path) -> str:
    logs = sim.run_scenario(cfg)
    write_run(logs, out)
    return str(out)


def _resolve_configs(args) -> list[sim.ScenarioConfig]:
    cfgs = []
    for path in args.config or []:
        cfgs.append(cfgio.load(path))
    for name in args.scenario or []:
        if name not in sim.BUILTIN:
            raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(sim.BUILTIN)}")
        cfgs.append(sim.BUILTIN[name]())
    if not cfgs:
        raise UsageError("give --config or --scenario")
    if args.seed is not None:
        cfgs = [dataclasses.replace(c, seed=args.seed) for c in cfgs]
    return cfgs


def cmd_simulate(args) -> int:
    cfgs = _resolve_configs(args)
    root = Path(args.out) if args.out else Path(os.environ.get(OUT_ENV, "runs"))
    if len(cfgs) == 1 and args.out:
        outs = [root]
    else:
        outs = [root / c.name for c in cfgs]
        if len({str(o) for o in outs}) != len(outs):
            raise UsageError("scenario names must be distinct in one batch")
    for o in outs:
        _prepare_out(o, args.force)
    if args.batch and args.batch > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=args.batch) as pool:
            for done in pool.map(_simulate_one, cfgs, outs):
                print(done)
    else:
        for c, o in zip(cfgs, outs):
            print(_simulate_one(c, o))
    return EXIT_OK


# --- postprocess -------------------------------------------------------------

def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    return vals


def parse_plane(text: str) -> post.PlaneSpec:
    """``east,north,up,normal_east,normal_north``; the normal is normalised."""
    e, n, u, ne, nn = _floats(text, 5, "--plane")
    norm = math.hypot(ne, nn)
    if norm == 0:
        raise UsageError("--plane: normal must be nonzero")
    return post.PlaneSpec((e, n, u), (ne / norm, nn / norm))


def _manifest(directory: Path) -> dict | None:
    p = directory / MANIFEST
    if p.is_file():
        return json.loads(p.read_text(encoding="utf-8"))
    return None


def _load_telemetry(path: Path, frame: LocalFrame) -> post.TelemetryLog:
    rows = logio.read_telemetry(path)
    return post.TelemetryLog.from_samples(((r.t, GeodeticPosition(r.lat, r.lon, r.alt)) for r in rows), frame)


def run_postprocess(telemetry: Path, measurements: Path, out: Path, plane=None, origin=None,
                    laser_offset=(0.0, 0.0, 0.0), reflector_offset=(0.0, 0.0, 0.0)):
    recs = [r.to_record() for r in logio.read_measurements(measurements)]
    if origin is None:
        m = _manifest(telemetry.parent)
        if m is not None:
            origin = GeodeticPosition(m["origin"]["lat"], m["origin"]["lon"], m["origin"]["alt"])
        elif recs:
            origin = recs[0].tdlas_position
        else:
            origin = GeodeticPosition(0.0, 0.0, 0.0)
    frame = LocalFrame(origin)
    tel = _load_telemetry(telemetry, frame)
    rows, rejects = post.postprocess(tel, recs, plane, laser_offset, reflector_offset)
    out.parent.mkdir(parents=True, exist_ok=True)
    logio.write_results(out, rows)
    logio.write_rejects(out.with_name(out.stem + ".rejects.csv"), rejects)
    return rows, rejects


def cmd_postprocess(args) -> int:
    run = Path(args.run) if args.run else None
    telemetry = Path(args.telemetry) if args.telemetry else (run / FILES["telemetry"] if run else None)
    measurements = Path(args.measurements) if args.measurements else (run / FILES["measurements"] if run else None)
    if telemetry is None or measurements is None:
        raise UsageError("give --run or both --telemetry and --measurements")
    for p in (telemetry, measurements):
        if not p.is_file():
            raise UsageError(f"missing file {p}")
    out = Path(args.out) if args.out else measurements.parent / "results.csv"
    if out.exists() and not args.force:
        raise UsageError(f"{out} exists; pass --force to overwrite")
    plane = parse_plane(args.plane) if args.plane else None
    origin = GeodeticPosition(*_floats(args.origin, 3, "--origin")) if args.origin else None
    laser = _floats(args.laser_offset, 3, "--laser-offset") if args.laser_offset else (0.0, 0.0, 0.0)
    refl = _floats(args.reflector_offset, 3, "--reflector-offset") if args.reflector_offset else (0.0, 0.0, 0.0)
    rows, rejects = run_postprocess(telemetry, measurements, out, plane, origin, laser, refl)
    print(f"{out}: {len(rows)} results, {len(rejects)} rejects")
    return EXIT_OK


# --- metrics -----------------------------------------------------------------

def compute_metrics(run: Path, bin_width: float = 1.0, distance_source: str = "auto") -> dict:
    for key in ("telemetry", "measurements", "tracker"):
        if not (run / FILES[key]).is_file():
            raise UsageError(f"missing file {run / FILES[key]}")
    m = _manifest(run) or {}
    recs = [r.to_record() for r in logio.read_measurements(run / FILES["measurements"])]
    tracker = logio.read_tracker(run / FILES["tracker"])
    if distance_source == "auto":
        distance_source = "truth" if (run / FILES["truth"]).is_file() else "telemetry"
    if "origin" in m:
        origin = GeodeticPosition(m["origin"]["lat"], m["origin"]["lon"], m["origin"]["alt"])
    elif recs:
        origin = recs[0].tdlas_position
    else:
        origin = GeodeticPosition(0.0, 0.0, 0.0)
    frame = LocalFrame(origin)
    positions = _load_telemetry(run / FILES[distance_source], frame)
    laser = np.asarray(m.get("laser_offset", (0.0, 0.0, 0.0))) if distance_source == "truth" else np.zeros(3)

    with_d = []
    for r in recs:
        try:
            p = post.interpolate_position(positions, r.t)
        except post.OutOfRangeError:
            continue
        with_d.append((r, math.dist(p, np.add(frame.to_local(r.tdlas_position), laser))))
    table = post.distance_status_table(with_d, bin_width)
    valid_bins = [b for b in table if b.valid > 0]
    background = float(m.get("background_ppm", 400.0))
    off_r = float(np.linalg.norm(m.get("reflector_offset", (0.0, 0.0, 0.0))))
    off_l = float(np.linalg.norm(m.get("laser_offset", (0.0, 0.0, 0.0))))
    valid_d = [d for r, d in with_d if r.status.is_valid and d > off_r + off_l]
    budget = {}
    for label, d in (("reference_50m", 50.0), ("median_valid", float(np.median(valid_d)) if valid_d else None)):
        if d is not None and d > off_r + off_l:
            e = post.error_budget(off_r, off_l, d, background)
            budget[label] = {"d_m": d, "worst_case_ppm": e.worst_case, "first_order_ppm": e.first_order}
    return {
        "distance_source": distance_source,
        "records": len(recs),
        "valid_fraction": (sum(r.status.is_valid for r in recs) / len(recs)) if recs else 0.0,
        "mode_occupancy": post.mode_occupancy(tracker),
        "signal_reacquisition": [e._asdict() for e in post.signal_losses(recs)],
        "vision_reacquisition": [e._asdict() for e in post.vision_losses(tracker)],
        "last_valid_bin": [valid_bins[-1].lo, valid_bins[-1].hi] if valid_bins else None,
        "distance_table": [b._asdict() | {"valid_fraction": b.valid_fraction} for b in table],
        "error_budget": budget,
    }


def _report(metrics: dict) -> str:
    lines = [
        f"records: {metrics['records']}  valid fraction: {metrics['valid_fraction']:.3f}",
        "mode occupancy: " + ", ".join(f"{k} {v:.3f}" for k, v in metrics["mode_occupancy"].items()),
        f"last bin with valid records: {metrics['last_valid_bin']}  (distances from {metrics['distance_source']})",
    ]
    for name in ("signal_reacquisition", "vision_reacquisition"):
        eps = metrics[name]
        done = [e["duration"] for e in eps if e["duration"] is not None]
        stats = f"max {max(done):.2f} s, mean {sum(done) / len(done):.2f} s" if done else "none recovered"
        lines.append(f"{name.replace('_', ' ')}: {len(eps)} episodes, {stats}")
    for label, b in metrics["error_budget"].items():
        lines.append(f"error budget at {b['d_m']:.1f} m ({label}): worst case {b['worst_case_ppm']:.2f} ppm")
    return "\n".join(lines)


def cmd_metrics(args) -> int:
    run = Path(args.run)
    metrics = compute_metrics(run, args.bin_width, args.distance_source)
    out = Path(args.out) if args.out else run
    out.mkdir(parents=True, exist_ok=True)
    rows = [[b["lo"], b["hi"], b["count"], b["valid"], b["valid_fraction"]] for b in metrics["distance_table"]]
    text = "d_lo_m,d_hi_m,count,valid,valid_fraction\n" + "".join(
        f"{lo!r},{hi!r},{c},{v},{fr!r}\n" for lo, hi, c, v, fr in rows
    )
    (out / "metrics_distance.csv").write_text(text, encoding="utf-8")
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n", encoding="utf-8")
    report = _report(metrics)
    (out / "metrics.txt").write_text(report + "\n", encoding="utf-8")
    print(report)
    return EXIT_OK


# --- scenario ----------------------------------------------------------------

def cmd_scenario(args) -> int:
    if args.action == "list":
        for name in sim.BUILTIN:
            print(name)
        return EXIT_OK
    if args.name not in sim.BUILTIN:
        raise UsageError(f"unknown scenario {args.name!r}")
    sys.stdout.write(cfgio.dumps(sim.BUILTIN[args.name]()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gastrack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run scenarios and write logs")
    s.add_argument("--config", action="append", help="scenario YAML file (repeatable)")
    s.add_argument("--scenario", action="append", help="builtin scenario name (repeatable)")
    s.add_argument("--out", help=f"run directory, or batch root (default ${OUT_ENV} or ./runs)")
    s.add_argument("--seed", type=int)
    s.add_argument("--force", action="store_true", help="overwrite existing output")
    s.add_argument("--batch", type=int, default=1, help="worker processes for several scenarios")
    s.set_defaults(func=cmd_simulate)

    pp = sub.add_parser("postprocess", help="telemetry + measurements -> results CSV")
    pp.add_argument("--run", help="run directory (supplies default input paths and origin)")
    pp.add_argument("--telemetry")
    pp.add_argument("--measurements")
    pp.add_argument("--out", help="results CSV (default <run>/results.csv)")
    pp.add_argument("--plane", help="east,north,up,normal_east,normal_north in the local frame")
    pp.add_argument("--origin", help="lat,lon,alt of the local frame origin")
    pp.add_argument("--laser-offset", help="TDLAS antenna -> laser, east,north,up")
    pp.add_argument("--reflector-offset", help="drone antenna -> reflector, east,north,up")
    pp.add_argument("--force", action="store_true")
    pp.set_defaults(func=cmd_postprocess)

    m = sub.add_parser("metrics", help="validity-vs-distance and tracking statistics")
    m.add_argument("run")
    m.add_argument("--bin-width", type=float, default=1.0)
    m.add_argument("--distance-source", choices=("auto", "truth", "telemetry"), default="auto")
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics)

    sc = sub.add_parser("scenario", help="list or dump builtin scenarios")
    sc.add_argument("action", choices=("list", "dump"))
    sc.add_argument("name", nargs="?")
    sc.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except sim.ConfigError as exc:
        for key, msg in exc.problems:
            print(f"config error: {key}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, logio.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
