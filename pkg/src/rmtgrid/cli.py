"""Command line front end: ``rmtgrid <simulate|theory|calibrate|analyze|frames> ...``.

Exit status: 0 success, 1 invalid arguments or data, 2 file errors.
Every output starts with a metadata block holding the tool version, the
SHA-256 of the resolved configuration and the seed, and reruns with the
same inputs and flags reproduce it byte for byte.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .errors import RmtGridError, ValidationError
from .gridsim import generate_trace, load_case, load_scenario
from .gridsim.case import ieee118_path
from .gridsim.scenario import table2_path
from .indicators import as_function
from .laws import calibrate_d1, theory_set
from .pipeline import (
    PipelineConfig,
    decisions,
    default_region_map,
    export_frames,
    load_region_map,
    mask_rows,
    read_series_jsonl,
    regional_les,
    sliding_les,
    write_frames,
)
from .rmt import read_trace, write_trace


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for f in sorted(path.iterdir()):
            if f.is_file():
                h.update(f.name.encode())
                h.update(f.read_bytes())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def _meta(command: str, config: dict, seed: int) -> dict:
    canon = json.dumps({"command": command, **config}, sort_keys=True, separators=(",", ":"))
    return {
        "tool": "rmtgrid",
        "version": __version__,
        "command": command,
        "config_hash": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": seed,
        "config": config,
    }


def _resolve(path: str | None, default: Path) -> Path:
    """User path, or the shipped data file of the same name when it is not found locally."""
    if path is None:
        return default
    p = Path(path)
    if not p.exists() and p.name == default.name:
        return default
    return p


def _out(args):
    return sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8", newline="")


def _functions(args, default=("MSR",)):
    return tuple(as_function(f) for f in (args.function or default))


def cmd_simulate(args) -> int:
    case_dir = _resolve(args.case, ieee118_path())
    scen_path = _resolve(args.scenario, table2_path())
    case = load_case(case_dir)
    scenario = load_scenario(scen_path)
    seed = scenario.seed if args.seed is None else args.seed
    t_max = args.t if args.t is not None else scenario.t_max
    result = generate_trace(case, scenario, t_max, seed)
    config = {"case_sha256": _digest(case_dir), "scenario_sha256": _digest(scen_path), "t_max": t_max}
    meta = _meta("simulate", config, seed)
    meta["collapse_time"] = result.collapse_time if result.collapse_time is not None else "none"
    meta["flagged"] = f"{result.flagged[0]}-{result.flagged[-1]}" if result.flagged else "none"
    meta["config"] = json.dumps(config, sort_keys=True)
    if args.out in (None, "-"):
        raise ValidationError("simulate needs --out for the trace CSV")
    write_trace(result.trace, args.out, meta)
    return 0


def cmd_theory(args) -> int:
    fns = _functions(args, ("MSR", "T2", "T3", "T4", "DET", "LRT"))
    seed = args.seed or 0
    n, t = _need(args.n, "--n"), _need(args.t, "--t")
    vals = theory_set(fns, n, t, args.kappa4, args.trials, seed, args.jitter, workers=args.workers)
    config = {"functions": [f.name for f in fns], "N": n, "T": t, "kappa4": args.kappa4,
              "trials": args.trials, "jitter": args.jitter}
    body = {"meta": _meta("theory", config, seed), "results": [vals[f].as_dict() for f in fns]}
    _dump(args, body)
    return 0


def cmd_calibrate(args) -> int:
    fns = _functions(args)
    seed = args.seed or 0
    n, t = _need(args.n, "--n"), _need(args.t, "--t")
    results = []
    for f in fns:
        cal = calibrate_d1(f, n, t, args.jitter, args.trials, seed, workers=args.workers)
        results.append({"function": f.name, "N": n, "T": t, "D1": cal.variance, "mean": cal.mean, "trials": cal.trials})
    config = {"functions": [f.name for f in fns], "N": n, "T": t, "trials": args.trials, "jitter": args.jitter}
    _dump(args, {"meta": _meta("calibrate", config, seed), "results": results})
    return 0


def _need(value, flag):
    if value is None:
        raise ValidationError(f"{flag} is required")
    return value


def _dump(args, body):
    fh = _out(args)
    try:
        fh.write(json.dumps(body, sort_keys=True, indent=2) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_analyze(args) -> int:
    trace_path = Path(_need(args.trace, "--trace"))
    trace = read_trace(trace_path)
    seed = args.seed or 0
    fns = _functions(args)
    cfg = PipelineConfig(args.window, args.stride, args.jitter, fns, args.k_sigma, seed, args.workers)
    rmap_path = Path(args.region_map) if args.region_map else None
    region_map = load_region_map(rmap_path) if rmap_path else None
    if args.mask_region:
        trace = mask_rows(trace, region_map or default_region_map(), args.mask_region)
    config = {"trace_sha256": _digest(trace_path), **cfg.as_dict(), "trials": args.trials,
              "mask_region": args.mask_region, "regions": bool(args.regions),
              "region_map_sha256": _digest(rmap_path) if rmap_path else "default"}
    meta = _meta("analyze", config, seed)
    lines = [json.dumps({"meta": meta}, sort_keys=True)]
    if args.regions:
        rmap = region_map or default_region_map()
        for f in fns:
            for label, series in regional_les(trace, rmap, cfg, function=f).items():
                for t, v in series.values:
                    lines.append(json.dumps({"region": label, "function": f.name, "N": series.n_rows,
                                             "end_time": t, "mu0": v}, sort_keys=True))
    else:
        theory = theory_set(fns, trace.N, cfg.window_T, args.kappa4, args.trials, seed, cfg.jitter_amplitude,
                            workers=args.workers)
        for f, series in sliding_les(trace, cfg, theory).items():
            th = theory[f]
            for (t, tau), d in zip(series.values, decisions(series, th, cfg.k_sigma)):
                lines.append(json.dumps({"function": f.name, "end_time": t, "tau": tau,
                                         "mu0": tau / th.expectation, "z": d.z, "decision": d.decision},
                                        sort_keys=True))
    fh = _out(args)
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _mesh(text: str):
    if "x" in text:
        a, b = text.lower().split("x", 1)
        return int(a), int(b)
    return int(text)


def _times(text: str | None):
    if not text:
        return None
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_frames(args) -> int:
    series_path = Path(_need(args.regions, "--regions (regional series JSON-lines)"))
    series = read_series_jsonl(series_path)
    rmap_path = Path(args.region_map) if args.region_map else None
    rmap = load_region_map(rmap_path) if rmap_path else default_region_map()
    times = _times(args.times)
    if times is None:
        first = next(iter(series.values()))
        times = first.end_times[:: args.stride].tolist()
    frames = export_frames(series, rmap, _mesh(args.mesh), times)
    config = {"series_sha256": _digest(series_path), "mesh": args.mesh, "times": times,
              "region_map_sha256": _digest(rmap_path) if rmap_path else "default"}
    out = _need(args.out, "--out (directory)")
    write_frames(frames, out, _meta("frames", config, args.seed or 0))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rmtgrid", description="Linear eigenvalue statistics for grid situation awareness.")
    p.add_argument("--version", action="version", version=f"rmtgrid {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, with_functions=True):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--workers", type=int, default=1)
        if with_functions:
            sp.add_argument("--function", action="append", help="MSR, T2, T3, T4, DET, LRT or poly:a0,a1,...")

    s = sub.add_parser("simulate", help="power-flow simulation to a voltage trace CSV")
    s.add_argument("--case", help="case directory with buses.csv and branches.csv")
    s.add_argument("--scenario", help="scenario JSON")
    s.add_argument("--t", type=int, help="number of instants (default: scenario length)")
    common(s, with_functions=False)
    s.set_defaults(run=cmd_simulate)

    for name, fn, helptext in (("theory", cmd_theory, "theoretical E, D_T and calibrated D1"),
                               ("calibrate", cmd_calibrate, "Monte-Carlo pipeline variance D1")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--n", type=int)
        s.add_argument("--t", type=int)
        s.add_argument("--kappa4", type=float, default=0.0)
        s.add_argument("--trials", type=int, default=1000)
        s.add_argument("--jitter", type=float, default=0.002)
        common(s)
        s.set_defaults(run=fn)

    s = sub.add_parser("analyze", help="sliding-window indicators and anomaly decisions (JSON lines)")
    s.add_argument("--trace")
    s.add_argument("--window", type=int, default=240)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--jitter", type=float, default=0.002)
    s.add_argument("--k-sigma", type=float, default=3.0, dest="k_sigma")
    s.add_argument("--kappa4", type=float, default=0.0)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--regions", action="store_true", help="per-region mu0 series instead of whole-system tests")
    s.add_argument("--region-map", dest="region_map")
    s.add_argument("--mask-region", dest="mask_region")
    common(s)
    s.set_defaults(run=cmd_analyze)

    s = sub.add_parser("frames", help="interpolated mu0 map frames (one JSON file per time)")
    s.add_argument("--regions", help="regional series JSON lines from 'analyze --regions'")
    s.add_argument("--region-map", dest="region_map")
    s.add_argument("--mesh", default="50", help="points per axis, N or NXxNY")
    s.add_argument("--times", help="comma-separated end times (default: every --stride-th)")
    s.add_argument("--stride", type=int, default=1)
    common(s, with_functions=False)
    s.set_defaults(run=cmd_frames)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except OSError as exc:
        print(f"rmtgrid: I/O error: {exc}", file=sys.stderr)
        return 2
    except (RmtGridError, ValueError) as exc:
        print(f"rmtgrid: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
