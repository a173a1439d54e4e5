"""End-to-end situation awareness: sliding LES series, stage statistics,
regional indicators, bad-data handling and interpolated map frames."""
from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import seeding
from .errors import CaseFormatError, DegenerateRowError, ValidationError
from .indicators import (
    AnomalyDecision,
    IndicatorStats,
    LesSeries,
    _check_theory,
    _stats_from,
    anomaly_test,
    as_function,
    les,
    msr,
)
from .laws import les_expectation
from .rmt import VoltageTrace, assemble_window, covariance_m, jitter_trace, normalize_rows, ring_matrix

MIN_REGION = 10
SMALL_REGION = 30


@dataclass(frozen=True)
class PipelineConfig:
    window_T: int = 240
    stride: int = 1
    jitter_amplitude: float = 0.002
    functions: tuple = ("MSR", "T2", "LRT")
    k_sigma: float = 3.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.window_T < 2:
            raise ValidationError(f"window_T must be >= 2, got {self.window_T}")
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")
        if self.jitter_amplitude < 0:
            raise ValidationError("jitter_amplitude must be >= 0")
        if self.k_sigma <= 0:
            raise ValidationError("k_sigma must be positive")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")
        fns = tuple(as_function(f) for f in self.functions)
        if not fns:
            raise ValidationError("at least one test function is required")
        object.__setattr__(self, "functions", fns)

    def as_dict(self) -> dict:
        return {
            "window_T": self.window_T,
            "stride": self.stride,
            "jitter_amplitude": self.jitter_amplitude,
            "functions": [f.name for f in self.functions],
            "k_sigma": self.k_sigma,
            "seed": self.seed,
        }


def end_times(trace: VoltageTrace, config: PipelineConfig) -> np.ndarray:
    first = trace.t0 + config.window_T - 1
    last = trace.t0 + trace.t_max - 1
    if first > last:
        raise ValidationError(f"trace has {trace.t_max} instants, fewer than window_T = {config.window_T}")
    return np.arange(first, last + 1, config.stride)


def _window_taus(noisy: VoltageTrace, end_time: int, config: PipelineConfig) -> list:
    win = assemble_window(noisy, int(end_time), config.window_T)
    try:
        z = normalize_rows(win)
    except DegenerateRowError as exc:
        raise DegenerateRowError(f"window ending at t = {end_time}: {exc}", exc.bus_id, int(end_time)) from None
    spec = None
    out = []
    for phi in config.functions:
        if phi.domain == "ring":
            out.append(msr(ring_matrix(z, 1, seeding.rng(config.seed, seeding.HAAR, int(end_time)))))
        else:
            if spec is None:
                spec = covariance_m(z)
            out.append(les(phi, spec))
    return out


def sliding_les(trace: VoltageTrace, config: PipelineConfig, theory_set: dict | None = None) -> dict:
    """One :class:`LesSeries` per configured function.

    The whole trace is jittered once (noise keyed by time label), so windows
    sharing columns share noise; the Haar rotation of the window ending at
    ``t`` comes from the stream ``(seed, "haar", t)``.
    """
    if trace.N > config.window_T:
        raise ValidationError(f"N = {trace.N} exceeds window_T = {config.window_T}; need c <= 1")
    times = end_times(trace, config)
    noisy = jitter_trace(trace, config.jitter_amplitude, config.seed)

    def run(t):
        return _window_taus(noisy, t, config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(run, times))
    else:
        rows = [run(t) for t in times]
    data = np.asarray(rows, dtype=float).reshape(len(times), len(config.functions))
    out = {}
    for k, phi in enumerate(config.functions):
        series = LesSeries(times, data[:, k], phi, config.window_T, config.stride, trace.N)
        if theory_set is not None and phi in theory_set:
            _check_theory(series, theory_set[phi])
        out[phi] = series
    return out


def decisions(series: LesSeries, theory, k_sigma: float = 3.0) -> list:
    """Per-window :class:`AnomalyDecision` of a raw tau series."""
    _check_theory(series, theory)
    return [anomaly_test(tau, theory, k_sigma) for tau in series.taus]


def h1_flags(series: LesSeries, theory, k_sigma: float = 3.0) -> np.ndarray:
    return np.array([d.decision == "H1" for d in decisions(series, theory, k_sigma)], dtype=bool)


def episodes(end_times, flags, min_length: int = 1) -> list:
    """Runs of consecutive flagged windows as ``(first_end_time, last_end_time, length)``."""
    out = []
    start = None
    et = np.asarray(end_times)
    for k, f in enumerate(list(flags) + [False]):
        if f and start is None:
            start = k
        elif not f and start is not None:
            if k - start >= min_length:
                out.append((int(et[start]), int(et[k - 1]), k - start))
            start = None
    return out


def stage_stats(series: LesSeries, stages, theory) -> dict:
    """IndicatorStats of every ``(label, t_lo, t_hi)`` bracket of window end times.

    All windows whose end time lies in the bracket count, including those
    straddling a stage boundary.  Empty stages come back with ``count == 0``.
    """
    _check_theory(series, theory)
    out = {}
    for label, lo, hi in stages:
        if hi < lo:
            raise ValidationError(f"stage {label}: t_hi < t_lo")
        out[label] = _stats_from(series.between(lo, hi), theory)
    return out


# --- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class RegionMap:
    """Bus-to-region assignment plus plane coordinates for map frames."""

    assignment: dict
    layout: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.assignment:
            raise ValidationError("empty region map")
        if self.layout and set(self.layout) != set(self.assignment):
            raise ValidationError("layout and assignment must cover the same buses")

    @property
    def labels(self) -> list:
        return sorted(set(self.assignment.values()))

    def buses(self, label) -> list:
        return [b for b, r in self.assignment.items() if r == label]

    def check_trace(self, trace: VoltageTrace) -> None:
        missing = [b for b in trace.bus_ids if b not in self.assignment]
        if missing:
            raise ValidationError(f"region map lacks buses {missing[:5]}")

    def buses_in(self, label, trace: VoltageTrace) -> list:
        """Region members in trace row order."""
        members = set(self.buses(label))
        return [b for b in trace.bus_ids if b in members]


def load_region_map(path) -> RegionMap:
    path = Path(path)
    assignment, layout = {}, {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CaseFormatError(f"{path.name} is empty", 1)
        header = [h.strip() for h in header]
        if header[:2] != ["bus_id", "region"]:
            raise CaseFormatError("expected header bus_id,region[,x,y]", 1)
        has_xy = header[2:4] == ["x", "y"]
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            try:
                bus = int(cells[0])
                if bus in assignment:
                    raise CaseFormatError(f"bus {bus} listed twice", lineno)
                assignment[bus] = cells[1].strip()
                if has_xy:
                    layout[bus] = (float(cells[2]), float(cells[3]))
            except (ValueError, IndexError):
                raise CaseFormatError(f"bad region row {cells}", lineno) from None
    return RegionMap(assignment, layout)


def default_region_map() -> RegionMap:
    """Six-area map A1..A6 of the shipped 118-bus case."""
    return load_region_map(Path(str(resources.files("rmtgrid") / "data" / "regions.csv")))


def mask_rows(trace: VoltageTrace, region_map: RegionMap, region_label) -> VoltageTrace:
    """The trace without the rows of one region (e.g. lost measurements)."""
    drop = set(region_map.buses(region_label))
    if not drop:
        raise ValidationError(f"region {region_label!r} has no buses")
    keep = [b for b in trace.bus_ids if b not in drop]
    if len(keep) == trace.N:
        raise ValidationError(f"region {region_label!r} has no buses in this trace")
    if len(keep) < 2:
        raise ValidationError("masking would leave fewer than 2 buses")
    return trace.select_rows(keep)


def corrupt_entries(trace: VoltageTrace, fraction: float, t_lo: int, t_hi: int, seed: int = 0) -> VoltageTrace:
    """Zero a random ``fraction`` of the entries with time label in [t_lo, t_hi]."""
    if not 0 <= fraction <= 1:
        raise ValidationError("fraction must lie in [0, 1]")
    j0, j1 = trace.column(t_lo), trace.column(t_hi)
    block = trace.values[:, j0 : j1 + 1]
    g = seeding.rng(seed, seeding.CORRUPT, t_lo, t_hi)
    count = int(round(fraction * block.size))
    pick = g.choice(block.size, size=count, replace=False)
    values = trace.values.copy()
    sub = values[:, j0 : j1 + 1].reshape(-1)
    sub[pick] = 0.0
    values[:, j0 : j1 + 1] = sub.reshape(block.shape)
    return trace.with_values(values)


def regional_les(trace: VoltageTrace, region_map: RegionMap, config: PipelineConfig,
                 theory_per_region: dict | None = None, function=None, min_size: int = MIN_REGION) -> dict:
    """mu0(t) = tau(t) / E[tau](N_region, c_region) for every region.

    ``function`` defaults to the first configured one.  ``theory_per_region``
    may map region labels to objects with an ``expectation``; otherwise the
    closed-form expectation for the region's own N and the shared T is used.
    """
    region_map.check_trace(trace)
    phi = as_function(function) if function is not None else config.functions[0]
    cfg = PipelineConfig(config.window_T, config.stride, config.jitter_amplitude, (phi,), config.k_sigma,
                         config.seed, config.workers)
    noisy = jitter_trace(trace, cfg.jitter_amplitude, cfg.seed)
    quiet = PipelineConfig(cfg.window_T, cfg.stride, 0.0, cfg.functions, cfg.k_sigma, cfg.seed, cfg.workers)
    out = {}
    for label in region_map.labels:
        buses = region_map.buses_in(label, trace)
        if len(buses) < 2:
            raise ValidationError(f"region {label!r} has {len(buses)} buses; at least 2 are required")
        if len(buses) < min_size:
            raise ValidationError(f"region {label!r} has {len(buses)} buses, below the minimum of {min_size}")
        if len(buses) < SMALL_REGION:
            warnings.warn(f"region {label!r} has only {len(buses)} buses; limiting laws are coarse", stacklevel=2)
        # jitter the full trace, then select, so regions see the whole-system noise
        sub = noisy.select_rows(buses)
        raw = sliding_les(sub, quiet)[phi]
        if theory_per_region is not None and label in theory_per_region:
            expect = theory_per_region[label].expectation
        else:
            expect = les_expectation(phi, sub.N, sub.N / cfg.window_T)
        out[label] = LesSeries(raw.end_times, raw.taus / expect, phi, raw.window_T, raw.stride, sub.N, "mu0")
    return out


# --- frames ------------------------------------------------------------------


def idw(points: np.ndarray, values: np.ndarray, targets: np.ndarray, power: float = 2.0) -> np.ndarray:
    """Inverse-distance weighting; a target on a data point takes its value."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    targets = np.asarray(targets, dtype=float)
    d = np.sqrt(((targets[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    out = np.empty(len(targets))
    hit = d <= 1e-12
    exact = hit.any(axis=1)
    if exact.any():
        out[exact] = values[np.argmax(hit[exact], axis=1)]
    rest = ~exact
    if rest.any():
        w = d[rest] ** (-power)
        out[rest] = (w @ values) / w.sum(axis=1)
    return out


@dataclass(frozen=True)
class FrameSet:
    times: tuple
    x: np.ndarray  # mesh x coordinates, length nx
    y: np.ndarray  # mesh y coordinates, length ny
    values: np.ndarray  # (len(times), ny, nx)

    def frame_dict(self, k: int) -> dict:
        nx, ny = len(self.x), len(self.y)
        return {
            "t": int(self.times[k]),
            "nx": nx,
            "ny": ny,
            "x0": float(self.x[0]),
            "y0": float(self.y[0]),
            "dx": float(self.x[1] - self.x[0]) if nx > 1 else 0.0,
            "dy": float(self.y[1] - self.y[0]) if ny > 1 else 0.0,
            "values": [float(v) for v in self.values[k].reshape(-1)],
        }


def _mesh_shape(mesh_resolution) -> tuple:
    if isinstance(mesh_resolution, int):
        return mesh_resolution, mesh_resolution
    nx, ny = mesh_resolution
    return int(nx), int(ny)


def export_frames(regional_mu0: dict, region_map: RegionMap, mesh_resolution=50, times=None) -> FrameSet:
    """Interpolate region mu0 (assigned to each member bus) onto a rectangular mesh."""
    if not region_map.layout:
        raise ValidationError("region map has no layout coordinates")
    nx, ny = _mesh_shape(mesh_resolution)
    if nx < 2 or ny < 2:
        raise ValidationError("mesh needs at least 2 points per axis")
    missing_regions = [r for r in region_map.labels if r not in regional_mu0]
    if missing_regions:
        raise ValidationError(f"no series for regions {missing_regions}")
    if times is None:
        times = regional_mu0[region_map.labels[0]].end_times.tolist()
    times = [int(t) for t in times]
    missing = sorted({t for t in times for s in regional_mu0.values() if t not in set(s.end_times.tolist())})
    if missing:
        raise ValidationError(f"times not covered by every regional series: {missing[:10]}")
    buses = sorted(region_map.layout)
    pts = np.array([region_map.layout[b] for b in buses])
    x = np.linspace(pts[:, 0].min(), pts[:, 0].max(), nx)
    y = np.linspace(pts[:, 1].min(), pts[:, 1].max(), ny)
    gx, gy = np.meshgrid(x, y)
    targets = np.column_stack([gx.ravel(), gy.ravel()])
    frames = np.empty((len(times), ny, nx))
    for k, t in enumerate(times):
        vals = np.array([regional_mu0[region_map.assignment[b]].at(t) for b in buses])
        frames[k] = idw(pts, vals, targets).reshape(ny, nx)
    return FrameSet(tuple(times), x, y, frames)


def write_frames(frames: FrameSet, out_dir, meta: dict | None = None) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, t in enumerate(frames.times):
        body = frames.frame_dict(k)
        if meta:
            body = {"meta": meta, **body}
        p = out_dir / f"frame_{t:06d}.json"
        p.write_text(json.dumps(body, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(p)
    return paths


def read_series_jsonl(path) -> dict:
    """Regional series written by ``analyze --regions``: one JSON object per line."""
    grouped: dict = {}
    meta = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CaseFormatError(f"bad JSON: {exc.msg}", lineno) from None
        if "meta" in rec:
            meta = rec["meta"]
            continue
        try:
            key = rec["region"]
            grouped.setdefault(key, {"t": [], "v": [], "function": rec["function"], "n": rec["N"]})
            grouped[key]["t"].append(int(rec["end_time"]))
            grouped[key]["v"].append(float(rec["mu0"]))
        except KeyError as exc:
            raise CaseFormatError(f"missing field {exc.args[0]!r}", lineno) from None
    window = int(meta.get("config", {}).get("window_T", 0)) or None
    out = {}
    for key, g in grouped.items():
        t = np.asarray(g["t"])
        stride = int(t[1] - t[0]) if t.size > 1 else 1
        out[key] = LesSeries(t, g["v"], as_function(g["function"]), window or 0, stride, g["n"], "mu0")
    return out


__all__ = [
    "PipelineConfig", "sliding_les", "decisions", "h1_flags", "episodes", "stage_stats",
    "RegionMap", "load_region_map", "default_region_map", "mask_rows", "corrupt_entries",
    "regional_les", "idw", "FrameSet", "export_frames", "write_frames", "read_series_jsonl",
    "AnomalyDecision", "IndicatorStats", "end_times",
]
