"""Random-matrix objects built from voltage data.

A :class:`VoltageTrace` holds the N x t matrix of bus voltage magnitudes.
Windows cut from it are standardized row by row and turned into either a
real covariance spectrum or the complex spectrum of the row-normalized
product of singular value equivalents (the "ring" matrix).

Time labels
-----------
Column ``j`` of a trace carries the time label ``t0 + j``.  Every
``end_time`` in this package is such a label; for a trace with ``t0 = 0``
labels and column indices coincide.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import seeding
from .errors import (
    CaseFormatError,
    DegenerateRowError,
    NumericError,
    RangeError,
    ValidationError,
)

DEGENERATE_STD = 1e-12


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class VoltageTrace:
    """Bus voltage magnitudes (p.u.), one row per bus, one column per instant."""

    values: np.ndarray
    bus_ids: tuple
    dt: float = 1.0
    t0: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValidationError("trace values must be a 2-D array")
        n, t = values.shape
        if n < 2 or t < 2:
            raise ValidationError(f"trace needs at least 2 buses and 2 instants, got {n}x{t}")
        if not np.all(np.isfinite(values)):
            raise NumericError("trace contains non-finite entries")
        bus_ids = tuple(self.bus_ids)
        if len(bus_ids) != n:
            raise ValidationError(f"{len(bus_ids)} bus ids for {n} rows")
        if len(set(bus_ids)) != n:
            raise ValidationError("duplicate bus ids in trace")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bus_ids", bus_ids)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def t_max(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + self.t_max)

    def column(self, t: int) -> int:
        """Column index of time label ``t``."""
        j = int(t) - self.t0
        if not 0 <= j < self.t_max:
            raise RangeError(f"time {t} outside trace [{self.t0}, {self.t0 + self.t_max - 1}]")
        return j

    def select_rows(self, bus_ids: Sequence) -> "VoltageTrace":
        index = {b: i for i, b in enumerate(self.bus_ids)}
        try:
            rows = [index[b] for b in bus_ids]
        except KeyError as exc:
            raise ValidationError(f"bus {exc.args[0]!r} not in trace") from None
        return VoltageTrace(self.values[rows], tuple(bus_ids), self.dt, self.t0)

    def with_values(self, values: np.ndarray) -> "VoltageTrace":
        return VoltageTrace(values, self.bus_ids, self.dt, self.t0)


class _Shaped:
    values: np.ndarray

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    @property
    def c(self) -> float:
        return self.N / self.T


def _check_matrix(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
        raise ValidationError("window values must be a non-empty 2-D array")
    if values.shape[0] > values.shape[1]:
        raise ValidationError(f"window ratio c = N/T must not exceed 1, got {values.shape}")
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class DataWindow(_Shaped):
    """Raw N x T slice of a trace; columns end at time label ``end_time``."""

    values: np.ndarray
    end_time: int
    bus_ids: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _check_matrix(self.values))

    @property
    def start_time(self) -> int:
        return self.end_time - self.T + 1


@dataclass(frozen=True)
class NormalizedWindow(_Shaped):
    """Row-standardized window: zero mean and unit population std per row."""

    values: np.ndarray
    row_means: np.ndarray
    row_stds: np.ndarray
    end_time: int
    bus_ids: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _check_matrix(self.values))

    def as_window(self) -> DataWindow:
        return DataWindow(self.values, self.end_time, self.bus_ids)


@dataclass(frozen=True)
class SpectrumReal:
    """Ascending real eigenvalues of a covariance matrix."""

    eigenvalues: np.ndarray
    source: str = "covariance_M"
    T: int | None = None

    @property
    def N(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class RingSpectrum:
    """Complex eigenvalues of the row-normalized ring matrix."""

    eigenvalues: np.ndarray
    L: int = 1

    @property
    def N(self) -> int:
        return len(self.eigenvalues)


def assemble_window(trace: VoltageTrace, end_time: int, T: int) -> DataWindow:
    """Slice the ``T`` columns ending at time label ``end_time``."""
    if T < 2:
        raise RangeError(f"window length T must be >= 2, got {T}")
    last = trace.t0 + trace.t_max - 1
    if end_time > last:
        raise RangeError(f"end_time {end_time} beyond last instant {last}")
    if end_time - T + 1 < trace.t0:
        raise RangeError(
            f"end_time {end_time} needs end_time >= t0 + T - 1 = {trace.t0 + T - 1} (insufficient history)"
        )
    j = end_time - trace.t0
    return DataWindow(trace.values[:, j - T + 1 : j + 1], end_time, trace.bus_ids)


def _column_noise(n: int, times, amplitude: float, seed: int) -> np.ndarray:
    # noise of column t depends on (seed, t) only, so overlapping windows share it
    out = np.empty((n, len(times)))
    for k, t in enumerate(times):
        out[:, k] = seeding.rng(seed, seeding.JITTER, int(t)).standard_normal(n)
    return amplitude * out


def jitter(window: DataWindow, amplitude: float, seed: int) -> DataWindow:
    """Add independent N(0, amplitude^2) noise to every entry.

    The noise of each column is keyed by ``(seed, time label)`` so two windows
    overlapping in time receive identical noise on their shared columns.
    """
    if amplitude < 0:
        raise ValidationError(f"jitter amplitude must be >= 0, got {amplitude}")
    if amplitude == 0:
        return window
    times = range(window.start_time, window.end_time + 1)
    noisy = window.values + _column_noise(window.N, times, amplitude, seed)
    return DataWindow(noisy, window.end_time, window.bus_ids)


def jitter_trace(trace: VoltageTrace, amplitude: float, seed: int) -> VoltageTrace:
    """Whole-trace version of :func:`jitter` (same noise, column for column)."""
    if amplitude < 0:
        raise ValidationError(f"jitter amplitude must be >= 0, got {amplitude}")
    if amplitude == 0:
        return trace
    return trace.with_values(trace.values + _column_noise(trace.N, trace.times, amplitude, seed))


def normalize_rows(window: DataWindow) -> NormalizedWindow:
    x = window.values
    mu = x.mean(axis=1)
    sd = x.std(axis=1)
    bad = np.flatnonzero(~(sd > DEGENERATE_STD))
    if bad.size:
        i = int(bad[0])
        bus = window.bus_ids[i] if window.bus_ids is not None else i
        raise DegenerateRowError(
            f"row {i} (bus {bus}) has zero variance; apply jitter first",
            bus_id=bus,
            end_time=window.end_time,
        )
    z = (x - mu[:, None]) / sd[:, None]
    return NormalizedWindow(z, mu, sd, window.end_time, window.bus_ids)


def covariance_m(window: NormalizedWindow, scale: str = "M") -> SpectrumReal:
    """Eigenvalues of M = X X^T / N (``scale="M"``) or S = X X^T / T = c M."""
    x = window.values
    if not np.all(np.isfinite(x)):
        raise NumericError("window contains non-finite entries")
    if scale not in ("M", "S"):
        raise ValidationError(f"scale must be 'M' or 'S', got {scale!r}")
    w = np.linalg.eigvalsh(x @ x.T / window.N)
    w = np.maximum(w, 0.0)
    if scale == "S":
        w = w * window.c
    return SpectrumReal(w, f"covariance_{scale}", window.T)


def haar_unitary(N: int, seed) -> np.ndarray:
    """Haar-distributed N x N unitary (QR of complex Ginibre, phase-corrected)."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    g = _as_rng(seed)
    z = (g.standard_normal((N, N)) + 1j * g.standard_normal((N, N))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    # plain QR is not Haar; rotate columns by the phases of diag(R)
    return q * (d / np.abs(d))


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    w = np.where(w < 0.0, 0.0, w)
    return (v * np.sqrt(w)) @ v.T


def singular_value_equivalent(window: NormalizedWindow, seed) -> np.ndarray:
    """Square matrix sqrt(X X^T) U sharing the singular values of ``window``."""
    x = window.values
    if not np.all(np.isfinite(x)):
        raise NumericError("window contains non-finite entries")
    return _psd_sqrt(x @ x.T) @ haar_unitary(window.N, seed)


def ring_matrix(windows, L: int = 1, seed=0) -> RingSpectrum:
    """Complex spectrum of the row-normalized product of L singular value equivalents.

    Each row z_i of the product is divided by sqrt(N) * sigma_i with sigma_i
    the root-mean-square of the row entries (no centering).
    """
    if isinstance(windows, NormalizedWindow):
        windows = [windows]
    windows = list(windows)
    if L < 1:
        raise ValidationError(f"L must be >= 1, got {L}")
    if len(windows) != L:
        raise ValidationError(f"ring matrix with L={L} needs {L} windows, got {len(windows)}")
    n = windows[0].N
    if any(w.N != n for w in windows):
        raise ValidationError("all windows in a ring product must have the same N")
    g = _as_rng(seed)
    z = singular_value_equivalent(windows[0], g)
    for w in windows[1:]:
        z = z @ singular_value_equivalent(w, g)
    rms = np.sqrt(np.mean(np.abs(z) ** 2, axis=1))
    bad = np.flatnonzero(~(rms > DEGENERATE_STD))
    if bad.size:
        raise DegenerateRowError(f"row {int(bad[0])} of the ring product vanishes", bus_id=int(bad[0]))
    z = z / (np.sqrt(n) * rms[:, None])
    return RingSpectrum(np.linalg.eigvals(z), L)


SYNTH_DISTRIBUTIONS = ("gaussian", "uniform_standardized", "bernoulli_standardized")

#: fourth cumulant E[x^4] - 3 of each synthetic entry distribution
SYNTH_KAPPA4 = {"gaussian": 0.0, "uniform_standardized": -1.2, "bernoulli_standardized": -2.0}


def synth_matrix(dist: str, N: int, T: int, seed) -> DataWindow:
    """i.i.d. zero-mean unit-variance N x T matrix."""
    if N < 1 or T < 1:
        raise ValidationError("N and T must be >= 1")
    g = _as_rng(seed)
    if dist == "gaussian":
        x = g.standard_normal((N, T))
    elif dist == "uniform_standardized":
        x = g.uniform(-np.sqrt(3.0), np.sqrt(3.0), (N, T))
    elif dist == "bernoulli_standardized":
        x = g.choice(np.array([-1.0, 1.0]), size=(N, T))
    else:
        raise ValidationError(f"unknown distribution {dist!r}; choose from {SYNTH_DISTRIBUTIONS}")
    return DataWindow(x, T - 1)


# --- trace CSV ---------------------------------------------------------------


def write_trace(trace: VoltageTrace, path, meta: dict | None = None) -> None:
    """Write ``bus_id,t<label>...`` CSV, preceded by ``# key: value`` metadata lines."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {value}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bus_id"] + [f"t{t}" for t in trace.times])
        for bus, row in zip(trace.bus_ids, trace.values):
            w.writerow([bus] + [repr(float(v)) for v in row])


def _bus_id(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def read_trace(path, dt: float = 1.0) -> VoltageTrace:
    path = Path(path)
    header = None
    ids, rows = [], []
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
                if header[0] != "bus_id" or len(header) < 3:
                    raise CaseFormatError("expected header 'bus_id,t<k>,...'", lineno)
                try:
                    labels = [int(h[1:]) for h in header[1:] if h.startswith("t")]
                except ValueError:
                    raise CaseFormatError("time columns must be labelled t<integer>", lineno) from None
                if len(labels) != len(header) - 1 or np.any(np.diff(labels) != 1):
                    raise CaseFormatError("time columns must be consecutive t<k> labels", lineno)
                continue
            if len(cells) != len(header):
                raise CaseFormatError(f"expected {len(header)} fields, got {len(cells)}", lineno)
            try:
                rows.append([float(v) for v in cells[1:]])
            except ValueError:
                raise CaseFormatError("non-numeric voltage value", lineno) from None
            ids.append(_bus_id(cells[0]))
    if header is None or not rows:
        raise CaseFormatError(f"{path}: empty trace file")
    return VoltageTrace(np.array(rows), tuple(ids), dt=dt, t0=labels[0])
