"""Limiting spectral laws and the theoretical values of linear eigenvalue statistics.

Everything here assumes an identity population covariance: the null model
of standardized i.i.d. entries.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy import integrate

from . import seeding
from .errors import UnsupportedParameterError, ValidationError
from .indicators import TestFunction, as_function
from .rmt import DataWindow, covariance_m, normalize_rows, ring_matrix, synth_matrix

VARIANTS = ("mp_S", "mp_M", "ring")
DIAGONAL_DELTA = 1e-6
QUAD_EPSREL = 1e-11


def _check_c(c: float) -> float:
    c = float(c)
    if not 0.0 < c <= 1.0:
        raise ValidationError(f"ratio c must lie in (0, 1], got {c}")
    return c


@dataclass(frozen=True)
class DensityParams:
    c: float
    sigma2: float = 1.0
    variant: str = "mp_M"
    L: int = 1

    def __post_init__(self):
        _check_c(self.c)
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}")
        if self.sigma2 <= 0:
            raise ValidationError("sigma2 must be positive")
        if self.variant == "ring" and (int(self.L) != self.L or self.L < 1):
            raise ValidationError(f"ring law needs an integer L >= 1, got {self.L}")

    @property
    def support(self) -> tuple[float, float]:
        c, s2 = self.c, self.sigma2
        if self.variant == "mp_S":
            return s2 * (1 - math.sqrt(c)) ** 2, s2 * (1 + math.sqrt(c)) ** 2
        if self.variant == "mp_M":
            return s2 * (1 - 1 / math.sqrt(c)) ** 2, s2 * (1 + 1 / math.sqrt(c)) ** 2
        return (1 - c) ** (self.L / 2), 1.0


def mp_density(lam, params: DensityParams):
    """Marchenko-Pastur density of S = XX^T/T (``mp_S``) or M = XX^T/N (``mp_M``)."""
    if params.variant not in ("mp_S", "mp_M"):
        raise ValidationError("mp_density needs variant mp_S or mp_M")
    lo, hi = params.support
    lam = np.asarray(lam, dtype=float)
    scale = params.c if params.variant == "mp_S" else 1.0
    inside = (lam > lo) & (lam < hi)
    safe = np.where(inside, lam, 1.0)
    val = np.sqrt(np.clip((hi - safe) * (safe - lo), 0.0, None)) / (2 * math.pi * safe * scale * params.sigma2)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def ring_density(r, params: DensityParams):
    """Area density of the ring law at modulus ``r`` (integrate against r dr dtheta)."""
    if params.variant != "ring":
        raise ValidationError("ring_density needs variant 'ring'")
    lo, hi = params.support
    r = np.asarray(r, dtype=float)
    inside = (r >= lo) & (r <= hi)
    safe = np.where(inside, r, 1.0)
    val = safe ** (2.0 / params.L - 2.0) / (math.pi * params.c * params.L)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def msr_expectation(c: float, L: int = 1) -> float:
    """Limit of the mean spectral radius under the ring law.

    E|lambda| = 2 / (c (L + 2)) * (1 - (1 - c)^((L + 2) / 2)); for L = 1 this is
    2/(3c) (1 - (1 - c)^{3/2}).
    """
    c = _check_c(c)
    return 2.0 / (c * (L + 2)) * (1.0 - (1.0 - c) ** ((L + 2) / 2.0))


def _mp_m_integral(f, c: float, sigma2: float = 1.0) -> float:
    """int f(lambda) rho_mpM(lambda) d lambda with lambda = b- + (b+ - b-) sin^2 u."""
    lo, hi = DensityParams(c, sigma2, "mp_M").support
    w = hi - lo

    def integrand(u):
        s, co = math.sin(u), math.cos(u)
        lam = lo + w * s * s
        # rho d lambda = w^2 * 2 sin^2 cos^2 / (2 pi lam sigma2) du
        return float(f(lam)) * w * w * s * s * co * co / (math.pi * lam * sigma2)

    val, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
    return val


def les_expectation(phi, N: int, c: float) -> float:
    """E[tau] = N * int phi(lambda) rho_mpM(lambda) d lambda (MSR: the ring-law mean)."""
    phi = as_function(phi)
    c = _check_c(c)
    if phi.kind == "MSR":
        return msr_expectation(c)
    if phi.logarithmic and c >= 1.0:
        raise UnsupportedParameterError(f"{phi} is unbounded at lambda = 0; needs c < 1")
    return N * _mp_m_integral(phi, c)


def _zeta(theta, c):
    return 1.0 + 1.0 / c + 2.0 / math.sqrt(c) * np.sin(theta)


def les_variance_clt(phi, c: float, kappa4: float = 0.0) -> float:
    """Limiting variance of the centred LES of M = XX^T/N.

    2/(c pi^2) int int psi^2 (1 - sin t1 sin t2) dt1 dt2
    + kappa4/pi^2 (int phi(zeta(t)) sin t dt)^2, with psi the divided
    difference of phi along zeta(t) = 1 + 1/c + 2/sqrt(c) sin t.
    """
    phi = as_function(phi)
    c = _check_c(c)
    if phi.domain != "covariance":
        raise UnsupportedParameterError(f"no CLT variance for {phi}")
    if phi.logarithmic and c >= 1.0:
        raise UnsupportedParameterError(f"{phi} is not smooth on the support when c = 1")

    def psi(t1, t2):
        if abs(t1 - t2) < DIAGONAL_DELTA:
            return float(phi.derivative(_zeta(0.5 * (t1 + t2), c)))
        z1, z2 = _zeta(t1, c), _zeta(t2, c)
        return float((phi(z1) - phi(z2)) / (z1 - z2))

    def integrand(t2, t1):
        return psi(t1, t2) ** 2 * (1.0 - math.sin(t1) * math.sin(t2))

    h = math.pi / 2
    double, _ = integrate.dblquad(integrand, -h, h, -h, h, epsabs=0.0, epsrel=1e-9)
    total = 2.0 / (c * math.pi**2) * double
    if kappa4:
        single, _ = integrate.quad(lambda t: float(phi(_zeta(t, c))) * math.sin(t), -h, h, epsabs=1e-13)
        total += kappa4 / math.pi**2 * single**2
    return total


# --- Monte-Carlo calibration -------------------------------------------------


@dataclass(frozen=True)
class Calibration:
    variance: float
    mean: float
    trials: int


def _trial(functions, N, T, jitter, seed, index, dist):
    from .indicators import les, msr

    g = seeding.rng(seed, seeding.CALIBRATE, index)
    x = synth_matrix(dist, N, T, g).values
    if jitter:
        x = x + jitter * g.standard_normal(x.shape)
    window = normalize_rows(DataWindow(x, T - 1))
    spec = None
    out = []
    for phi in functions:
        if phi.domain == "ring":
            out.append(msr(ring_matrix(window, 1, g)))
        else:
            if spec is None:
                spec = covariance_m(window)
            out.append(les(phi, spec))
    return out


@lru_cache(maxsize=256)
def _calibrate_cached(names, N, T, jitter, trials, seed, dist, workers):
    functions = [TestFunction.parse(n) for n in names]

    def run(i):
        return _trial(functions, N, T, jitter, seed, i, dist)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, range(trials)))
    else:
        rows = [run(i) for i in range(trials)]
    data = np.asarray(rows)
    return tuple(Calibration(float(data[:, k].var(ddof=1)), float(data[:, k].mean()), trials) for k in range(len(names)))


def calibrate_many(
    functions: Iterable,
    N: int,
    T: int,
    jitter: float = 0.002,
    trials: int = 1000,
    seed: int = 0,
    dist: str = "gaussian",
    workers: int = 1,
) -> dict:
    """Calibrate several test functions on one shared set of simulated windows."""
    functions = [as_function(f) for f in functions]
    if trials < 2:
        raise ValidationError("need at least 2 trials")
    names = tuple(f.name for f in functions)
    cals = _calibrate_cached(names, int(N), int(T), float(jitter), int(trials), int(seed), dist, int(workers))
    return dict(zip(functions, cals))


def calibrate_d1(phi, N: int, T: int, preprocessing=None, trials: int = 1000, seed: int = 0,
                 dist: str = "gaussian", workers: int = 1) -> Calibration:
    """Pipeline variance D1 of tau_phi on ideal N x T standard windows.

    ``preprocessing`` is a :class:`~rmtgrid.pipeline.PipelineConfig` (or
    anything with ``jitter_amplitude``) or a bare jitter amplitude; default
    0.002.  Trial ``i`` draws from the stream ``(seed, "calibrate", i)``.
    """
    if trials < 100:
        raise ValidationError(f"calibration needs at least 100 trials, got {trials}")
    jitter = getattr(preprocessing, "jitter_amplitude", preprocessing)
    jitter = 0.002 if jitter is None else float(jitter)
    phi = as_function(phi)
    return calibrate_many([phi], N, T, jitter, trials, seed, dist, workers)[phi]


@dataclass(frozen=True)
class TheoryValues:
    test_function: TestFunction
    N: int
    T: int
    c: float
    expectation: float
    variance_clt: float | None
    variance_pipeline: float
    kappa4: float = 0.0
    calibration_mean: float | None = None

    @property
    def c_v(self) -> float:
        return math.sqrt(self.variance_pipeline) / self.expectation

    def as_dict(self) -> dict:
        return {
            "function": self.test_function.name,
            "N": self.N,
            "T": self.T,
            "c": self.c,
            "kappa4": self.kappa4,
            "expectation": self.expectation,
            "variance_clt": self.variance_clt,
            "variance_pipeline": self.variance_pipeline,
            "c_v": self.c_v,
        }


def theory_values(phi, N: int, T: int, kappa4: float = 0.0, trials: int = 1000, seed: int = 0,
                  jitter: float = 0.002, dist: str = "gaussian", workers: int = 1) -> TheoryValues:
    """E[tau], D_T (None for MSR) and the calibrated D1 for one test function."""
    return theory_set([phi], N, T, kappa4, trials, seed, jitter, dist, workers)[as_function(phi)]


def theory_set(functions, N: int, T: int, kappa4: float = 0.0, trials: int = 1000, seed: int = 0,
               jitter: float = 0.002, dist: str = "gaussian", workers: int = 1) -> dict:
    functions = [as_function(f) for f in functions]
    c = N / T
    cals = calibrate_many(functions, N, T, jitter, trials, seed, dist, workers)
    out = {}
    for phi in functions:
        d_t = None if phi.domain == "ring" else _variance_clt_cached(phi, c, float(kappa4))
        out[phi] = TheoryValues(
            phi, int(N), int(T), c, _expectation_cached(phi, int(N), c), d_t,
            cals[phi].variance, float(kappa4), cals[phi].mean,
        )
    return out


@lru_cache(maxsize=512)
def _expectation_cached(phi, N, c):
    return les_expectation(phi, N, c)


@lru_cache(maxsize=512)
def _variance_clt_cached(phi, c, kappa4):
    return les_variance_clt(phi, c, kappa4)
