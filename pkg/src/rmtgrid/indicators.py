"""Linear eigenvalue statistics and the indicators built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DegenerateSampleError, SingularSpectrumError, ValidationError
from .rmt import RingSpectrum, SpectrumReal

SINGULAR_EIGENVALUE = 1e-14

_POLYS = {
    "T2": (-1.0, 0.0, 2.0),
    "T3": (0.0, -3.0, 0.0, 4.0),
    "T4": (1.0, 0.0, -8.0, 0.0, 8.0),
}
KINDS = ("MSR", "T2", "T3", "T4", "DET", "LRT", "poly")


@dataclass(frozen=True)
class TestFunction:
    """A test function phi applied eigenvalue by eigenvalue.

    ``MSR`` acts on moduli of a ring spectrum.  The rest act on covariance
    eigenvalues: the Chebyshev-form polynomials ``T2``/``T3``/``T4``,
    ``DET`` (ln x), ``LRT`` (x - ln x - 1) and ``poly`` with ascending
    ``coefficients``.
    """

    __test__ = False  # keep pytest from collecting this class

    kind: str
    coefficients: tuple = ()

    def __post_init__(self):
        kind = self.kind.upper() if self.kind.lower() != "poly" else "poly"
        if kind == "LRF":
            kind = "LRT"
        if kind not in KINDS:
            raise ValidationError(f"unknown test function {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "poly":
            if not self.coefficients:
                raise ValidationError("poly test function needs coefficients")
            object.__setattr__(self, "coefficients", tuple(float(a) for a in self.coefficients))
        elif self.coefficients:
            raise ValidationError(f"{kind} takes no coefficients")

    @classmethod
    def parse(cls, text: str) -> "TestFunction":
        """``"T2"``, ``"LRT"``, ... or ``"poly:a0,a1,..."`` (ascending powers)."""
        if isinstance(text, cls):
            return text
        if text.lower().startswith("poly"):
            _, _, body = text.partition(":")
            try:
                coefs = tuple(float(a) for a in body.split(",") if a.strip())
            except ValueError:
                raise ValidationError(f"bad polynomial coefficients in {text!r}") from None
            return cls("poly", coefs)
        return cls(text)

    @property
    def name(self) -> str:
        if self.kind == "poly":
            return "poly:" + ",".join(repr(a) for a in self.coefficients)
        return self.kind

    @property
    def domain(self) -> str:
        return "ring" if self.kind == "MSR" else "covariance"

    @property
    def logarithmic(self) -> bool:
        return self.kind in ("DET", "LRT")

    @property
    def polynomial(self) -> Polynomial | None:
        if self.kind in _POLYS:
            return Polynomial(_POLYS[self.kind])
        if self.kind == "poly":
            return Polynomial(self.coefficients)
        return None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "MSR":
            return np.abs(x)
        if self.kind == "DET":
            return np.log(x)
        if self.kind == "LRT":
            return x - np.log(x) - 1.0
        return self.polynomial(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "MSR":
            return np.sign(x)
        if self.kind == "DET":
            return 1.0 / x
        if self.kind == "LRT":
            return 1.0 - 1.0 / x
        return self.polynomial.deriv()(x)

    def __str__(self):
        return self.name


def as_function(phi) -> TestFunction:
    return phi if isinstance(phi, TestFunction) else TestFunction.parse(phi)


def les(phi, spectrum: SpectrumReal) -> float:
    """tau = sum_i phi(lambda_i) over a covariance spectrum."""
    phi = as_function(phi)
    if phi.domain != "covariance":
        raise ValidationError(f"{phi} is a ring-domain statistic; use msr() on a RingSpectrum")
    lam = np.asarray(spectrum.eigenvalues, dtype=float)
    if phi.logarithmic:
        bad = np.flatnonzero(lam <= SINGULAR_EIGENVALUE)
        if bad.size:
            i = int(bad[0])
            raise SingularSpectrumError(f"eigenvalue {i} = {lam[i]:.3g} is not positive; {phi} undefined", index=i)
    return float(np.sum(phi(lam)))


def msr(spectrum: RingSpectrum) -> float:
    """Mean spectral radius: mean modulus of the complex eigenvalues."""
    lam = np.asarray(spectrum.eigenvalues)
    if lam.size == 0:
        raise ValidationError("empty spectrum")
    return float(np.mean(np.abs(lam)))


@dataclass(frozen=True)
class LesSeries:
    """tau_phi(t) for a run of windows ending at ``end_times``.

    ``quantity`` is ``"tau"`` for raw statistics or ``"mu0"`` when the
    values have been divided by their theoretical expectation.
    """

    end_times: np.ndarray
    taus: np.ndarray
    function: TestFunction
    window_T: int
    stride: int
    n_rows: int
    quantity: str = "tau"

    def __post_init__(self):
        et = np.asarray(self.end_times, dtype=int)
        tau = np.asarray(self.taus, dtype=float)
        if et.shape != tau.shape or et.ndim != 1:
            raise ValidationError("end_times and taus must be 1-D and of equal length")
        if et.size >= 2:
            steps = np.diff(et)
            if np.any(steps != self.stride):
                raise ValidationError("end_times must increase with the constant stride")
        if self.stride < 1:
            raise ValidationError("stride must be >= 1")
        object.__setattr__(self, "end_times", et)
        object.__setattr__(self, "taus", tau)

    @property
    def values(self) -> list:
        return list(zip(self.end_times.tolist(), self.taus.tolist()))

    def __len__(self):
        return len(self.taus)

    def between(self, t_lo: int, t_hi: int) -> np.ndarray:
        mask = (self.end_times >= t_lo) & (self.end_times <= t_hi)
        return self.taus[mask]

    def at(self, t: int) -> float:
        hit = np.flatnonzero(self.end_times == t)
        if not hit.size:
            raise KeyError(t)
        return float(self.taus[hit[0]])


@dataclass(frozen=True)
class IndicatorStats:
    mean: float
    std: float
    mu0: float
    c0: float
    cT0: float | None
    count: int


def _stats_from(values, theory) -> IndicatorStats:
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        return IndicatorStats(math.nan, math.nan, math.nan, math.nan, None, 0)
    mean = float(values.mean())
    std = float(values.std())
    cT0 = None
    if theory.variance_clt is not None and theory.variance_clt > 0:
        cT0 = std / math.sqrt(theory.variance_clt)
    c0 = std / mean / theory.c_v if mean != 0 else math.nan
    return IndicatorStats(mean, std, mean / theory.expectation, c0, cT0, n)


def _check_theory(series: LesSeries, theory) -> None:
    if theory.test_function != series.function:
        raise ValidationError(f"theory is for {theory.test_function}, series for {series.function}")
    if theory.N != series.n_rows or theory.T != series.window_T:
        raise ValidationError(
            f"theory (N={theory.N}, T={theory.T}) does not match series (N={series.n_rows}, T={series.window_T})"
        )


def indicator_stats(series: LesSeries, theory) -> IndicatorStats:
    """Sample mean/std (population convention) and the normalized ratios mu0, c0, cT0."""
    _check_theory(series, theory)
    if series.quantity != "tau":
        raise ValidationError("indicator_stats expects a raw tau series")
    if len(series) < 2:
        raise ValidationError("need at least 2 values")
    return _stats_from(series.taus, theory)


def jarque_bera(samples) -> tuple[float, float]:
    """Jarque-Bera statistic n/6 (S^2 + K^2/4) and its chi-square(2) tail p-value."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 20:
        raise ValidationError(f"Jarque-Bera needs at least 20 samples, got {n}")
    d = x - x.mean()
    m2 = np.mean(d**2)
    if not m2 > 1e-300 or np.ptp(x) == 0:
        raise DegenerateSampleError("sample has zero variance")
    skew = np.mean(d**3) / m2**1.5
    kurt = np.mean(d**4) / m2**2 - 3.0
    stat = n / 6.0 * (skew**2 + kurt**2 / 4.0)
    # chi-square with 2 dof has survival function exp(-x/2)
    return float(stat), float(math.exp(-stat / 2.0))


class AnomalyDecision(NamedTuple):
    decision: str
    z: float


def anomaly_test(tau: float, theory, k_sigma: float = 3.0) -> AnomalyDecision:
    """Two-sided z-test of tau against its calibrated null distribution."""
    if not theory.variance_pipeline or theory.variance_pipeline <= 0:
        raise ValidationError("theory has no positive pipeline variance")
    z = (tau - theory.expectation) / math.sqrt(theory.variance_pipeline)
    return AnomalyDecision("H1" if abs(z) > k_sigma else "H0", float(z))
