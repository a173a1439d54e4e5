"""Newton-Raphson AC power flow in polar coordinates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .case import GridCase

TOLERANCE = 1e-6
MAX_ITERATIONS = 50
DIVERGED_V = 10.0


@dataclass(frozen=True)
class Injections:
    """Net injections (generation minus demand) per bus, in case order."""

    p_mw: np.ndarray
    q_mvar: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p_mw, dtype=float)
        q = np.asarray(self.q_mvar, dtype=float)
        if p.shape != q.shape or p.ndim != 1:
            raise ValidationError("p and q injections must be 1-D arrays of equal length")
        object.__setattr__(self, "p_mw", p)
        object.__setattr__(self, "q_mvar", q)

    @classmethod
    def from_case(cls, case: GridCase) -> "Injections":
        return cls(case.column("Pg") - case.column("Pd"), -case.column("Qd"))


@dataclass(frozen=True)
class BusSolution:
    V: np.ndarray
    theta: np.ndarray  # radians
    converged: bool
    iterations: int
    max_mismatch: float


@dataclass(frozen=True)
class PowerFlowJacobian:
    """Blocks dP/dtheta (H), dP/dV (N), dQ/dtheta (K), dQ/dV (L).

    Rows of H and N run over PV and PQ buses, rows of K and L over PQ buses;
    theta columns over PV and PQ, V columns over PQ.
    """

    H: np.ndarray
    N: np.ndarray
    K: np.ndarray
    L: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.H, self.N], [self.K, self.L]])


def _power(ybus, v):
    return v * np.conj(ybus @ v)


def jacobian(case: GridCase, V, theta) -> PowerFlowJacobian:
    ybus = case.ybus
    v = np.asarray(V) * np.exp(1j * np.asarray(theta))
    i = ybus @ v
    vn = v / np.abs(v)
    # complex derivatives of S = diag(v) conj(Y v)
    ds_dth = 1j * np.diag(v) @ np.conj(np.diag(i) - ybus @ np.diag(v))
    ds_dv = np.diag(v) @ np.conj(ybus @ np.diag(vn)) + np.diag(np.conj(i) * vn)
    pvpq = np.r_[case.pv, case.pq]
    pq = case.pq
    return PowerFlowJacobian(
        H=ds_dth[np.ix_(pvpq, pvpq)].real,
        N=ds_dv[np.ix_(pvpq, pq)].real,
        K=ds_dth[np.ix_(pq, pvpq)].imag,
        L=ds_dv[np.ix_(pq, pq)].imag,
    )


def _initial(case: GridCase, warm_start):
    kinds = case.kinds
    if warm_start is None:
        V = np.ones(case.n)
        theta = np.zeros(case.n)
    else:
        V, theta = (np.array(a, dtype=float) for a in warm_start)
        if V.shape != (case.n,) or theta.shape != (case.n,):
            raise ValidationError("warm start must hold one V and one theta per bus")
    vset = case.column("V_set")
    fixed = kinds != "PQ"
    V[fixed] = vset[fixed]
    theta[case.slack] = np.deg2rad(case.buses[case.slack].angle_set)
    return V, theta


def newton_raphson_pf(case: GridCase, injections: Injections | None = None, warm_start=None,
                      tol: float = TOLERANCE, max_iter: int = MAX_ITERATIONS) -> BusSolution:
    """Solve the AC power flow; never raises on divergence.

    ``warm_start`` is an optional ``(V, theta)`` pair (e.g. a previous
    :class:`BusSolution` as ``(sol.V, sol.theta)``); set-point magnitudes
    and the slack angle are always re-imposed.  ``iterations`` counts
    mismatch evaluations, so an exact starting point reports 1.
    """
    if injections is None:
        injections = Injections.from_case(case)
    if injections.p_mw.shape != (case.n,):
        raise ValidationError(f"expected {case.n} injections, got {injections.p_mw.shape[0]}")
    if isinstance(warm_start, BusSolution):
        warm_start = (warm_start.V, warm_start.theta)
    s_spec = (injections.p_mw + 1j * injections.q_mvar) / case.base_mva
    ybus = case.ybus
    pvpq = np.r_[case.pv, case.pq]
    pq = case.pq
    n_a = pvpq.size
    V, theta = _initial(case, warm_start)
    worst = np.inf
    for it in range(1, max_iter + 1):
        mis = _power(ybus, V * np.exp(1j * theta)) - s_spec
        f = np.r_[mis.real[pvpq], mis.imag[pq]]
        worst = float(np.max(np.abs(f))) if f.size else 0.0
        if not np.isfinite(worst):
            return BusSolution(V, theta, False, it, worst)
        if worst < tol:
            return BusSolution(V, theta, True, it, worst)
        if it == max_iter:
            break
        try:
            dx = np.linalg.solve(jacobian(case, V, theta).full, -f)
        except np.linalg.LinAlgError:
            return BusSolution(V, theta, False, it, worst)
        theta = theta.copy()
        V = V.copy()
        theta[pvpq] += dx[:n_a]
        V[pq] += dx[n_a:]
        if not np.all(np.isfinite(V)) or np.any(V <= 0) or np.max(V) > DIVERGED_V:
            return BusSolution(V, theta, False, it, worst)
    return BusSolution(V, theta, False, max_iter, worst)
