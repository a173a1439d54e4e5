"""Time-scripted load scenarios and the trace generator.

A scenario is a list of stages tiling ``[1, t_max]``.  Each stage may pin the
active demand of chosen buses to an affine function of ``t`` and may switch
on the white-noise load fluctuation

    P' = P (1 + gamma_mul r1) + gamma_acc r2,   r1, r2 ~ N(0, 1)

drawn independently for every (t, bus) and applied to the active demand of
every load bus.  Reactive demand is held at its base value.
"""
from __future__ import annotations

import ast
import json
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .. import seeding
from ..errors import CaseFormatError, ScenarioError, ValidationError
from ..rmt import VoltageTrace
from .case import GridCase
from .powerflow import BusSolution, Injections, newton_raphson_pf


@dataclass(frozen=True)
class Affine:
    """P(t) = intercept + slope * t, in MW."""

    intercept: float
    slope: float = 0.0

    def __call__(self, t):
        return self.intercept + self.slope * t

    def to_json(self):
        return self.intercept if self.slope == 0 else {"intercept": self.intercept, "slope": self.slope}


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval(node, t):
    if isinstance(node, ast.Expression):
        return _eval(node.body, t)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "t":
        return float(t)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand, t)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, t), _eval(node.right, t))
    raise ValueError("unsupported expression")


def parse_expression(spec) -> Affine:
    """A number, ``{"intercept": a, "slope": b}`` or a string such as ``"t/3 - 100"``."""
    if isinstance(spec, Affine):
        return spec
    if isinstance(spec, bool):
        raise ValidationError(f"bad load expression {spec!r}")
    if isinstance(spec, (int, float)):
        return Affine(float(spec))
    if isinstance(spec, dict):
        extra = set(spec) - {"intercept", "slope"}
        if extra or "intercept" not in spec:
            raise ValidationError(f"load expression needs 'intercept' (and optional 'slope'), got {sorted(spec)}")
        return Affine(float(spec["intercept"]), float(spec.get("slope", 0.0)))
    if isinstance(spec, str):
        try:
            tree = ast.parse(spec.strip(), mode="eval")
            v0, v1, v2 = (_eval(tree, t) for t in (0.0, 1.0, 2.0))
        except (SyntaxError, ValueError, ZeroDivisionError):
            raise ValidationError(f"bad load expression {spec!r}") from None
        slope = v1 - v0
        if abs((v2 - v1) - slope) > 1e-9 * max(1.0, abs(slope)):
            raise ValidationError(f"load expression {spec!r} is not affine in t")
        return Affine(v0, slope)
    raise ValidationError(f"bad load expression {spec!r}")


@dataclass(frozen=True)
class Stage:
    t_start: int
    t_end: int
    bus_overrides: dict = field(default_factory=dict)
    fluctuation: bool = True
    label: str = ""

    def __post_init__(self):
        if self.t_end < self.t_start:
            raise ValidationError(f"stage {self.label or self.t_start}: t_end < t_start")
        object.__setattr__(self, "bus_overrides",
                           {int(k): parse_expression(v) for k, v in dict(self.bus_overrides).items()})

    def contains(self, t: int) -> bool:
        return self.t_start <= t <= self.t_end


@dataclass(frozen=True)
class LoadScenario:
    stages: tuple
    gamma_acc: float = 0.1
    gamma_mul: float = 0.001
    seed: int = 0

    def __post_init__(self):
        stages = tuple(sorted(self.stages, key=lambda s: s.t_start))
        if not stages:
            raise ValidationError("scenario has no stages")
        if stages[0].t_start != 1:
            raise ValidationError("first stage must start at t = 1")
        for a, b in zip(stages, stages[1:]):
            if b.t_start != a.t_end + 1:
                raise ValidationError(f"stages must tile time without gaps or overlap (at t = {a.t_end})")
        if self.gamma_acc < 0 or self.gamma_mul < 0:
            raise ValidationError("fluctuation amplitudes must be non-negative")
        object.__setattr__(self, "stages", stages)

    @property
    def t_max(self) -> int:
        return self.stages[-1].t_end

    def stage_at(self, t: int) -> Stage:
        for s in self.stages:
            if s.contains(t):
                return s
        raise ValidationError(f"t = {t} outside the scenario range [1, {self.t_max}]")

    @property
    def brackets(self) -> list:
        """``(label, t_start, t_end)`` per stage, handy for stage statistics."""
        return [(s.label or f"stage{k + 1}", s.t_start, s.t_end) for k, s in enumerate(self.stages)]

    def to_json(self) -> dict:
        return {
            "gamma_acc": self.gamma_acc,
            "gamma_mul": self.gamma_mul,
            "seed": self.seed,
            "stages": [
                {
                    "label": s.label,
                    "t_start": s.t_start,
                    "t_end": s.t_end,
                    "fluctuation": s.fluctuation,
                    "bus_overrides": {str(k): v.to_json() for k, v in s.bus_overrides.items()},
                }
                for s in self.stages
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LoadScenario":
        try:
            stages = [
                Stage(int(s["t_start"]), int(s["t_end"]), s.get("bus_overrides", {}),
                      bool(s.get("fluctuation", True)), str(s.get("label", "")))
                for s in data["stages"]
            ]
            return cls(tuple(stages), float(data.get("gamma_acc", 0.1)), float(data.get("gamma_mul", 0.001)),
                       int(data.get("seed", 0)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed scenario: {exc}") from None


def load_scenario(path) -> LoadScenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"{path.name}: {exc.msg}", exc.lineno) from None
    return LoadScenario.from_json(data)


def table2_path() -> Path:
    return Path(str(resources.files("rmtgrid") / "data" / "table2.json"))


def table2_scenario() -> LoadScenario:
    """The four-event bus-52 scenario shipped with the package."""
    return load_scenario(table2_path())


def constant_scenario(t_max: int, seed: int = 0) -> LoadScenario:
    """Base-case loads, no fluctuation."""
    return LoadScenario((Stage(1, int(t_max), {}, False, "constant"),), 0.0, 0.0, seed)


def steady_scenario(overrides: dict, t_max: int, fluctuation: bool = True, gamma_acc: float = 0.1,
                    gamma_mul: float = 0.001, seed: int = 0, label: str = "steady") -> LoadScenario:
    """One stage of fixed overrides, e.g. ``{52: 300}``, for long steady runs."""
    return LoadScenario((Stage(1, int(t_max), overrides, fluctuation, label),), gamma_acc, gamma_mul, seed)


def apply_scenario(scenario: LoadScenario, case: GridCase, t: int, rng_state=None) -> Injections:
    """Net bus injections at time ``t``.

    ``rng_state`` is a Generator for the fluctuation draws; by default the
    stream ``(scenario.seed, "load", t)`` is used.
    """
    if int(t) != t:
        raise ValidationError("t must be an integer")
    t = int(t)
    stage = scenario.stage_at(t)
    pd = case.column("Pd")
    for bus, expr in stage.bus_overrides.items():
        if bus not in case.index:
            raise ValidationError(f"scenario overrides unknown bus {bus}")
        pd[case.index[bus]] = expr(t)
    if stage.fluctuation and (scenario.gamma_acc or scenario.gamma_mul):
        g = rng_state if rng_state is not None else seeding.rng(scenario.seed, seeding.LOAD, t)
        r = g.standard_normal((2, case.n))
        loads = pd != 0
        pd[loads] = pd[loads] * (1.0 + scenario.gamma_mul * r[0, loads]) + scenario.gamma_acc * r[1, loads]
    return Injections(case.column("Pg") - pd, -case.column("Qd"))


@dataclass(frozen=True)
class SimulationResult:
    trace: VoltageTrace
    collapse_time: int | None
    flagged: tuple  # time labels padded with the last converged solution
    iterations: np.ndarray

    @property
    def collapsed(self) -> bool:
        return self.collapse_time is not None


def generate_trace(case: GridCase, scenario: LoadScenario, t_max: int | None = None,
                   seed: int | None = None) -> SimulationResult:
    """Solve the power flow at t = 1..t_max, each step warm-started from the last.

    ``seed`` replaces the scenario's own seed when given.  After the first
    non-converged instant every column repeats the last converged voltages
    and is listed in ``flagged``.
    """
    t_max = scenario.t_max if t_max is None else int(t_max)
    if t_max < 1:
        raise ValidationError("t_max must be >= 1")
    if t_max > scenario.t_max:
        raise ValidationError(f"t_max {t_max} exceeds the scenario range {scenario.t_max}")
    base_seed = scenario.seed if seed is None else int(seed)
    volts = np.empty((case.n, t_max))
    iters = np.zeros(t_max, dtype=int)
    last: BusSolution | None = None
    collapse = None
    for k in range(t_max):
        t = k + 1
        if collapse is None:
            inj = apply_scenario(scenario, case, t, seeding.rng(base_seed, seeding.LOAD, t))
            sol = newton_raphson_pf(case, inj, warm_start=last)
            iters[k] = sol.iterations
            if sol.converged:
                last = sol
            elif last is None:
                raise ScenarioError("power flow does not converge at t = 1")
            else:
                collapse = t
        volts[:, k] = last.V
    flagged = tuple(range(collapse, t_max + 1)) if collapse is not None else ()
    trace = VoltageTrace(volts, case.bus_ids, 1.0, 1)
    return SimulationResult(trace, collapse, flagged, iters)
