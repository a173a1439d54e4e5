"""AC power-flow simulation producing voltage traces under scripted load scenarios."""
from .case import Branch, Bus, GridCase, ieee118, load_case, write_case
from .powerflow import BusSolution, Injections, PowerFlowJacobian, jacobian, newton_raphson_pf
from .scenario import (
    LoadScenario,
    SimulationResult,
    Stage,
    apply_scenario,
    constant_scenario,
    generate_trace,
    load_scenario,
    steady_scenario,
    table2_scenario,
)

__all__ = [
    "Branch", "Bus", "GridCase", "ieee118", "load_case", "write_case",
    "BusSolution", "Injections", "PowerFlowJacobian", "jacobian", "newton_raphson_pf",
    "LoadScenario", "SimulationResult", "Stage", "apply_scenario", "constant_scenario",
    "generate_trace", "load_scenario", "steady_scenario", "table2_scenario",
]
