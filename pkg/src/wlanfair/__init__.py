"""Modeling, proportional-fair tuning and simulation of multirate,
non-saturated IEEE 802.11 DCF networks."""

__version__ = "0.1.0"

from .params import (
    ClassPartition,
    PhyTimingParams,
    Scenario,
    ScenarioError,
    StationConfig,
    derive_classes,
    frame_durations,
    scenario_a,
    scenario_b,
    validate_scenario,
)
from .equilibrium import ConvergenceError, Equilibrium, solve_equilibrium
from .fairness import AllocationResult, Criterion, jain_index, optimize
from .sim import SimConfig, SimReport, replicate, run_sim

__all__ = [
    "AllocationResult",
    "ClassPartition",
    "ConvergenceError",
    "Criterion",
    "Equilibrium",
    "PhyTimingParams",
    "Scenario",
    "ScenarioError",
    "SimConfig",
    "SimReport",
    "StationConfig",
    "derive_classes",
    "frame_durations",
    "jain_index",
    "optimize",
    "replicate",
    "run_sim",
    "scenario_a",
    "scenario_b",
    "solve_equilibrium",
    "validate_scenario",
]
