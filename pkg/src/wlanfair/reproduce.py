"""Data behind the three-station comparisons: per-station bars, the Jain/S
table and the slow-station rate sweep.

Each setup is evaluated twice: by the analytical model at the integer
windows actually deployed, and by the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import Equilibrium, solve_equilibrium
from .fairness import AllocationResult, jain_index, normalized, optimize
from .params import Scenario, StationConfig, scenario_a, scenario_b
from .sim import SimConfig, SimReport, replicate

SETUPS = ("dcf", "pf", "lpf", "mlpf")
SETUP_LABELS = {"dcf": "1-DCF", "pf": "2-PF", "lpf": "3-LPF", "mlpf": "4-MLPF"}
TARGETS = ("fig1A", "fig1B", "fig2", "table1")


@dataclass(frozen=True)
class SetupResult:
    setup: str
    scenario: Scenario  # with the integer windows that were simulated
    model: Equilibrium
    allocation: AllocationResult | None
    sim: SimReport | None

    def throughput(self, source: str) -> np.ndarray:
        return self.model.throughput if source == "model" else self.sim.throughput

    def aggregate(self, source: str) -> float:
        return float(self.throughput(source).sum())

    def jain(self, source: str) -> float:
        return jain_index(normalized(self.throughput(source), self.scenario))


def deploy(sc: Scenario, setup: str) -> tuple[Scenario, AllocationResult | None]:
    """Scenario with the integer windows used by ``setup``."""
    if setup == "dcf":
        return sc, None
    res = optimize(sc, setup)
    return sc.with_w0(res.w0_int), res


def evaluate(sc: Scenario, setup: str, duration: float = 60.0, reps: int = 10, seed: int = 1,
             simulate: bool = True) -> SetupResult:
    deployed, alloc = deploy(sc, setup)
    model = solve_equilibrium(deployed)
    sim = replicate(SimConfig(deployed, duration=duration, seed=seed, replications=reps)) if simulate else None
    return SetupResult(setup, deployed, model, alloc, sim)


def builtin(label: str) -> Scenario:
    return {"A": scenario_a, "B": scenario_b}[label]()


def fig2_scenario(lambda_slow: float) -> Scenario:
    return Scenario(
        (
            StationConfig(1, 500.0, 11e6),
            StationConfig(2, 500.0, 11e6),
            StationConfig(3, float(lambda_slow), 1e6),
        ),
        label=f"slow station at {lambda_slow:g} pkt/s",
    )


def fig2_rates(points: int = 20) -> np.ndarray:
    return np.geomspace(10.0, 3300.0, points)


def _sim_cols(res: SetupResult, s: int) -> tuple[float, float]:
    if res.sim is None:
        return float("nan"), float("nan")
    se = res.sim.stderr["throughput"][s] if res.sim.stderr else float("nan")
    return float(res.sim.throughput[s]), float(se)


def fig1_rows(label: str, duration=60.0, reps=10, seed=1, simulate=True):
    """Per-station normalized throughput for every setup of scenario ``label``."""
    sc = builtin(label)
    for setup in SETUPS:
        res = evaluate(sc, setup, duration, reps, seed, simulate)
        for s, st in enumerate(res.scenario.stations):
            sim_s, sim_se = _sim_cols(res, s)
            yield {
                "scenario": label,
                "setup": SETUP_LABELS[setup],
                "station": st.id,
                "w0": int(st.w0),
                "model_norm": res.model.throughput[s] / st.bit_rate,
                "sim_norm": sim_s / st.bit_rate,
                "sim_norm_stderr": sim_se / st.bit_rate,
            }


def table1_rows(duration=60.0, reps=10, seed=1, simulate=True):
    """Jain's index (normalized throughputs) and aggregate S for A and B."""
    for label in ("A", "B"):
        sc = builtin(label)
        for setup in SETUPS:
            res = evaluate(sc, setup, duration, reps, seed, simulate)
            row = {
                "scenario": label,
                "setup": SETUP_LABELS[setup],
                "model_jain": res.jain("model"),
                "model_S_mbps": res.aggregate("model") / 1e6,
                "sim_jain": float("nan"),
                "sim_S_mbps": float("nan"),
                "sim_S_stderr_mbps": float("nan"),
            }
            if simulate:
                row["sim_jain"] = res.jain("sim")
                row["sim_S_mbps"] = res.aggregate("sim") / 1e6
                se = res.sim.aggregate_stderr
                row["sim_S_stderr_mbps"] = se / 1e6 if se is not None else float("nan")
            yield row


def fig2_rows(points=20, duration=60.0, reps=10, seed=1, simulate=True, setups=("dcf", "lpf", "mlpf")):
    """Per-station throughput against the slow station's packet rate."""
    for lam in fig2_rates(points):
        sc = fig2_scenario(lam)
        for setup in setups:
            res = evaluate(sc, setup, duration, reps, seed, simulate)
            for s, st in enumerate(res.scenario.stations):
                sim_s, sim_se = _sim_cols(res, s)
                yield {
                    "setup": setup.upper(),
                    "lambda_slow": float(lam),
                    "station": st.id,
                    "w0": int(st.w0),
                    "model_S_mbps": res.model.throughput[s] / 1e6,
                    "sim_S_mbps": sim_s / 1e6,
                    "sim_S_stderr_mbps": sim_se / 1e6,
                }


def reproduce(target: str, **kw):
    if target == "fig1A":
        return list(fig1_rows("A", **kw))
    if target == "fig1B":
        return list(fig1_rows("B", **kw))
    if target == "fig2":
        return list(fig2_rows(**kw))
    if target == "table1":
        return list(table1_rows(**kw))
    raise ValueError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
