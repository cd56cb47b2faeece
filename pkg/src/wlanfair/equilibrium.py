"""Network equilibrium: the per-station chains coupled through the slot times."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chain
from .chain import StationState
from .params import Scenario, derive_classes, validate_scenario
from .slot import SlotBreakdown, expected_slot, expected_slot_excluding


TAU_START_CAP = 0.5
TAU_CEIL = 1.0 - 1e-9


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"fixed point did not converge: residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class Equilibrium:
    tau: np.ndarray
    per_station: tuple[StationState, ...]
    slot: SlotBreakdown
    throughput: np.ndarray  # bit/s per station
    residual: float
    iterations: int

    @property
    def aggregate(self) -> float:
        return float(self.throughput.sum())

    @property
    def t_av(self) -> float:
        return self.slot.t_av


def throughput(tau, slot: SlotBreakdown, sc: Scenario) -> np.ndarray:
    """Per-station delivered payload rate in bit/s."""
    pe = np.array([st.pe for st in sc.stations])
    bits = np.array([8.0 * st.payload for st in sc.stations])
    return slot.p_succ * (1.0 - pe) * bits / slot.t_av


def collision_probs(tau) -> np.ndarray:
    t = np.asarray(tau, dtype=float)
    idle = 1.0 - t
    return np.array([1.0 - np.prod(np.delete(idle, s)) for s in range(len(t))])


def station_states(tau, sc: Scenario, part=None, slot: SlotBreakdown | None = None) -> list[StationState]:
    """Traffic and chain quantities of every station at a given tau.

    The returned ``tau`` fields are the chain's answer to the input, so a
    fixed point has ``states[s].tau == tau[s]``.
    """
    t = np.asarray(tau, dtype=float)
    if slot is None:
        slot = expected_slot(t, sc, part)
    p_col = collision_probs(t)
    out = []
    for s, st in enumerate(sc.stations):
        t_excl = expected_slot_excluding(t, sc, s)
        q, p_i0 = chain.traffic_probs(st.lambda_, slot.t_av, t_excl)
        peq = chain.p_eq(p_col[s], st.pe)
        b_i = chain.idle_probability(st, sc.phy, peq, q, p_i0, method="balance")
        out.append(StationState(chain.tau_from_chain(b_i, peq, st.w0, sc.phy.m), p_col[s], peq, b_i, q, p_i0))
    return out


def solve_equilibrium(sc: Scenario, tol: float = 1e-10, max_iter: int = 10_000, damping: float = 0.5) -> Equilibrium:
    """Damped successive substitution on the transmission probabilities.

    Starts from the saturated no-collision point tau_s = 2 / (W0 + 1),
    capped below one for W0 = 1, and stops once every component moves by
    less than ``tol`` relative to itself.
    """
    validate_scenario(sc)
    if not 0 < damping <= 1:
        raise ValueError("damping must be in (0, 1]")
    part = derive_classes(sc)
    tau = np.array([min(2.0 / (st.w0 + 1.0), TAU_START_CAP) for st in sc.stations])
    residual = np.inf
    for it in range(1, max_iter + 1):
        states = station_states(tau, sc, part)
        new = np.array([s.tau for s in states])
        residual = float(np.max(np.abs(new - tau)))
        # relative test: W0 recovered from a tiny tau is ill-conditioned
        if np.all(np.abs(new - tau) <= tol * tau):
            tau = new
            break
        tau = np.minimum((1.0 - damping) * tau + damping * new, TAU_CEIL)
    else:
        raise ConvergenceError(residual, max_iter)
    slot = expected_slot(tau, sc, part)
    states = station_states(tau, sc, part, slot)
    residual = float(np.max(np.abs(np.array([s.tau for s in states]) - tau)))
    return Equilibrium(tau, tuple(states), slot, throughput(tau, slot, sc), residual, it)
