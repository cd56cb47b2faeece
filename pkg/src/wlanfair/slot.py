"""Per-slot event probabilities and expected slot durations for a given tau.

Stations are addressed by 0-based position; classes by 0-based index with
class 0 the slowest (longest channel occupancy).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .params import ClassPartition, Scenario, derive_classes, frame_durations

log = logging.getLogger(__name__)


def as_tau(tau) -> np.ndarray:
    t = np.asarray(tau, dtype=float)
    if t.ndim != 1:
        raise ValueError("tau must be one-dimensional")
    if not np.all((t >= 0) & (t < 1)):
        raise ValueError("tau entries must lie in [0, 1)")
    return t


def p_transmit(tau) -> float:
    """Probability that at least one station transmits in a slot."""
    t = as_tau(tau)
    return 1.0 - float(np.prod(1.0 - t))


def _p_success_all(t: np.ndarray) -> np.ndarray:
    idle = 1.0 - t
    out = np.empty_like(t)
    for s in range(len(t)):
        out[s] = t[s] * np.prod(np.delete(idle, s))
    return out


def p_success(tau, s: int) -> float:
    """Probability that station ``s`` alone transmits."""
    t = as_tau(tau)
    return float(t[s] * np.prod(np.delete(1.0 - t, s)))


def _silent(t: np.ndarray, members) -> float:
    return float(np.prod([1.0 - t[j] for j in members])) if len(members) else 1.0


def class_transmit_probs(tau, part: ClassPartition, d: int) -> tuple[float, float, float]:
    """(lower, higher, same-class) busy probabilities for class ``d``."""
    t = as_tau(tau)
    lower = [j for c in part.classes[:d] for j in c.members]
    higher = [j for c in part.classes[d + 1:] for j in c.members]
    return (
        1.0 - _silent(t, lower),
        1.0 - _silent(t, higher),
        1.0 - _silent(t, part.classes[d].members),
    )


def p_collision_class(tau, part: ClassPartition, d: int) -> tuple[float, float, float]:
    """(internal, external, total) probability of a collision led by class ``d``.

    A collision is attributed to the slowest class among its participants.
    """
    t = as_tau(tau)
    p_low, p_high, p_same = class_transmit_probs(t, part, d)
    members = part.classes[d].members
    singles = sum(t[s] * _silent(t, [j for j in members if j != s]) for s in members)
    bracket = p_same - singles
    if bracket < 0.0:
        log.debug("clamped internal collision mass %.3g for class %d", bracket, d)
        bracket = 0.0
    internal = (1.0 - p_high) * (1.0 - p_low) * bracket
    external = p_same * p_high * (1.0 - p_low)
    return internal, external, internal + external


@dataclass(frozen=True)
class SlotBreakdown:
    p_tr: float
    p_succ: np.ndarray
    p_coll_internal: np.ndarray
    p_coll_external: np.ndarray
    t_i: float
    t_s: float
    t_e: float
    t_c: float

    @property
    def p_coll_class(self) -> np.ndarray:
        return self.p_coll_internal + self.p_coll_external

    @property
    def t_av(self) -> float:
        return self.t_i + self.t_s + self.t_e + self.t_c


def expected_slot(tau, sc: Scenario, part: ClassPartition | None = None) -> SlotBreakdown:
    t = as_tau(tau)
    if len(t) != sc.n:
        raise ValueError(f"tau has {len(t)} entries for {sc.n} stations")
    if part is None:
        part = derive_classes(sc)
    p_tr = 1.0 - float(np.prod(1.0 - t))
    ps = _p_success_all(t)
    pe = np.array([st.pe for st in sc.stations])
    ts = np.array([frame_durations(st, sc.phy)[0] for st in sc.stations])
    te = np.array([frame_durations(st, sc.phy)[1] for st in sc.stations])
    coll = np.array([p_collision_class(t, part, d)[:2] for d in range(part.n_c)]).reshape(-1, 2)
    tc = np.array([c.t_c for c in part.classes])
    return SlotBreakdown(
        p_tr=p_tr,
        p_succ=ps,
        p_coll_internal=coll[:, 0],
        p_coll_external=coll[:, 1],
        t_i=(1.0 - p_tr) * sc.phy.sigma,
        t_s=float(np.sum(ps * (1.0 - pe) * ts)),
        t_e=float(np.sum(ps * pe * te)),
        t_c=float(np.sum((coll[:, 0] + coll[:, 1]) * tc)),
    )


def expected_slot_excluding(tau, sc: Scenario, t: int) -> float:
    """Mean slot duration seen while station ``t`` (0-based) stays silent."""
    tv = as_tau(tau)
    if sc.n == 1:
        return sc.phy.sigma
    reduced = sc.without(t)
    return expected_slot(np.delete(tv, t), reduced).t_av
