"""Per-station backoff chain with an idle (empty queue) state.

States are (stage i, counter k) for i = 0..m, k = 0..W_i - 1 with
W_i = 2**i * W0, plus one idle state I.  A station at (i, 0) transmits; a
failure (probability p_eq) moves it to a uniform counter at stage
min(i + 1, m).  A success restarts at stage 0 if another packet is queued
(probability q) and otherwise enters I, which is left towards stage 0 with
probability p_i0 per slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class ChainError(ArithmeticError):
    pass


@dataclass(frozen=True)
class StationState:
    tau: float
    p_col: float
    p_eq: float
    b_i: float
    q: float
    p_i0: float


def p_eq(p_col: float, pe: float) -> float:
    """Probability that an attempt fails through collision or channel error."""
    return p_col + pe - pe * p_col


def traffic_probs(lambda_: float, t_av: float, t_av_excl: float) -> tuple[float, float]:
    """(q, P_I0): chance of at least one Poisson arrival within each duration."""
    return -math.expm1(-lambda_ * t_av), -math.expm1(-lambda_ * t_av_excl)


def _geom_failures(p: float, m: int) -> float:
    # sum_{i<m} (2p)^i, the regular form of (1 - (2p)^m) / (1 - 2p)
    return sum((2.0 * p) ** i for i in range(m))


def _denominator(p: float, w0: float, m: int) -> float:
    # Eq. (1) denominator divided by (1 - 2p)
    return (w0 + 1.0) + w0 * p * _geom_failures(p, m)


def tau_from_chain(b_i: float, p_eq: float, w0: float, m: int) -> float:
    """Per-slot transmission probability of a station.

    Written without the removable singularity at p_eq = 1/2.
    """
    return 2.0 * (1.0 - b_i) / _denominator(p_eq, w0, m)


def saturated_tau(p_eq: float, w0: float, m: int) -> float:
    return tau_from_chain(0.0, p_eq, w0, m)


def idle_probability_balance(w0: float, m: int, p_eq: float, q: float, p_i0: float) -> float:
    """Idle-state mass from flow balance through I; valid for real W0.

    Outside I the chain is the saturated one, so the success flow per slot is
    (1 - b_I) tau_sat (1 - p_eq); balancing entries to and exits from I gives
    b_I = x / (1 + x) with x = tau_sat (1 - p_eq)(1 - q) / p_i0.
    """
    inflow = saturated_tau(p_eq, w0, m) * (1.0 - p_eq) * (1.0 - q)
    if p_i0 <= 0.0:
        if inflow <= 0.0:
            raise ChainError("idle state is disconnected: p_i0 = 0 and no inflow")
        return 1.0
    x = inflow / p_i0
    return x / (1.0 + x)


def _windows(w0: int, m: int) -> list[int]:
    return [w0 * 2**i for i in range(m + 1)]


def chain_transition_matrix(w0: int, m: int, p_eq: float, q: float, p_i0: float) -> sp.csr_matrix:
    """Row-stochastic transition matrix; idle state is the last index."""
    wins = _windows(w0, m)
    offs = np.concatenate([[0], np.cumsum(wins)])
    n = int(offs[-1]) + 1
    idle = n - 1
    rows, cols, vals = [], [], []

    def to_stage(src, stage, mass):
        w = wins[stage]
        rows.extend([src] * w)
        cols.extend(range(offs[stage], offs[stage] + w))
        vals.extend([mass / w] * w)

    for i, w in enumerate(wins):
        base = offs[i]
        # counter decrement
        rows.extend(range(base + 1, base + w))
        cols.extend(range(base, base + w - 1))
        vals.extend([1.0] * (w - 1))
        # transmission at counter 0
        to_stage(base, min(i + 1, m), p_eq)
        to_stage(base, 0, (1.0 - p_eq) * q)
        rows.append(base)
        cols.append(idle)
        vals.append((1.0 - p_eq) * (1.0 - q))
    to_stage(idle, 0, p_i0)
    rows.append(idle)
    cols.append(idle)
    vals.append(1.0 - p_i0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def chain_stationary(w0: int, m: int, p_eq: float, q: float, p_i0: float) -> np.ndarray:
    """Stationary distribution of the full chain by a sparse linear solve."""
    if int(w0) != w0 or w0 < 1:
        raise ValueError("the explicit chain needs an integer W0 >= 1")
    P = chain_transition_matrix(int(w0), m, p_eq, q, p_i0)
    n = P.shape[0]
    # pi (P - I) = 0 with one balance equation replaced by sum(pi) = 1
    A = (P.T - sp.identity(n, format="csr")).tolil()
    A[0, :] = np.ones(n)
    b = np.zeros(n)
    b[0] = 1.0
    with np.errstate(all="raise"):
        try:
            pi = spla.spsolve(A.tocsc(), b)
        except (FloatingPointError, RuntimeError) as exc:
            raise ChainError(f"singular chain (p_i0={p_i0})") from exc
    if not np.all(np.isfinite(pi)):
        raise ChainError(f"singular chain (p_i0={p_i0})")
    return pi


def chain_tau(pi: np.ndarray, w0: int, m: int) -> float:
    """Total mass of the transmitting states (i, 0)."""
    offs = np.concatenate([[0], np.cumsum(_windows(int(w0), m))])[:-1]
    return float(pi[offs].sum())


def idle_probability(st, phy, p_eq: float, q: float, p_i0: float, method: str = "auto") -> float:
    """Stationary probability of the idle state for station ``st``.

    ``method="chain"`` solves the explicit chain (integer W0 only),
    ``"balance"`` uses the flow-balance identity, ``"auto"`` picks the chain
    whenever W0 is integral.
    """
    w0, m = st.w0, phy.m
    if method == "auto":
        method = "chain" if float(w0).is_integer() else "balance"
    if method == "balance":
        return idle_probability_balance(w0, m, p_eq, q, p_i0)
    if method != "chain":
        raise ValueError(f"unknown method {method!r}")
    if not float(w0).is_integer():
        raise ValueError(f"the explicit chain needs an integer W0, got {w0}")
    if p_i0 <= 0.0:
        return idle_probability_balance(w0, m, p_eq, q, p_i0)
    return float(chain_stationary(int(w0), m, p_eq, q, p_i0)[-1])
