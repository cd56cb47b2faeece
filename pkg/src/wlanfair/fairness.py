"""Weighted proportional-fair allocation over transmission probabilities.

Three weightings are supported:

* ``PF``   all weights one (classical proportional fairness),
* ``LPF``  weight lambda_s / lambda_max,
* ``MLPF`` as LPF but with each rate first truncated to what the station's
  bit rate can carry.

The optimizer works directly on tau, then maps the optimum back to one
minimum contention window per station.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, nnls

from . import chain
from .equilibrium import Equilibrium, collision_probs, solve_equilibrium, throughput
from .params import Scenario, derive_classes, validate_scenario
from .slot import expected_slot, expected_slot_excluding

log = logging.getLogger(__name__)

TAU_MIN = 1e-5
TAU_MAX = 0.5


class Criterion(str, enum.Enum):
    PF = "pf"
    LPF = "lpf"
    MLPF = "mlpf"


class AllocationError(RuntimeError):
    pass


class InfeasibleWindow(AllocationError):
    def __init__(self, station: int, w0: float):
        super().__init__(f"station {station}: tau* needs W0 = {w0:.4g} < 1")
        self.station = station
        self.w0 = w0


@dataclass(frozen=True)
class TruncatedRates:
    lambda_star: np.ndarray
    lambda_star_max: float


@dataclass(frozen=True)
class AllocationResult:
    criterion: Criterion
    tau_star: np.ndarray
    w0_real: np.ndarray
    w0_int: np.ndarray
    predicted: Equilibrium
    utility: float
    jain: float
    jain_absolute: float
    weights: np.ndarray
    clipped: tuple[int, ...] = ()  # 0-based stations at the tau upper clip
    window_limited: tuple[int, ...] = ()  # 0-based stations held at W0 = 1

    def interior(self) -> np.ndarray:
        """Mask of stations whose tau* is not on any bound."""
        mask = np.ones(len(self.tau_star), dtype=bool)
        mask[list(self.clipped) + list(self.window_limited)] = False
        mask &= self.tau_star > TAU_MIN * (1 + 1e-6)
        return mask

    @property
    def aggregate(self) -> float:
        return self.predicted.aggregate


def utility(S, weights) -> float:
    S = np.asarray(S, dtype=float)
    if np.any(S <= 0):
        raise ValueError("log-domain violation: every throughput must be > 0")
    return float(np.sum(np.asarray(weights, dtype=float) * np.log(S)))


def truncate_rates(sc: Scenario) -> TruncatedRates:
    lam = np.array([st.lambda_ for st in sc.stations])
    cap = np.array([st.bit_rate / (8.0 * st.payload) for st in sc.stations])
    lam_star = np.where(lam * 8.0 * np.array([st.payload for st in sc.stations]) <= np.array([st.bit_rate for st in sc.stations]), lam, cap)
    return TruncatedRates(lam_star, float(lam_star.max()))


def criterion_weights(sc: Scenario, criterion) -> np.ndarray:
    criterion = Criterion(criterion)
    if criterion is Criterion.PF:
        return np.ones(sc.n)
    if criterion is Criterion.LPF:
        lam = np.array([st.lambda_ for st in sc.stations])
        return lam / lam.max()
    tr = truncate_rates(sc)
    return tr.lambda_star / tr.lambda_star_max


def jain_index(x) -> float:
    """Jain's fairness index of a nonnegative vector."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("negative entries")
    top = float(np.max(x)) if x.size else 0.0
    if top == 0:
        raise ValueError("Jain's index undefined for an all-zero vector")
    x = x / top  # guards the squares against under- and overflow
    return float(np.sum(x)) ** 2 / (len(x) * float(np.sum(x**2)))


def normalized(S, sc: Scenario) -> np.ndarray:
    return np.asarray(S, dtype=float) / np.array([st.bit_rate for st in sc.stations])


def _t_av(tau, sc, part) -> float:
    return expected_slot(tau, sc, part).t_av


def d_t_av(tau, sc: Scenario, part=None, h: float = 1e-6) -> np.ndarray:
    """Gradient of the mean slot duration by Richardson-extrapolated central differences."""
    tau = np.asarray(tau, dtype=float)
    part = part or derive_classes(sc)
    g = np.empty(len(tau))
    for j in range(len(tau)):
        def central(step):
            up, dn = tau.copy(), tau.copy()
            up[j] += step
            dn[j] -= step
            return (_t_av(up, sc, part) - _t_av(dn, sc, part)) / (2 * step)

        g[j] = (4.0 * central(h / 2) - central(h)) / 3.0
    return g


def stationarity_residual(tau, sc: Scenario, weights, part=None) -> np.ndarray:
    """Gradient of the weighted log-utility with respect to tau.

    r_j = w_j / tau_j - sum_{k != j} w_k / (1 - tau_j) - (C / T_av) dT_av/dtau_j
    with C the sum of all weights.  Zero at an interior optimum.
    """
    tau = np.asarray(tau, dtype=float)
    w = np.asarray(weights, dtype=float)
    part = part or derive_classes(sc)
    c = w.sum()
    others = c - w
    return w / tau - others / (1.0 - tau) - c / _t_av(tau, sc, part) * d_t_av(tau, sc, part)


def kkt_residual(res: "AllocationResult", sc: Scenario, h: float = 1e-7) -> np.ndarray:
    """First-order optimality residual of ``res`` on its free coordinates.

    Where some station is held at W0 = 1 its reachability constraint also
    depends on the other stations' tau, so the plain gradient need not vanish.
    The residual is grad U + sum_k mu_k grad slack_k with mu >= 0 fitted by
    nonnegative least squares; it equals ``stationarity_residual`` when no
    constraint binds.
    """
    tau = np.asarray(res.tau_star, dtype=float)
    part = derive_classes(sc)
    g = stationarity_residual(tau, sc, res.weights, part)
    free = (tau > TAU_MIN * (1 + 1e-6)) & (tau < TAU_MAX * (1 - 1e-9))
    active = list(res.window_limited)
    if not active:
        return g[free]
    J = np.empty((len(active), sc.n))
    for j in range(sc.n):
        up, dn = tau.copy(), tau.copy()
        up[j] += h
        dn[j] -= h
        J[:, j] = (window_slack(up, sc, part)[active] - window_slack(dn, sc, part)[active]) / (2 * h)
    mu, _ = nnls(J[:, free].T, -g[free])
    return g[free] + J[:, free].T @ mu


def predicted_throughput(tau, sc: Scenario, part=None) -> np.ndarray:
    return throughput(tau, expected_slot(tau, sc, part), sc)


def _window_terms(tau, sc: Scenario, part=None):
    """Per-station (a_s, P_eq * sum_{i<m} (2 P_eq)^i) at a fixed tau.

    a_s = (1 - P_eq)(1 - q) / P_I0 is the idle-entry factor of the chain.
    """
    tau = np.asarray(tau, dtype=float)
    slot = expected_slot(tau, sc, part)
    p_col = collision_probs(tau)
    a = np.empty(sc.n)
    f = np.empty(sc.n)
    for s, st in enumerate(sc.stations):
        q, p_i0 = chain.traffic_probs(st.lambda_, slot.t_av, expected_slot_excluding(tau, sc, s))
        peq = chain.p_eq(p_col[s], st.pe)
        a[s] = (1.0 - peq) * (1.0 - q) / p_i0
        f[s] = peq * chain._geom_failures(peq, sc.phy.m)
    return a, f


def window_slack(tau, sc: Scenario, part=None) -> np.ndarray:
    """Nonnegative exactly where every tau_s is reachable with some W0 >= 1."""
    tau = np.asarray(tau, dtype=float)
    a, f = _window_terms(tau, sc, part)
    return 2.0 / tau - 2.0 * a - 2.0 - f


def invert_w0(tau_star, sc: Scenario, slack: float = 1e-6) -> np.ndarray:
    """Real-valued W0 per station that makes tau* the network fixed point.

    At fixed tau the collision, traffic and slot quantities are pinned, so
    only the idle mass depends on W0.  Eliminating it,
    tau_sat = tau* / (1 - a tau*), and W0 follows from the saturated closed
    form.  Values within ``slack`` below one are snapped to one.
    """
    tau = np.asarray(tau_star, dtype=float)
    if np.any(tau <= 0) or np.any(tau >= 1):
        raise ValueError("tau* must lie in (0, 1)")
    a, f = _window_terms(tau, sc)
    w0 = np.empty(sc.n)
    for s, st in enumerate(sc.stations):
        if a[s] * tau[s] >= 1.0:
            raise InfeasibleWindow(st.id, -np.inf)
        tau_sat = tau[s] / (1.0 - a[s] * tau[s])
        w0[s] = (2.0 / tau_sat - 1.0) / (1.0 + f[s])
        if w0[s] < 1.0 - slack:
            raise InfeasibleWindow(st.id, w0[s])
        w0[s] = max(w0[s], 1.0)
    return w0


def round_w0(w0) -> np.ndarray:
    return np.maximum(1, np.rint(np.asarray(w0, dtype=float))).astype(int)


def _starts(n: int) -> list[np.ndarray]:
    base = [0.01, 0.03, 0.08, 0.2]
    starts = [np.full(n, b) for b in base]
    ramp = np.linspace(0.005, 0.15, n)
    starts.append(ramp[::-1] if n > 1 else ramp)
    return starts


def maximize_utility(sc: Scenario, weights, n_starts: int = 5) -> tuple[np.ndarray, float]:
    """Maximize sum_s w_s log S_s(tau) over reachable tau in [TAU_MIN, TAU_MAX]^N.

    Reachability (some W0 >= 1 produces tau_s) enters as the smooth
    inequality ``window_slack(tau) >= 0``.
    """
    part = derive_classes(sc)
    w = np.asarray(weights, dtype=float)

    def neg(t):
        S = predicted_throughput(t, sc, part)
        if np.any(S <= 0):
            return np.inf
        return -float(np.sum(w * np.log(S)))

    def neg_grad(t):
        return -stationarity_residual(t, sc, w, part)

    cons = {"type": "ineq", "fun": lambda t: window_slack(t, sc, part)}
    bounds = [(TAU_MIN, TAU_MAX)] * sc.n
    best = None
    for x0 in _starts(sc.n)[:n_starts]:
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", "Values in x were outside bounds", RuntimeWarning)
            res = minimize(neg, x0, jac=neg_grad, method="SLSQP", bounds=bounds, constraints=[cons],
                           options={"ftol": 1e-14, "maxiter": 500})
        x = np.clip(res.x, TAU_MIN, TAU_MAX)
        if np.any(window_slack(x, sc, part) < -1e-6):
            continue
        fx = neg(x)
        if not np.isfinite(fx):
            continue
        key = (fx, tuple(x))
        if best is None or key < best[0]:
            best = (key, x)
    if best is None:
        raise AllocationError("no reachable interior optimum found from any start")
    return best[1], -best[0][0]


def optimize(sc: Scenario, criterion="mlpf", n_starts: int = 5) -> AllocationResult:
    validate_scenario(sc)
    criterion = Criterion(criterion)
    w = criterion_weights(sc, criterion)
    tau, u = maximize_utility(sc, w, n_starts)
    clipped = tuple(int(s) for s in np.flatnonzero(np.isclose(tau, TAU_MAX, rtol=0, atol=1e-9)))
    if clipped:
        log.info("tau upper clip active for stations %s", [s + 1 for s in clipped])
    limited = tuple(int(s) for s in np.flatnonzero(window_slack(tau, sc) < 1e-6))
    w0 = invert_w0(tau, sc)
    eq = solve_equilibrium(sc.with_w0(w0))
    Sn = normalized(eq.throughput, sc)
    return AllocationResult(
        criterion=criterion,
        tau_star=tau,
        w0_real=w0,
        w0_int=round_w0(w0),
        predicted=eq,
        utility=u,
        jain=jain_index(Sn),
        jain_absolute=jain_index(eq.throughput),
        weights=w,
        clipped=clipped,
        window_limited=limited,
    )
