"""Acceptance gate: every criterion at its stated tolerance.

Each test records one PASS/FAIL line, repeated in the terminal summary.
Simulation-backed criteria use 60 s replications and take a few minutes.
"""

import time

import numpy as np
import pytest
from scipy.stats import linregress

from wlanfair import chain
from wlanfair.equilibrium import solve_equilibrium
from wlanfair.fairness import (
    TAU_MAX,
    TAU_MIN,
    criterion_weights,
    invert_w0,
    kkt_residual,
    jain_index,
    normalized,
    optimize,
    stationarity_residual,
)
from wlanfair.params import ClassPartition, Scenario, StationConfig, frame_durations, collision_duration, scenario_a, scenario_b
from wlanfair.reproduce import evaluate, fig2_rates, fig2_scenario
from wlanfair.sim import SimConfig, replicate
from wlanfair.slot import p_collision_class, p_success, p_transmit

from chain_mc import chain_occupancy
from conftest import enumerate_slot, random_scenario, record

DURATION = 60.0
REPS = 10


def within(x, target, rel=None, abs_=None):
    tol = target * rel if rel is not None else abs_
    return abs(x - target) <= tol


def test_criterion_1_scenario_a_dcf():
    sc = scenario_a()
    t0 = time.perf_counter()
    eq = solve_equilibrium(sc)
    t_model = time.perf_counter() - t0
    t0 = time.perf_counter()
    rep = replicate(SimConfig(sc, duration=DURATION, seed=1, replications=REPS))
    t_sim = time.perf_counter() - t0
    m_s, m_j = eq.aggregate / 1e6, jain_index(normalized(eq.throughput, sc))
    s_s, s_j = rep.aggregate / 1e6, jain_index(normalized(rep.throughput, sc))
    ok = (within(m_s, 1.89, rel=0.15) and within(s_s, 1.89, rel=0.15)
          and within(m_j, 0.460, abs_=0.08) and within(s_j, 0.460, abs_=0.08)
          and t_model < 1.0 and t_sim < 120.0)
    assert record(1, ok, f"A/DCF model S={m_s:.3f} J={m_j:.3f}, sim S={s_s:.3f} J={s_j:.3f} "
                         f"(target 1.89+-15%, 0.460+-0.08); model {t_model:.2f}s, sim {t_sim:.1f}s")


def test_criterion_2_scenario_a_mlpf():
    sc = scenario_a()
    res = {k: evaluate(sc, k, DURATION, REPS, seed=1) for k in ("dcf", "lpf", "mlpf")}
    mlpf = res["mlpf"]
    s, j = mlpf.aggregate("sim") / 1e6, mlpf.jain("sim")
    order = mlpf.aggregate("sim") > res["lpf"].aggregate("sim") and mlpf.aggregate("sim") > res["dcf"].aggregate("sim")
    ok = within(s, 4.69, rel=0.15) and within(j, 0.9317, abs_=0.08) and order
    assert record(2, ok, f"A/MLPF W0*={[int(w) for w in mlpf.allocation.w0_int]} sim S={s:.3f} J={j:.4f} "
                         f"(target 4.69+-15%, 0.9317+-0.08); S LPF={res['lpf'].aggregate('sim') / 1e6:.3f} "
                         f"DCF={res['dcf'].aggregate('sim') / 1e6:.3f}")


def test_criterion_3_scenario_b_lpf():
    sc = scenario_b()
    res = {k: evaluate(sc, k, DURATION, REPS, seed=1) for k in ("dcf", "pf", "lpf")}
    ok = True
    parts = []
    for src in ("model", "sim"):
        s = {k: r.aggregate(src) / 1e6 for k, r in res.items()}
        ok &= s["lpf"] >= s["pf"] and s["lpf"] >= s["dcf"]
        parts.append(f"{src} LPF={s['lpf']:.3f} PF={s['pf']:.3f} DCF={s['dcf']:.3f}")
    assert record(3, ok, "B (assumed rates) " + "; ".join(parts))


def crossing(lams, slow, fast):
    """First slow-station rate where its throughput reaches the fast stations'."""
    d = slow - fast
    idx = np.flatnonzero(d >= 0)
    if len(idx) == 0 or idx[0] == 0:
        return None
    k = idx[0]
    x0, x1 = np.log(lams[k - 1]), np.log(lams[k])
    return float(np.exp(x0 + (x1 - x0) * (-d[k - 1]) / (d[k] - d[k - 1])))


def test_criterion_4_fig2_shape():
    lams = fig2_rates(20)
    reps = 5
    dcf_sim, dcf_se, dcf_model, agg = [], [], [], {"dcf": [], "mlpf": []}
    for lam in lams:
        sc = fig2_scenario(lam)
        d = evaluate(sc, "dcf", DURATION, reps, seed=1)
        m = evaluate(sc, "mlpf", DURATION, reps, seed=1)
        dcf_sim.append(d.sim.throughput)
        dcf_se.append(d.sim.stderr["throughput"])
        dcf_model.append(d.model.throughput)
        agg["dcf"].append((d.aggregate("model"), d.aggregate("sim")))
        agg["mlpf"].append((m.aggregate("model"), m.aggregate("sim")))
    S = np.array(dcf_sim)
    M = np.array(dcf_model)
    x = crossing(lams, S[:, 2], S[:, :2].mean(axis=1))
    x_model = crossing(lams, M[:, 2], M[:, :2].mean(axis=1))
    cross_ok = x is not None and within(x, 500.0, rel=0.10)
    tail = lams >= 500
    flat_ok = True
    for s in range(3):
        fit = linregress(np.log(lams[tail]), S[tail, s])
        flat_ok &= abs(fit.slope) <= 3 * fit.stderr
    a_d, a_m = np.array(agg["dcf"]), np.array(agg["mlpf"])
    beat_ok = bool(np.all(a_m[:, 1] > a_d[:, 1]) and np.all(a_m[:, 0] > a_d[:, 0]))
    ok = cross_ok and flat_ok and beat_ok
    xs = "none" if x is None else f"{x:.0f}"
    xm = "none" if x_model is None else f"{x_model:.0f}"
    assert record(4, ok, f"DCF crossing at lambda_slow={xs} pkt/s sim ({xm} model; target 500+-10%) "
                         f"[{'ok' if cross_ok else 'MISS'}], flat for lambda>=500 [{'ok' if flat_ok else 'MISS'}], "
                         f"MLPF>DCF on all {len(lams)} points [{'ok' if beat_ok else 'MISS'}]")


def test_criterion_5_slot_oracle(rng):
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        tau = rng.uniform(0, 0.95, n)
        labels = rng.integers(0, n, n)
        part = ClassPartition.from_groups([list(np.flatnonzero(labels == k)) for k in np.unique(labels)])
        idle, succ, internal, external = enumerate_slot(tau, part)
        errs = [abs((1 - p_transmit(tau)) - idle)]
        errs += [abs(p_success(tau, s) - succ[s]) for s in range(n)]
        for d in range(part.n_c):
            i, e, _ = p_collision_class(tau, part, d)
            errs += [abs(i - internal[d]), abs(e - external[d])]
        worst = max(worst, max(errs))
    assert record(5, worst <= 1e-12, f"200 random tau/partitions (N<=6): worst term error {worst:.2e} (limit 1e-12)")


def test_criterion_6_round_trip(rng):
    worst_rel, worst_res = 0.0, 0.0
    for _ in range(50):
        sc = random_scenario(rng, w0_int=False)
        eq = solve_equilibrium(sc)
        w0 = invert_w0(eq.tau, sc)
        ref = np.array([st.w0 for st in sc.stations])
        worst_rel = max(worst_rel, float(np.max(np.abs(w0 - ref) / ref)))
        worst_res = max(worst_res, eq.residual)
    ok = worst_rel <= 1e-4 and worst_res <= 1e-10
    assert record(6, ok, f"50 random scenarios: worst W0 round-trip error {worst_rel:.2e} (limit 1e-4), "
                         f"worst residual {worst_res:.2e} (limit 1e-10)")


def grid_utility(sc, weights, points=2000):
    """Best weighted log-utility of two stations on a log-spaced tau grid.

    Written out in closed form for two stations and evaluated on the whole
    grid at once; independent of the library's slot and window code.
    """
    phy = sc.phy
    a, b = sc.stations
    g = np.geomspace(TAU_MIN, TAU_MAX, points)
    t1, t2 = np.meshgrid(g, g, indexing="ij")
    ts1, ts2 = frame_durations(a, phy)[0], frame_durations(b, phy)[0]
    tc = max(collision_duration(a, phy), collision_duration(b, phy))
    s1, s2 = t1 * (1 - t2), t2 * (1 - t1)
    t_av = (1 - t1) * (1 - t2) * phy.sigma + s1 * ts1 + s2 * ts2 + t1 * t2 * tc
    S1 = s1 * (1 - a.pe) * 8 * a.payload / t_av
    S2 = s2 * (1 - b.pe) * 8 * b.payload / t_av
    U = weights[0] * np.log(S1) + weights[1] * np.log(S2)

    def slack(t_self, t_other, st, ts_other):
        p = 1 - (1 - t_other) * (1 - st.pe)
        excl = (1 - t_other) * phy.sigma + t_other * ts_other
        q = -np.expm1(-st.lambda_ * t_av)
        p0 = -np.expm1(-st.lambda_ * excl)
        geo = sum((2 * p) ** i for i in range(phy.m))
        return 2 / t_self - 2 * (1 - p) * (1 - q) / p0 - 2 - p * geo

    feasible = (slack(t1, t2, a, ts2) >= 0) & (slack(t2, t1, b, ts1) >= 0)
    return float(np.max(np.where(feasible, U, -np.inf)))


def test_criterion_7_optimizer_vs_grid(rng):
    worst_gap, worst_r, binding = 0.0, 0.0, 0
    for k in range(10):
        sc = random_scenario(rng, n=2)
        crit = ("pf", "lpf", "mlpf")[k % 3]
        res = optimize(sc, crit)
        u_grid = grid_utility(sc, res.weights)
        worst_gap = max(worst_gap, abs(res.utility - u_grid) / abs(u_grid))
        if res.window_limited:
            # a binding W0 >= 1 constraint couples the coordinates
            r = kkt_residual(res, sc)
            binding += 1
        else:
            r = stationarity_residual(res.tau_star, sc, res.weights)[res.interior()]
        if r.size:
            worst_r = max(worst_r, float(np.max(np.abs(r))))
    ok = worst_gap <= 1e-4 and worst_r <= 1e-3
    assert record(7, ok, f"10 random 2-station scenarios: worst |U - U_grid|/|U| {worst_gap:.2e} (limit 1e-4), "
                         f"worst first-order residual {worst_r:.2e} (limit 1e-3; KKT form in the "
                         f"{binding} scenarios where W0 >= 1 binds)")


def _sc(*rows):
    return Scenario(tuple(StationConfig(k + 1, *r) for k, r in enumerate(rows)))


# Saturated means saturated for the model too: q = 1 - exp(-lambda T_av) must
# be ~1, and with T_av ~ 100 us that needs lambda >> 1e4 pkt/s.
SAT = 1e5
REGRESSION_SUITE = {
    # saturated
    "sat1": (True, _sc((SAT, 11e6))),
    "sat2": (True, _sc((SAT, 11e6), (SAT, 11e6))),
    "sat5": (True, _sc(*[(SAT, 11e6)] * 5)),
    "sat_mixed": (True, _sc((SAT, 11e6), (SAT, 5.5e6), (SAT, 2e6), (SAT, 1e6))),
    "sat_pe": (True, _sc((SAT, 11e6, 1028, 32, 0.1), (SAT, 11e6))),
    "sat_w0": (True, _sc((SAT, 2e6, 500, 16), (SAT, 2e6, 500, 64))),
    # non-saturated
    "A": (False, scenario_a()),
    "B": (False, scenario_b()),
    "light1": (False, _sc((100, 11e6))),
    "light3": (False, _sc((50, 11e6), (100, 5.5e6), (20, 1e6))),
    "mid3": (False, _sc((200, 11e6), (200, 11e6), (50, 1e6))),
    "mid_w0": (False, _sc((300, 5.5e6, 1028, 16), (300, 5.5e6, 1028, 16), (300, 5.5e6, 1028, 16))),
}


def test_criterion_8_model_vs_sim():
    misses = []
    worst = {True: 0.0, False: 0.0}
    for name, (sat, sc) in REGRESSION_SUITE.items():
        eq = solve_equilibrium(sc)
        rep = replicate(SimConfig(sc, duration=DURATION, seed=1, replications=REPS))
        err = float(np.max(np.abs(eq.throughput - rep.throughput) / rep.throughput))
        worst[sat] = max(worst[sat], err)
        if err > (0.05 if sat else 0.08):
            misses.append(f"{name} {err:.1%}")
    ok = not misses
    assert record(8, ok, f"12-scenario suite: worst saturated {worst[True]:.1%} (limit 5%), "
                         f"worst non-saturated {worst[False]:.1%} (limit 8%); "
                         f"misses: {', '.join(misses) or 'none'}")


CHAIN_SETS = [
    (16, 5, 0.2, 0.3, 0.1),
    (32, 5, 0.05, 0.1, 0.2),
    (8, 3, 0.4, 0.7, 0.3),
    (4, 6, 0.6, 0.9, 0.5),
    (16, 4, 0.1, 0.2, 0.25),
]


def test_criterion_9_chain_validation():
    worst_occ, worst_tau = 0.0, 0.0
    for k, args in enumerate(CHAIN_SETS):
        w0, m, p, q, p0 = args
        pi = chain.chain_stationary(*args)
        occ = chain_occupancy(*args, steps=10_000_000, seed=k + 1)
        worst_occ = max(worst_occ, float(np.max(np.abs(occ - pi))))
        worst_tau = max(worst_tau, abs(chain.chain_tau(pi, w0, m) - chain.tau_from_chain(pi[-1], p, w0, m)))
    ok = worst_occ <= 1e-3 and worst_tau <= 1e-9
    assert record(9, ok, f"5 chains x 1e7 steps: worst occupancy error {worst_occ:.2e} (limit 1e-3), "
                         f"closed-form tau error {worst_tau:.2e} (limit 1e-9)")
