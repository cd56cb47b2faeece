"""Monte Carlo occupancy of the per-station backoff chain.

Countdown runs are deterministic, so each entry into (i, k) is booked as
k + 1 steps in one go, and idle sojourns are drawn as geometric lengths.
"""

import numpy as np


def chain_occupancy(w0, m, p_eq, q, p_i0, steps, seed=0):
    rng = np.random.default_rng(seed)
    wins = [w0 * 2**i for i in range(m + 1)]
    offs = np.concatenate([[0], np.cumsum(wins)])
    n = int(offs[-1]) + 1
    diff = np.zeros(n + 1)
    idle_steps = 0
    taken = 0
    block = 1 << 16
    u = rng.random(block).tolist()
    ui = 0

    def uniform():
        nonlocal u, ui
        if ui == block:
            u = rng.random(block).tolist()
            ui = 0
        ui += 1
        return u[ui - 1]

    stage = None  # start idle
    while taken < steps:
        if stage is None:
            g = int(rng.geometric(p_i0)) if p_i0 > 0 else steps
            g = min(g, steps - taken)
            idle_steps += g
            taken += g
            stage = 0
        else:
            k = int(uniform() * wins[stage])
            k = min(k, steps - taken - 1)
            base = offs[stage]
            diff[base] += 1
            diff[base + k + 1] -= 1
            taken += k + 1
            r = uniform()
            if r < p_eq:
                stage = min(stage + 1, m)
            elif r < p_eq + (1 - p_eq) * q:
                stage = 0
            else:
                stage = None
    occ = np.cumsum(diff)[:n]
    occ[-1] = idle_steps
    return occ / taken
