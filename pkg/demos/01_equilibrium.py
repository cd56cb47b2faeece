"""Solve the analytical equilibrium of a mixed-rate network.

A 1 Mbit/s station drags the two 11 Mbit/s stations down to roughly its own
throughput: every one of its frames holds the channel about seven times as
long as a fast frame.
"""

from wlanfair import Scenario, jain_index, scenario_a, solve_equilibrium
from wlanfair.fairness import normalized

sc = scenario_a()
eq = solve_equilibrium(sc)

print(f"converged in {eq.iterations} iterations, residual {eq.residual:.1e}")
print(f"{'sta':>3} {'rate':>6} {'tau':>8} {'P_col':>7} {'P(idle)':>8} {'S Mb/s':>7} {'S/R':>6}")
for st, state, s in zip(sc.stations, eq.per_station, eq.throughput):
    print(f"{st.id:>3} {st.bit_rate / 1e6:>6g} {state.tau:>8.4f} {state.p_col:>7.4f} "
          f"{state.b_i:>8.4f} {s / 1e6:>7.3f} {s / st.bit_rate:>6.3f}")

print(f"aggregate {eq.aggregate / 1e6:.3f} Mbit/s, mean slot {eq.t_av * 1e6:.1f} us")
print(f"Jain on normalized throughput {jain_index(normalized(eq.throughput, sc)):.3f}")

# Saturating the fast stations changes little: the slow station already
# sets the pace.
busy = Scenario(tuple(st.replace(lambda_=5000.0) for st in sc.stations), sc.phy, "saturated")
print(f"saturated aggregate {solve_equilibrium(busy).aggregate / 1e6:.3f} Mbit/s")
