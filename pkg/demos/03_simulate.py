"""Check the model against the slot-level DCF simulator.

Runs ten 60 s replications of scenario A under standard DCF and under the
MLPF windows, and prints both predictions side by side.
"""

import numpy as np

from wlanfair import SimConfig, optimize, replicate, scenario_a, solve_equilibrium

sc = scenario_a()
mlpf = optimize(sc, "mlpf")

for name, cfg in (("DCF", sc), ("MLPF", sc.with_w0(mlpf.w0_int))):
    model = solve_equilibrium(cfg)
    rep = replicate(SimConfig(cfg, duration=60.0, seed=1, replications=10))
    print(f"\n{name}  W0 = {[int(st.w0) for st in cfg.stations]}")
    for s, st in enumerate(cfg.stations):
        print(f"  station {st.id}: model {model.throughput[s] / 1e6:.3f}  "
              f"sim {rep.throughput[s] / 1e6:.3f} +- {rep.stderr['throughput'][s] / 1e6:.3f} Mbit/s")
    print(f"  aggregate: model {model.aggregate / 1e6:.3f}  sim {rep.aggregate / 1e6:.3f} Mbit/s")
    print(f"  collisions per attempt (sim) {np.round(rep.mean['collision_fraction'], 3)}")
    print(f"  slots per replication {rep.slots}")
