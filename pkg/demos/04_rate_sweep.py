"""Throughput as the slow station's packet rate grows.

Model-only by default; pass --sim to add short simulations.
"""

import sys

from wlanfair.reproduce import fig2_rows

simulate = "--sim" in sys.argv
rows = list(fig2_rows(points=12, duration=20.0, reps=3, simulate=simulate, setups=("dcf", "mlpf")))

print(f"{'setup':>5} {'lambda':>7} " + " ".join(f"{'S' + str(k) + ' model':>9}" for k in (1, 2, 3)))
for i in range(0, len(rows), 3):
    trio = rows[i:i + 3]
    line = f"{trio[0]['setup']:>5} {trio[0]['lambda_slow']:>7.0f} "
    line += " ".join(f"{r['model_S_mbps']:>9.3f}" for r in trio)
    if simulate:
        line += "   sim " + " ".join(f"{r['sim_S_mbps']:.3f}" for r in trio)
    print(line)
