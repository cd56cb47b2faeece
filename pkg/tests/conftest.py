import itertools

import numpy as np
import pytest

from wlanfair.params import ClassPartition, Scenario, StationConfig

RATES = (1e6, 2e6, 5.5e6, 11e6)


def random_scenario(rng, n=None, w0_int=True, saturated=None) -> Scenario:
    n = n or int(rng.integers(1, 6))
    stations = []
    for k in range(n):
        lam = float(rng.uniform(5, 2000)) if saturated is None else (1e5 if saturated else float(rng.uniform(5, 80)))
        w0 = int(rng.choice([4, 8, 16, 32, 64])) if w0_int else float(rng.uniform(2, 100))
        stations.append(StationConfig(k + 1, lam, float(rng.choice(RATES)), int(rng.integers(100, 1500)), w0,
                                      float(rng.choice([0.0, 0.0, 0.05, 0.2]))))
    return Scenario(tuple(stations))


def enumerate_slot(tau, part: ClassPartition):
    """Brute-force per-class collision mass and success mass over all 2^N patterns.

    A collision is charged to the slowest (lowest index) class among the
    transmitters; it is internal when every transmitter is in that class.
    """
    n = len(tau)
    internal = np.zeros(part.n_c)
    external = np.zeros(part.n_c)
    success = np.zeros(n)
    idle = 0.0
    for pattern in itertools.product((0, 1), repeat=n):
        p = np.prod([tau[s] if b else 1 - tau[s] for s, b in enumerate(pattern)])
        tx = [s for s, b in enumerate(pattern) if b]
        if not tx:
            idle += p
        elif len(tx) == 1:
            success[tx[0]] += p
        else:
            classes = {part.class_of(s) for s in tx}
            d = min(classes)
            if len(classes) == 1:
                internal[d] += p
            else:
                external[d] += p
    return idle, success, internal, external


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
