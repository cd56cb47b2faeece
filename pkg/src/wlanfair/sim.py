"""Slot-synchronous discrete-event simulator of basic-access DCF.

Time advances in virtual slots.  When no backlogged station has a zero
backoff counter an idle slot of sigma elapses and every backlogged station
decrements; otherwise the transmitters occupy the channel for a success,
channel-error or collision period, during which counters are frozen.

A station's single-packet queue holds its head-of-line frame while it backs
off.  While that frame is on air the queue slot is free and one arrival can
be stored for service after completion; every other arrival finding the
station backlogged is dropped and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import Scenario, collision_duration, frame_durations, validate_scenario

RNG_ALGORITHM = "numpy.PCG64 seeded by splitmix64(seed + k * 0x9E3779B97F4A7C15)"

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def replication_seed(seed: int, k: int) -> int:
    return splitmix64((seed + k * 0x9E3779B97F4A7C15) & _MASK)


class _Uniforms:
    """Scalar uniforms served from blocks of a numpy Generator."""

    def __init__(self, seed: int, block: int = 8192):
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._block = block
        self._buf: list[float] = []
        self._i = 0

    def poisson(self, mean: float) -> int:
        return int(self._gen.poisson(mean))

    def __call__(self) -> float:
        if self._i >= len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    duration: float = 60.0
    seed: int = 1
    warmup: float = 1.0
    replications: int = 1

    def __post_init__(self):
        if not self.duration > self.warmup >= 0:
            raise ValueError("need duration > warmup >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for st in self.scenario.stations:
            if float(st.w0) != int(st.w0):
                raise ValueError(f"station {st.id}: simulator needs an integer W0, got {st.w0}")


METRICS = (
    "throughput",
    "generated",
    "delivered",
    "dropped",
    "attempts",
    "collisions",
    "errors",
    "collision_fraction",
    "error_fraction",
    "idle_fraction",
)


@dataclass
class RunStats:
    """Raw counters of one replication, restricted to the post-warmup window."""

    n: int
    m: int
    elapsed: float = 0.0
    generated: np.ndarray = None
    delivered: np.ndarray = None
    dropped: np.ndarray = None
    attempts: np.ndarray = None
    collisions: np.ndarray = None
    errors: np.ndarray = None
    idle_time: np.ndarray = None
    bits: np.ndarray = None
    backlog: np.ndarray = None
    slots: dict = field(default_factory=dict)
    redraws: np.ndarray = None  # [station, stage] backoff draws
    redraw_max: np.ndarray = None  # largest counter drawn per [station, stage]

    def __post_init__(self):
        for name in ("generated", "delivered", "dropped", "attempts", "collisions", "errors", "idle_time", "bits", "backlog"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.n))
        if self.redraws is None:
            self.redraws = np.zeros((self.n, self.m + 1), dtype=np.int64)
            self.redraw_max = np.full((self.n, self.m + 1), -1, dtype=np.int64)
        for k in ("idle", "success", "error", "collision"):
            self.slots.setdefault(k, 0)

    def metrics(self) -> dict[str, np.ndarray]:
        att = np.maximum(self.attempts, 1)
        return {
            "throughput": self.bits / self.elapsed,
            "generated": self.generated,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "attempts": self.attempts,
            "collisions": self.collisions,
            "errors": self.errors,
            "collision_fraction": self.collisions / att,
            "error_fraction": self.errors / att,
            "idle_fraction": self.idle_time / self.elapsed,
        }


def simulate_once(sc: Scenario, duration: float, warmup: float, seed: int) -> tuple[RunStats, RunStats]:
    """Run one replication; returns (post-warmup stats, whole-run stats)."""
    validate_scenario(sc)
    phy = sc.phy
    n, m, sigma = sc.n, phy.m, phy.sigma
    uni = _Uniforms(seed)
    lam = [st.lambda_ for st in sc.stations]
    pe = [st.pe for st in sc.stations]
    t_s = [frame_durations(st, phy)[0] for st in sc.stations]
    t_e = [frame_durations(st, phy)[1] for st in sc.stations]
    t_c = [collision_duration(st, phy) for st in sc.stations]
    bits = [8.0 * st.payload for st in sc.stations]
    wins = [[int(st.w0) << i for i in range(m + 1)] for st in sc.stations]
    cap = phy.queue_size

    hol = [False] * n
    queued = [0] * n
    stage = [0] * n
    counter = [0] * n
    idle_since = [0.0] * n
    next_arr = [-math.log(1.0 - uni()) / lam[s] for s in range(n)]

    tot = RunStats(n, m)
    snap = None
    t_warm = 0.0
    redraws, redraw_max = tot.redraws, tot.redraw_max

    def draw(s):
        w = wins[s][stage[s]]
        c = int(uni() * w)
        counter[s] = c
        redraws[s, stage[s]] += 1
        if c > redraw_max[s, stage[s]]:
            redraw_max[s, stage[s]] = c

    on_air = [False] * n

    def arrivals_until(now):
        for s in range(n):
            if next_arr[s] > now:
                continue
            ta = next_arr[s]
            tot.generated[s] += 1
            if not hol[s]:
                hol[s] = True
                stage[s] = 0
                draw(s)
                tot.idle_time[s] += ta - idle_since[s]
            elif on_air[s] and queued[s] < cap:
                queued[s] += 1
            else:
                tot.dropped[s] += 1
            # the single buffer slot is taken now, so every further arrival
            # in (ta, now] is dropped; book them as one Poisson count
            k = uni.poisson(lam[s] * (now - ta))
            tot.generated[s] += k
            tot.dropped[s] += k
            next_arr[s] = now - math.log(1.0 - uni()) / lam[s]

    def snapshot(now):
        c = RunStats(n, m)
        for name in ("generated", "delivered", "dropped", "attempts", "collisions", "errors", "bits"):
            setattr(c, name, getattr(tot, name).copy())
        c.idle_time = tot.idle_time.copy() + np.array([now - idle_since[s] if not hol[s] else 0.0 for s in range(n)])
        c.slots = dict(tot.slots)
        c.redraws = tot.redraws.copy()
        c.elapsed = now
        return c

    t = 0.0
    if warmup == 0:
        snap = snapshot(0.0)
    while t < duration:
        arrivals_until(t)
        if snap is None and t >= warmup:
            snap = snapshot(t)
            t_warm = t
        tx = [s for s in range(n) if hol[s] and counter[s] == 0]
        if not tx:
            k = min((counter[s] for s in range(n) if hol[s]), default=None)
            ta = min((next_arr[s] for s in range(n) if not hol[s]), default=math.inf)
            j = max(1, math.ceil((ta - t) / sigma)) if ta < math.inf else None
            if k is None and j is None:
                raise RuntimeError("no backlog and no pending arrivals")
            steps = min(x for x in (k, j) if x is not None)
            if snap is None and t + steps * sigma > warmup:
                steps = max(1, min(steps, math.ceil((warmup - t) / sigma)))
            for s in range(n):
                if hol[s]:
                    counter[s] -= steps
            tot.slots["idle"] += steps
            t += steps * sigma
            continue

        for s in tx:
            tot.attempts[s] += 1
        if len(tx) == 1:
            s = tx[0]
            failed = pe[s] > 0 and uni() < pe[s]
            dur = t_e[s] if failed else t_s[s]
            kind = "error" if failed else "success"
        else:
            failed = True
            dur = max(t_c[s] for s in tx)
            kind = "collision"
        tot.slots[kind] += 1
        for s in tx:
            on_air[s] = True
        t += dur
        arrivals_until(t)
        for s in tx:
            on_air[s] = False
        for s in tx:
            if not failed:
                tot.delivered[s] += 1
                tot.bits[s] += bits[s]
                stage[s] = 0
                if queued[s]:
                    queued[s] -= 1
                    draw(s)
                else:
                    hol[s] = False
                    idle_since[s] = t
            else:
                if kind == "collision":
                    tot.collisions[s] += 1
                else:
                    tot.errors[s] += 1
                stage[s] = min(stage[s] + 1, m)
                draw(s)

    if snap is None:
        snap = snapshot(t)
        t_warm = t
    tot.backlog = np.array([float(hol[s]) + queued[s] for s in range(n)])
    tot.idle_time = tot.idle_time + np.array([t - idle_since[s] if not hol[s] else 0.0 for s in range(n)])
    tot.elapsed = t
    post = RunStats(n, m)
    for name in ("generated", "delivered", "dropped", "attempts", "collisions", "errors", "bits", "idle_time"):
        setattr(post, name, getattr(tot, name) - getattr(snap, name))
    post.slots = {k: tot.slots[k] - snap.slots[k] for k in tot.slots}
    post.redraws = tot.redraws - snap.redraws
    post.redraw_max = tot.redraw_max.copy()
    post.backlog = tot.backlog
    post.elapsed = t - t_warm
    return post, tot


@dataclass(frozen=True)
class SimReport:
    """Across-replication means and standard errors (None for one replication)."""

    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray] | None
    slots: dict[str, float]
    replications: int
    seed: int
    rng: str = RNG_ALGORITHM
    raw: tuple[RunStats, ...] = ()

    @property
    def throughput(self) -> np.ndarray:
        return self.mean["throughput"]

    @property
    def aggregate(self) -> float:
        return float(self.mean["throughput"].sum())

    @property
    def aggregate_stderr(self) -> float | None:
        if len(self.raw) < 2:
            return None
        agg = np.array([r.metrics()["throughput"].sum() for r in self.raw])
        return float(agg.std(ddof=1) / math.sqrt(len(agg)))

    def rows(self):
        """(replication, station, metric, value) rows of the raw results."""
        for k, r in enumerate(self.raw):
            for name, vals in r.metrics().items():
                for s, v in enumerate(vals):
                    yield k, s + 1, name, float(v)


def run_sim(cfg: SimConfig, replication: int = 0) -> RunStats:
    post, _ = simulate_once(cfg.scenario, cfg.duration, cfg.warmup, replication_seed(cfg.seed, replication))
    return post


def aggregate_runs(runs, seed: int) -> SimReport:
    runs = tuple(runs)
    per = [r.metrics() for r in runs]
    mean = {k: np.mean([p[k] for p in per], axis=0) for k in METRICS}
    stderr = None
    if len(runs) > 1:
        stderr = {k: np.std([p[k] for p in per], axis=0, ddof=1) / math.sqrt(len(runs)) for k in METRICS}
    slots = {k: float(np.mean([r.slots[k] for r in runs])) for k in runs[0].slots}
    return SimReport(mean, stderr, slots, len(runs), seed, raw=runs)


def replicate(cfg: SimConfig) -> SimReport:
    """Run ``cfg.replications`` independent replications in index order."""
    return aggregate_runs((run_sim(cfg, k) for k in range(cfg.replications)), cfg.seed)
