"""Scenario description: stations, PHY/MAC timing and duration classes.

Defaults follow the IEEE 802.11b long-preamble DSSS parameter set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence


class ScenarioError(ValueError):
    """Raised when a scenario violates one of its invariants."""


@dataclass(frozen=True)
class StationConfig:
    """One contending station.

    ``lambda_`` is the Poisson packet arrival rate (packets/s), ``bit_rate``
    the PHY data rate (bit/s), ``payload`` the MSDU size in bytes, ``w0`` the
    minimum contention window in slots and ``pe`` the packet error rate.
    """

    id: int
    lambda_: float
    bit_rate: float
    payload: int = 1028
    w0: float = 32
    pe: float = 0.0

    def replace(self, **changes) -> "StationConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class PhyTimingParams:
    sigma: float = 20e-6
    sifs: float = 10e-6
    difs: float = 50e-6
    phy_hdr: float = 192e-6
    mac_hdr: int = 28
    ack_size: int = 14
    ack_rate: float = 1e6
    m: int = 5
    queue_size: int = 1

    @property
    def t_ack(self) -> float:
        return self.phy_hdr + 8.0 * self.ack_size / self.ack_rate


@dataclass(frozen=True)
class DurationClass:
    members: tuple[int, ...]  # 0-based station positions
    t_s: float
    t_e: float
    t_c: float

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClassPartition:
    """Stations grouped by channel-occupancy duration, slowest class first."""

    classes: tuple[DurationClass, ...]

    @property
    def n_c(self) -> int:
        return len(self.classes)

    def class_of(self, pos: int) -> int:
        for d, cls in enumerate(self.classes):
            if pos in cls.members:
                return d
        raise KeyError(pos)

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[int]], durations: Sequence[float] | None = None):
        """Build a partition from explicit member groups, slowest first.

        Durations default to a strictly decreasing sequence; useful for
        probability-only checks where the times do not matter.
        """
        if durations is None:
            durations = [float(len(groups) - d) for d in range(len(groups))]
        return cls(tuple(DurationClass(tuple(g), t, t, t) for g, t in zip(groups, durations)))


@dataclass(frozen=True)
class Scenario:
    stations: tuple[StationConfig, ...]
    phy: PhyTimingParams = field(default_factory=PhyTimingParams)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))

    @property
    def n(self) -> int:
        return len(self.stations)

    def with_w0(self, w0: Sequence[float]) -> "Scenario":
        sts = tuple(st.replace(w0=float(w)) for st, w in zip(self.stations, w0))
        return Scenario(sts, self.phy, self.label)

    def without(self, pos: int) -> "Scenario":
        """The same network with the station at 0-based position ``pos`` removed.

        Station ids are renumbered so the result is still a valid scenario.
        """
        rest = [st for i, st in enumerate(self.stations) if i != pos]
        rest = tuple(st.replace(id=k + 1) for k, st in enumerate(rest))
        return Scenario(rest, self.phy, self.label)


def validate_scenario(sc: Scenario) -> Scenario:
    """Check every invariant and return ``sc`` unchanged.

    The first violation is reported as a ScenarioError naming the station id
    and field.
    """
    phy = sc.phy
    for name in ("sigma", "sifs", "difs", "phy_hdr", "ack_rate"):
        if not getattr(phy, name) > 0:
            raise ScenarioError(f"phy.{name} must be > 0")
    if phy.mac_hdr < 0 or phy.ack_size <= 0:
        raise ScenarioError("phy.mac_hdr/ack_size out of range")
    if phy.m < 1:
        raise ScenarioError("phy.m must be >= 1")
    if phy.queue_size != 1:
        raise ScenarioError("phy.queue_size must be 1")
    if not sc.stations:
        raise ScenarioError("no stations")
    ids = [st.id for st in sc.stations]
    if ids != list(range(1, len(ids) + 1)):
        raise ScenarioError(f"station ids must be unique and contiguous from 1, got {ids}")
    for st in sc.stations:
        if not st.lambda_ > 0:
            raise ScenarioError(f"station {st.id}: lambda out of range")
        if not st.bit_rate > 0:
            raise ScenarioError(f"station {st.id}: bit_rate out of range")
        if st.payload < 1:
            raise ScenarioError(f"station {st.id}: payload out of range")
        if not st.w0 >= 1:
            raise ScenarioError(f"station {st.id}: w0 out of range")
        if not 0 <= st.pe < 1:
            raise ScenarioError(f"station {st.id}: pe out of range")
    return sc


def data_airtime(st: StationConfig, phy: PhyTimingParams) -> float:
    return phy.phy_hdr + 8.0 * (phy.mac_hdr + st.payload) / st.bit_rate


def frame_durations(st: StationConfig, phy: PhyTimingParams) -> tuple[float, float]:
    """Channel occupancy (T_S, T_E) in seconds for one frame of ``st``.

    A failed frame waits an ACK timeout of SIFS + ACK before DIFS, so both
    durations coincide.
    """
    t_busy = data_airtime(st, phy) + phy.sifs + phy.t_ack + phy.difs
    return t_busy, t_busy


def collision_duration(st: StationConfig, phy: PhyTimingParams) -> float:
    return data_airtime(st, phy) + phy.sifs + phy.t_ack + phy.difs


def _ns(t: float) -> int:
    return round(t * 1e9)


def derive_classes(sc: Scenario) -> ClassPartition:
    """Group stations with equal success duration (compared at 1 ns)."""
    groups: dict[int, list[int]] = {}
    for pos, st in enumerate(sc.stations):
        groups.setdefault(_ns(frame_durations(st, sc.phy)[0]), []).append(pos)
    classes = []
    for key in sorted(groups, reverse=True):
        members = tuple(groups[key])
        first = sc.stations[members[0]]
        t_s, t_e = frame_durations(first, sc.phy)
        classes.append(DurationClass(members, t_s, t_e, collision_duration(first, sc.phy)))
    return ClassPartition(tuple(classes))


def scenario_a() -> Scenario:
    """Two 11 Mbit/s stations at 500 pkt/s and one 1 Mbit/s station at 1000 pkt/s."""
    return Scenario(
        (
            StationConfig(1, 500.0, 11e6),
            StationConfig(2, 500.0, 11e6),
            StationConfig(3, 1000.0, 1e6),
        ),
        label="A",
    )


def scenario_b() -> Scenario:
    """Scenario A with the fast stations loaded above the slow one.

    The fast-station rate of 1000 pkt/s and slow-station rate of 500 pkt/s
    are a calibrated assumption, not published values.
    """
    return Scenario(
        (
            StationConfig(1, 1000.0, 11e6),
            StationConfig(2, 1000.0, 11e6),
            StationConfig(3, 500.0, 1e6),
        ),
        label="B (calibrated assumption)",
    )
