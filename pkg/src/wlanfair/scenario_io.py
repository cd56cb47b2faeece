"""Read and write scenario files.

The format is line oriented::

    # comment
    label = my network
    [phy]
    sigma = 20e-6
    m = 5
    [station]
    lambda_pps = 500
    bit_rate_bps = 11e6
    payload_bytes = 1028
    w0 = 32
    pe = 0

``[phy]`` is optional (802.11b defaults), ``[station]`` repeats once per
station and stations are numbered in file order.  Units are SI.
"""

from __future__ import annotations

import hashlib
from dataclasses import fields
from pathlib import Path

from .params import PhyTimingParams, Scenario, ScenarioError, StationConfig, validate_scenario

STATION_KEYS = {
    "lambda_pps": ("lambda_", float),
    "bit_rate_bps": ("bit_rate", float),
    "payload_bytes": ("payload", int),
    "w0": ("w0", float),
    "pe": ("pe", float),
}
PHY_KEYS = {f.name: (f.name, int if f.type in ("int", int) else float) for f in fields(PhyTimingParams)}
REQUIRED_STATION = ("lambda_pps", "bit_rate_bps")


class ScenarioParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<string>'}:{line}: " if line is not None else ""
        super().__init__(where + msg)
        self.line = line


def _number(text: str, kind, lineno: int):
    try:
        if kind is int:
            v = float(text)
            if not v.is_integer():
                raise ValueError
            return int(v)
        return float(text)
    except ValueError:
        raise ScenarioParseError(f"expected a number, got {text!r}", lineno) from None


def parse_scenario(text: str, path: str | None = None) -> Scenario:
    label = ""
    phy: dict = {}
    stations: list[dict] = []
    stations_at: list[int] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioParseError(f"malformed section header {raw.strip()!r}", lineno, path)
            section = line[1:-1].strip().lower()
            if section == "station":
                stations.append({})
                stations_at.append(lineno)
            elif section != "phy":
                raise ScenarioParseError(f"unknown section [{section}]", lineno, path)
            continue
        if "=" not in line:
            raise ScenarioParseError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        key, value = (p.strip() for p in line.split("=", 1))
        try:
            if section is None:
                if key != "label":
                    raise ScenarioParseError(f"key {key!r} outside a section", lineno)
                label = value
            elif section == "phy":
                if key not in PHY_KEYS:
                    raise ScenarioParseError(f"unknown phy key {key!r}", lineno)
                name, kind = PHY_KEYS[key]
                phy[name] = _number(value, kind, lineno)
            else:
                if key not in STATION_KEYS:
                    raise ScenarioParseError(f"unknown station key {key!r}", lineno)
                name, kind = STATION_KEYS[key]
                stations[-1][name] = _number(value, kind, lineno)
        except ScenarioParseError as exc:
            raise ScenarioParseError(str(exc).split(": ", 1)[-1], lineno, path) from None
    if not stations:
        raise ScenarioParseError("no [station] sections", None, path)
    built = []
    for k, (kw, lineno) in enumerate(zip(stations, stations_at), 1):
        missing = [key for key in REQUIRED_STATION if STATION_KEYS[key][0] not in kw]
        if missing:
            raise ScenarioParseError(f"station {k} is missing {', '.join(missing)}", lineno, path)
        built.append(StationConfig(k, **kw))
    sc = Scenario(tuple(built), PhyTimingParams(**phy), label)
    validate_scenario(sc)
    return sc


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file: {exc.strerror}", None, str(p)) from exc
    return parse_scenario(text, str(p))


def format_scenario(sc: Scenario) -> str:
    out = []
    if sc.label:
        out.append(f"label = {sc.label}")
    out.append("[phy]")
    for f in fields(PhyTimingParams):
        out.append(f"{f.name} = {getattr(sc.phy, f.name)!r}")
    for st in sc.stations:
        out.append("[station]")
        for key, (name, _) in STATION_KEYS.items():
            out.append(f"{key} = {getattr(st, name)!r}")
    return "\n".join(out) + "\n"


def scenario_hash(sc: Scenario) -> str:
    return hashlib.sha256(format_scenario(sc).encode()).hexdigest()[:16]


__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "format_scenario",
    "load_scenario",
    "parse_scenario",
    "scenario_hash",
]
