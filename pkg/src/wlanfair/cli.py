"""Command line entry point: ``wlanfair {model,optimize,simulate,reproduce}``.

Every verb prints a table and writes comma-separated data files, each
starting with a ``#`` provenance block, into ``--out``.

Exit codes: 0 success, 2 usage, 3 scenario file, 4 invalid scenario,
5 solver or optimizer failure, 6 output error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .chain import ChainError
from .equilibrium import ConvergenceError, solve_equilibrium
from .fairness import AllocationError, jain_index, normalized, optimize
from .params import Scenario, ScenarioError
from .reproduce import TARGETS, reproduce
from .scenario_io import ScenarioParseError, load_scenario, scenario_hash
from .sim import RNG_ALGORITHM, SimConfig, replicate

log = logging.getLogger("wlanfair")

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_SCENARIO = 4
EXIT_SOLVER = 5
EXIT_OUTPUT = 6

SWEEP_FIELDS = {
    "lambda": "lambda_",
    "lambda_pps": "lambda_",
    "bit_rate": "bit_rate",
    "bit_rate_bps": "bit_rate",
    "payload": "payload",
    "payload_bytes": "payload",
    "w0": "w0",
    "pe": "pe",
}


@dataclass(frozen=True)
class Sweep:
    station: int
    field: str
    values: tuple[float, ...]

    @classmethod
    def parse(cls, text: str) -> "Sweep":
        parts = text.split(":")
        if len(parts) != 5:
            raise argparse.ArgumentTypeError("sweep must be station:field:start:stop:points")
        st, fld, start, stop, pts = parts
        if fld not in SWEEP_FIELDS:
            raise argparse.ArgumentTypeError(f"unknown sweep field {fld!r}")
        try:
            st_i, a, b, n = int(st), float(start), float(stop), int(pts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"malformed sweep {text!r}") from None
        if n < 1 or not (np.isfinite(a) and np.isfinite(b)):
            raise argparse.ArgumentTypeError("sweep needs a finite range and at least one point")
        return cls(st_i, SWEEP_FIELDS[fld], tuple(float(v) for v in np.linspace(a, b, n)))

    def apply(self, sc: Scenario, value: float) -> Scenario:
        if not 1 <= self.station <= sc.n:
            raise ScenarioError(f"sweep station {self.station} not in 1..{sc.n}")
        v = int(round(value)) if self.field == "payload" else value
        sts = tuple(st.replace(**{self.field: v}) if st.id == self.station else st for st in sc.stations)
        return Scenario(sts, sc.phy, sc.label)


@dataclass
class RunRequest:
    mode: str
    scenario_path: str | None = None
    criterion: str = "mlpf"
    sweep: Sweep | None = None
    output_dir: str = "out"
    seed: int = 1
    duration: float = 60.0
    reps: int = 10
    target: str | None = None
    simulate: bool = False
    points: int = 20


@dataclass
class ReportBundle:
    run_id: str
    tables: dict[str, list[dict]] = field(default_factory=dict)
    text: str = ""
    provenance: dict[str, str] = field(default_factory=dict)


def run_id(req: RunRequest, scenario_key: str) -> str:
    key = repr((req.mode, scenario_key, req.criterion, req.sweep, req.seed, req.duration, req.reps,
                req.target, req.simulate, req.points))
    return hashlib.sha256(key.encode()).hexdigest()[:12]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_table(rows: list[dict]) -> str:
    if not rows:
        return "(no rows)\n"
    cols = list(rows[0])
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def write_csv(path: Path, rows: list[dict], provenance: dict[str, str]) -> None:
    buf = io.StringIO()
    for k, v in provenance.items():
        buf.write(f"# {k}={v}\n")
    buf.write(f"# timestamp={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in r.items()})
    path.write_text(buf.getvalue())


def model_rows(sc: Scenario, extra: dict | None = None) -> list[dict]:
    eq = solve_equilibrium(sc)
    rows = []
    for s, (st, ss) in enumerate(zip(sc.stations, eq.per_station)):
        rows.append({
            **(extra or {}),
            "station": st.id,
            "lambda_pps": st.lambda_,
            "bit_rate_mbps": st.bit_rate / 1e6,
            "w0": st.w0,
            "tau": float(eq.tau[s]),
            "p_eq": float(ss.p_eq),
            "b_idle": float(ss.b_i),
            "q": float(ss.q),
            "p_i0": float(ss.p_i0),
            "S_mbps": float(eq.throughput[s]) / 1e6,
            "S_norm": float(eq.throughput[s]) / st.bit_rate,
        })
    summary = {
        **(extra or {}),
        "aggregate_mbps": eq.aggregate / 1e6,
        "jain_norm": jain_index(normalized(eq.throughput, sc)),
        "jain_abs": jain_index(eq.throughput),
        "t_av_us": eq.t_av * 1e6,
        "iterations": eq.iterations,
        "residual": eq.residual,
    }
    return rows, summary


def optimize_rows(sc: Scenario, criterion: str, req: RunRequest, extra: dict | None = None):
    res = optimize(sc, criterion)
    sim = None
    if req.simulate:
        sim = replicate(SimConfig(sc.with_w0(res.w0_int), duration=req.duration, seed=req.seed,
                                  replications=req.reps))
    rows = []
    for s, st in enumerate(sc.stations):
        row = {
            **(extra or {}),
            "station": st.id,
            "weight": float(res.weights[s]),
            "tau_star": float(res.tau_star[s]),
            "w0_real": float(res.w0_real[s]),
            "w0_int": int(res.w0_int[s]),
            "S_mbps": float(res.predicted.throughput[s]) / 1e6,
            "S_norm": float(res.predicted.throughput[s]) / st.bit_rate,
        }
        if sim is not None:
            row["sim_S_mbps"] = float(sim.throughput[s]) / 1e6
            row["sim_S_norm"] = float(sim.throughput[s]) / st.bit_rate
        rows.append(row)
    summary = {
        **(extra or {}),
        "criterion": res.criterion.value,
        "utility": res.utility,
        "aggregate_mbps": res.aggregate / 1e6,
        "jain_norm": res.jain,
        "jain_abs": res.jain_absolute,
        "clipped": " ".join(str(s + 1) for s in res.clipped),
        "window_limited": " ".join(str(s + 1) for s in res.window_limited),
    }
    if sim is not None:
        summary["sim_aggregate_mbps"] = sim.aggregate / 1e6
        summary["sim_jain_norm"] = jain_index(normalized(sim.throughput, sc))
    return rows, summary


def simulate_rows(sc: Scenario, req: RunRequest, extra: dict | None = None):
    rep = replicate(SimConfig(sc, duration=req.duration, seed=req.seed, replications=req.reps))
    rows = []
    for s, st in enumerate(sc.stations):
        row = {**(extra or {}), "station": st.id, "w0": int(st.w0)}
        for k in ("throughput", "collision_fraction", "error_fraction", "idle_fraction", "dropped"):
            row[k] = float(rep.mean[k][s])
            row[k + "_stderr"] = float(rep.stderr[k][s]) if rep.stderr else float("nan")
        row["S_norm"] = row["throughput"] / st.bit_rate
        rows.append(row)
    summary = {
        **(extra or {}),
        "aggregate_mbps": rep.aggregate / 1e6,
        "jain_norm": jain_index(normalized(rep.throughput, sc)),
        **{f"slots_{k}": v for k, v in rep.slots.items()},
    }
    raw = [{**(extra or {}), "replication": k, "station": s, "metric": m, "value": v} for k, s, m, v in rep.rows()]
    return rows, summary, raw


def run(req: RunRequest) -> ReportBundle:
    if req.mode == "reproduce":
        scenario_key = f"builtin:{req.target}"
        sc = None
    else:
        sc = load_scenario(req.scenario_path)
        scenario_key = scenario_hash(sc)
    rid = run_id(req, scenario_key)
    prov = {
        "tool": f"wlanfair {__version__}",
        "run_id": rid,
        "mode": req.mode,
        "scenario": scenario_key,
        "seed": str(req.seed),
        "rng": RNG_ALGORITHM,
    }
    bundle = ReportBundle(rid, provenance=prov)

    if req.mode == "reproduce":
        kw = dict(duration=req.duration, reps=req.reps, seed=req.seed, simulate=req.reps > 0)
        if req.target == "fig2":
            kw["points"] = req.points
        rows = reproduce(req.target, **kw)
        bundle.tables[req.target] = rows
        text = render_table(rows)
        if req.target == "fig1B" or req.target == "table1":
            text += "note: scenario B packet rates are a calibrated assumption (fast 1000, slow 500 pkt/s)\n"
        bundle.text = text
        return bundle

    points = [(None, sc)] if req.sweep is None else [(v, req.sweep.apply(sc, v)) for v in req.sweep.values]
    per_station, summaries, raw = [], [], []
    for value, point in points:
        extra = {} if value is None else {f"sweep_{req.sweep.field.rstrip('_')}": value}
        if req.mode == "model":
            rows, summary = model_rows(point, extra)
        elif req.mode == "optimize":
            rows, summary = optimize_rows(point, req.criterion, req, extra)
        else:
            rows, summary, r = simulate_rows(point, req, extra)
            raw += r
        per_station += rows
        summaries.append(summary)
    bundle.tables[f"{req.mode}_stations"] = per_station
    bundle.tables[f"{req.mode}_summary"] = summaries
    if raw:
        bundle.tables["simulate_raw"] = raw
    text = render_table(per_station) + "\n" + render_table(summaries)
    if all(st.pe == 0 for st in sc.stations):
        text += "note: packet error rates are all 0 (values used for the published scenarios are unknown)\n"
    bundle.text = text
    return bundle


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wlanfair", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"wlanfair {__version__}")
    sub = p.add_subparsers(dest="mode", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", required=True, metavar="PATH")
            sp.add_argument("--sweep", type=Sweep.parse, metavar="station:field:start:stop:points")
        sp.add_argument("--out", default="out", metavar="DIR")
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--duration", type=float, default=60.0, metavar="SECS")
        sp.add_argument("--reps", type=int, default=10)
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("model", help="solve the analytical equilibrium"))
    sp = sub.add_parser("optimize", help="proportional-fair contention windows")
    common(sp)
    sp.add_argument("--criterion", choices=("pf", "lpf", "mlpf"), default="mlpf")
    sp.add_argument("--simulate", action="store_true", help="also simulate at the integer windows")
    common(sub.add_parser("simulate", help="run the DCF simulator"))
    sp = sub.add_parser("reproduce", help="regenerate figure and table data")
    sp.add_argument("target", choices=TARGETS)
    sp.add_argument("--points", type=int, default=20, help="sweep points for fig2")
    common(sp, scenario=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.duration <= 0 or args.reps < 0:
        parser.error("--duration must be > 0 and --reps >= 0")
    req = RunRequest(
        mode=args.mode,
        scenario_path=getattr(args, "scenario", None),
        criterion=getattr(args, "criterion", "mlpf"),
        sweep=getattr(args, "sweep", None),
        output_dir=args.out,
        seed=args.seed,
        duration=args.duration,
        reps=args.reps,
        target=getattr(args, "target", None),
        simulate=getattr(args, "simulate", False),
        points=getattr(args, "points", 20),
    )
    if req.mode in ("simulate",) and req.reps < 1:
        parser.error("simulate needs --reps >= 1")
    if req.simulate and req.reps < 1:
        parser.error("--simulate needs --reps >= 1")
    try:
        bundle = run(req)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ScenarioError, ValueError) as exc:
        print(f"error: invalid scenario or request: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (ConvergenceError, AllocationError, ChainError) as exc:
        print(f"error: {req.mode} failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        out = Path(req.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, rows in bundle.tables.items():
            write_csv(out / f"{name}.csv", rows, bundle.provenance)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    sys.stdout.write(bundle.text)
    print(f"run {bundle.run_id}: wrote {len(bundle.tables)} file(s) to {req.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
