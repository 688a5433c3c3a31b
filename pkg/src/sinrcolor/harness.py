"""Experiment runner: scenarios, multi-run aggregation and CSV output."""
from __future__ import annotations

import configparser
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .comms import CommParams
from .deployment import (DeploymentSpec, Strategy, build_topology, generate, read_positions,
                         write_positions)
from .kernel import KernelConfig, Mode, Simulator
from .metrics import RunMetrics
from .mobility import MobilitySpec
from .protocols import get_protocol
from .sinr import SinrParams

log = logging.getLogger(__name__)


class Scenario(str, Enum):
    RUN_ONCE = "run"
    FACTOR_SWEEP = "factor_sweep"
    DURATION_PRIME_SWEEP = "duration_prime_sweep"
    RAND_VARIANTS = "rand_variants"
    INITIAL_COLOR_STUDY = "initial_color_study"
    COMPARISON = "comparison"
    MOBILITY = "mobility"
    WAKE_UP = "wakeup"
    LB_CALIBRATION = "calibrate"


COMPARISON_PROTOCOLS = ("rand4d", "rand1d", "crrcor", "mwcor", "yucor", "crrand", "mw", "yu")
RAND_PROTOCOLS = ("rand4d", "rand1d", "rand4d_resp", "rand4d_final")


def load_defaults(path=None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if path is None:
        cp.read_string(resources.files("sinrcolor").joinpath("defaults.cfg").read_text())
    else:
        cp.read(path)
    return cp


@dataclass
class ExperimentSpec:
    scenario: Scenario = Scenario.RUN_ONCE
    strategy: Strategy = Strategy.RANDOM
    n: int = 250
    area: Tuple[float, float] = (500.0, 500.0)
    protocols: Tuple[str, ...] = ()  # empty: the scenario's default set
    runs: int = 10
    seed: int = 0
    # None: per-strategy default (tx_const, duration) or per-protocol default
    tx_const: Optional[float] = None
    duration: Optional[int] = None
    factor: Optional[float] = None
    duration_prime: Optional[int] = None
    init_mult: Optional[float] = None
    # sweep axes
    factors: Tuple[float, ...] = ()
    duration_primes: Tuple[int, ...] = ()
    init_mults: Tuple[float, ...] = ()
    tx_consts: Tuple[float, ...] = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)
    # mobility
    speeds: Tuple[float, ...] = (1.0,)
    mobility_slots: int = 20_000
    # wake-up
    base_nodes: int = 500
    late_counts: Tuple[int, ...] = (100, 500)
    max_slots: float = 400_000.0
    positions_dir: Optional[str] = None
    scale_r2_power: bool = True
    cluster_sigma: Optional[float] = None
    progress: bool = True
    jobs: int = 1

    def __post_init__(self):
        self.scenario = Scenario(self.scenario)
        self.strategy = Strategy(self.strategy)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.scenario == Scenario.FACTOR_SWEEP and not self.factors:
            raise ValueError("factor sweep needs 'factors'")
        if self.scenario == Scenario.DURATION_PRIME_SWEEP and not self.duration_primes:
            raise ValueError("duration' sweep needs 'duration_primes'")
        for p in self.protocols:
            get_protocol(p)

    def paper_scale(self) -> "ExperimentSpec":
        """n=1000 on 1000 x 1000 m with 100 runs (mobility keeps its 250-node setup)."""
        if self.scenario in (Scenario.MOBILITY, Scenario.WAKE_UP):
            return replace(self, runs=100)
        return replace(self, n=1000, area=(1000.0, 1000.0), runs=100)


def run_seed(master: int, run: int) -> int:
    """Independent per-run seed; runs share a deployment across protocols."""
    return int(np.random.SeedSequence([int(master), int(run)]).generate_state(1)[0])


def deployment_for(spec: ExperimentSpec, run: int, n: Optional[int] = None,
                   area=None) -> np.ndarray:
    n = spec.n if n is None else n
    area = spec.area if area is None else area
    if spec.positions_dir:
        path = Path(spec.positions_dir) / position_filename(spec.strategy, n, run)
        if path.exists():
            return read_positions(path)
    defaults = load_defaults()
    dep = defaults["deployment"]
    sigma = spec.cluster_sigma if spec.cluster_sigma is not None else dep.getfloat("cluster_sigma")
    return generate(DeploymentSpec(spec.strategy, n=n, area=tuple(area),
                                   clusters=dep.getint("clusters"),
                                   mix_fraction=dep.getfloat("mix_fraction"),
                                   seed=run_seed(spec.seed, run), cluster_sigma=sigma))


def position_filename(strategy: Strategy, n: int, run: int) -> str:
    return f"{Strategy(strategy).value}_n{n}_{run:04d}.txt"


def comm_for(spec: ExperimentSpec, protocol: str, delta: int, *, factor=None,
             duration_prime=None, tx_const=None) -> CommParams:
    proto = get_protocol(protocol)
    d = load_defaults()[spec.strategy.value]
    tx = tx_const if tx_const is not None else (
        spec.tx_const if spec.tx_const is not None else d.getfloat("tx_const"))
    dur = spec.duration if spec.duration is not None else d.getint("duration")
    f = factor if factor is not None else (spec.factor if spec.factor is not None else proto.factor)
    dp = duration_prime if duration_prime is not None else (
        spec.duration_prime if spec.duration_prime is not None else proto.duration_prime)
    if dp is not None:
        dp = min(int(dp), dur)
    return CommParams(tx, dur, f, dp, delta=delta)


def simulate(positions, protocol: str, comm: CommParams, seed: int, *,
             present=None, mobility: Optional[MobilitySpec] = None,
             max_slots: float = 400_000.0, collect_metrics: bool = True,
             record_packets: bool = False, init_mult: Optional[float] = None,
             scale_r2_power: bool = True, channel: str = "sinr",
             topology=None) -> Simulator:
    """Builds a ready-to-run simulator for one protocol on one deployment."""
    proto = get_protocol(protocol)
    topo = topology if topology is not None else build_topology(positions)
    mode = Mode.SYNC if mobility is not None and not mobility.static else Mode.ASYNC
    cfg = KernelConfig(mode=mode, max_slots=max_slots, master_seed=seed, channel=channel)
    kw = {} if init_mult is None else {"init_mult": init_mult}
    return Simulator(positions, proto.factory(topo, seed, **kw), comm,
                     SinrParams(scale_r2_power=scale_r2_power), cfg,
                     mobility=mobility, present=present, finalizing=proto.finalizing,
                     collect_metrics=collect_metrics, record_packets=record_packets)


# -- result rows ------------------------------------------------------------

COLUMNS = ["scenario", "protocol", "strategy", "n", "delta", "run", "seed", "tx_const",
           "duration", "factor", "duration_prime", "init_palette", "speed", "late_nodes",
           "runtime", "terminated", "conflicts", "redraws", "disturbed", "valid_fraction",
           "transmissions", "max_color"]

GROUP_KEYS = ["scenario", "protocol", "strategy", "n", "tx_const", "duration", "factor",
              "duration_prime", "init_palette", "speed", "late_nodes"]

SUMMARY_COLUMNS = GROUP_KEYS + ["runs", "terminated_runs", "delta_mean", "runtime_mean",
                                "runtime_std", "conflicts_mean", "conflicts_std",
                                "redraws_mean", "disturbed_mean", "disturbed_std",
                                "valid_fraction_mean", "transmissions_mean"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return f"{float(v):.6f}".rstrip("0").rstrip(".")
    return str(v)


@dataclass
class Job:
    """One simulation: everything needed to reproduce a row."""

    spec: ExperimentSpec
    protocol: str
    run: int
    factor: Optional[float] = None
    duration_prime: Optional[int] = None
    init_mult: Optional[float] = None
    speed: Optional[float] = None
    late: Optional[int] = None
    tx_const: Optional[float] = None

    @property
    def tag(self) -> str:
        parts = [self.protocol]
        for name in ("factor", "duration_prime", "init_mult", "speed", "late", "tx_const"):
            v = getattr(self, name)
            if v is not None:
                parts.append(f"{name}{fmt(v)}")
        parts.append(f"{self.run:04d}")
        return "_".join(parts)


def _base_row(job: Job, comm: CommParams, n: int, seed: int, m: RunMetrics) -> Dict:
    spec = job.spec
    return {
        "scenario": spec.scenario.value, "protocol": get_protocol(job.protocol).label,
        "strategy": spec.strategy.value, "n": n, "delta": comm.delta, "run": job.run,
        "seed": seed, "tx_const": comm.tx_const, "duration": comm.duration,
        "factor": comm.factor, "duration_prime": comm.duration_prime,
        "init_palette": None, "speed": job.speed, "late_nodes": job.late,
        "runtime": m.runtime_slots, "terminated": m.terminated,
        "conflicts": m.final_conflicts, "redraws": m.redraw_total, "disturbed": None,
        "valid_fraction": None, "transmissions": m.transmissions, "max_color": None,
    }


def _max_color(sim: Simulator):
    cs = [nr.machine.color for nr in sim.nodes if nr.machine.color is not None]
    return max(cs) if cs else None


def execute(job: Job):
    """Runs one job; returns (row, progress rows)."""
    spec = job.spec
    seed = run_seed(spec.seed, job.run)
    if spec.scenario == Scenario.WAKE_UP:
        return _execute_wakeup(job, seed)
    pos = deployment_for(spec, job.run)
    topo = build_topology(pos)
    comm = comm_for(spec, job.protocol, topo.delta, factor=job.factor,
                    duration_prime=job.duration_prime, tx_const=job.tx_const)
    mobility = None
    max_slots = spec.max_slots
    if spec.scenario == Scenario.MOBILITY:
        mobility = MobilitySpec(mean_speed=job.speed, area=tuple(spec.area))
        max_slots = spec.mobility_slots
    sim = simulate(pos, job.protocol, comm, seed, mobility=mobility, max_slots=max_slots,
                   init_mult=job.init_mult, scale_r2_power=spec.scale_r2_power,
                   topology=topo)
    m = sim.run()
    row = _base_row(job, comm, len(pos), seed, m)
    row["max_color"] = _max_color(sim)
    if job.init_mult is not None:
        row["init_palette"] = (topo.delta + 1 if job.init_mult == 1
                               else int(round(job.init_mult * topo.delta)))
    if mobility is not None:
        row["valid_fraction"] = m.mean_valid_fraction
    if not m.terminated and mobility is None:
        log.warning("run %s hit the %s-slot cutoff", job.tag, max_slots)
    if spec.scenario == Scenario.LB_CALIBRATION:
        row["runtime"] = lb_runtime(sim)
    return row, _progress(m)


def _execute_wakeup(job: Job, seed: int):
    spec = job.spec
    total = spec.base_nodes + job.late
    pos = deployment_for(spec, job.run, n=total)
    topo = build_topology(pos)
    comm = comm_for(spec, job.protocol, topo.delta)
    present = np.zeros(total, dtype=bool)
    present[:spec.base_nodes] = True
    sim = simulate(pos, job.protocol, comm, seed, present=present,
                   max_slots=spec.max_slots, scale_r2_power=spec.scale_r2_power,
                   topology=topo)
    first = sim.run()
    base_runtime = first.runtime_slots
    sim.tracker.watch_for_disturbance(range(spec.base_nodes))
    sim.spawn(range(spec.base_nodes, total), at=base_runtime)
    m = sim.run(max_slots=spec.max_slots)
    row = _base_row(job, comm, total, seed, m)
    row["runtime"] = m.runtime_slots - base_runtime
    row["terminated"] = first.terminated and m.terminated
    row["disturbed"] = len(sim.tracker.disturbed)
    row["max_color"] = _max_color(sim)
    return row, _progress(m)


def _progress(m: RunMetrics) -> List[Tuple]:
    vf = dict(m.valid_fraction_series)
    fin = dict(m.finished_series)
    return [(t, c, fin.get(t), vf.get(t)) for t, c in m.conflicts_series]


def lb_runtime(sim: Simulator) -> float:
    """Largest per-node local-broadcast completion time, in own slots."""
    worst = 0.0
    for nr in sim.nodes:
        done = getattr(nr.machine, "done_slot", None)
        if done is None:
            return math.nan
        worst = max(worst, done)
    return float(worst)


# -- experiment expansion ----------------------------------------------------

def expand(spec: ExperimentSpec) -> List[Job]:
    s = spec.scenario
    jobs: List[Job] = []
    runs = range(spec.runs)
    protocols = spec.protocols or {Scenario.COMPARISON: COMPARISON_PROTOCOLS,
                                   Scenario.RAND_VARIANTS: RAND_PROTOCOLS}.get(s, ("rand4d",))
    if s == Scenario.FACTOR_SWEEP:
        for p in protocols:
            for f in spec.factors:
                jobs += [Job(spec, p, r, factor=f) for r in runs]
    elif s == Scenario.DURATION_PRIME_SWEEP:
        for p in protocols:
            for dp in spec.duration_primes:
                jobs += [Job(spec, p, r, duration_prime=dp) for r in runs]
    elif s == Scenario.INITIAL_COLOR_STUDY:
        mults = spec.init_mults or (1.0, 2.0, 4.0)
        for p in protocols:
            for c in mults:
                jobs += [Job(spec, p, r, init_mult=c) for r in runs]
    elif s == Scenario.MOBILITY:
        for p in protocols:
            for v in spec.speeds:
                jobs += [Job(spec, p, r, speed=v) for r in runs]
    elif s == Scenario.WAKE_UP:
        for p in protocols:
            for late in spec.late_counts:
                jobs += [Job(spec, p, r, late=late) for r in runs]
    elif s == Scenario.LB_CALIBRATION:
        for tx in spec.tx_consts:
            jobs += [Job(spec, "lbprobe", r, tx_const=tx) for r in runs]
    else:
        for p in protocols:
            jobs += [Job(spec, p, r) for r in runs]
    return jobs


def run_experiment(spec: ExperimentSpec, out: Optional[Path] = None):
    """Executes every job of ``spec``; returns (rows, summary rows).

    With ``out`` set, writes results.csv, summary.csv and progress files.
    """
    jobs = expand(spec)
    if spec.jobs > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            results = list(pool.map(execute, jobs))
    else:
        results = [execute(j) for j in jobs]
    rows = [r for r, _ in results]
    summary = aggregate(rows)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "results.csv", COLUMNS, rows)
        write_rows(out / "summary.csv", SUMMARY_COLUMNS, summary)
        if spec.progress:
            for job, (_, prog) in zip(jobs, results):
                write_progress(out / f"progress_{job.tag}.csv", prog)
    return rows, summary


def aggregate(rows: Sequence[Dict]) -> List[Dict]:
    """Mean/stddev per parameter point; non-terminated runs are left out of the means."""
    groups: Dict[tuple, List[Dict]] = {}
    for r in rows:
        groups.setdefault(tuple(fmt(r[k]) for k in GROUP_KEYS), []).append(r)
    out = []
    for key, rs in groups.items():
        ok = [r for r in rs if r["terminated"] or r["scenario"] == Scenario.MOBILITY.value]
        if len(ok) < len(rs):
            log.warning("%s: %d of %d runs did not terminate and are excluded",
                        rs[0]["protocol"], len(rs) - len(ok), len(rs))

        def stat(col, fn):
            vals = [float(r[col]) for r in ok if r[col] is not None]
            if not vals:
                return None
            if fn == "std":
                return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            return float(np.mean(vals))

        s = {k: rs[0][k] for k in GROUP_KEYS}
        s.update(runs=len(rs), terminated_runs=sum(bool(r["terminated"]) for r in rs),
                 delta_mean=float(np.mean([r["delta"] for r in rs])),
                 runtime_mean=stat("runtime", "mean"), runtime_std=stat("runtime", "std"),
                 conflicts_mean=stat("conflicts", "mean"), conflicts_std=stat("conflicts", "std"),
                 redraws_mean=stat("redraws", "mean"),
                 disturbed_mean=stat("disturbed", "mean"), disturbed_std=stat("disturbed", "std"),
                 valid_fraction_mean=stat("valid_fraction", "mean"),
                 transmissions_mean=stat("transmissions", "mean"))
        out.append(s)
    return out


def write_rows(path: Path, columns: Sequence[str], rows: Iterable[Dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])


def write_progress(path: Path, prog) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "conflicts", "finished", "valid_fraction"])
        for row in prog:
            w.writerow([fmt(x) for x in row])


# -- calibration --------------------------------------------------------------

def calibrate_lb(spec: ExperimentSpec, tx_consts: Optional[Sequence[float]] = None):
    """Returns (best tx_const, duration, {tx_const: mean max LB runtime})."""
    spec = replace(spec, scenario=Scenario.LB_CALIBRATION,
                   tx_consts=tuple(tx_consts or spec.tx_consts))
    rows, _ = run_experiment(spec)
    means: Dict[float, float] = {}
    for tx in spec.tx_consts:
        vals = [r["runtime"] for r in rows if r["tx_const"] == tx]
        means[tx] = float(np.mean(vals))
    best = min(means, key=lambda t: (means[t], t))
    duration = max(1, int(math.ceil(means[best] / 100.0)) * 100)
    return best, duration, means


def gen_positions(spec: ExperimentSpec, out: Path) -> List[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for r in range(spec.runs):
        p = out / position_filename(spec.strategy, spec.n, r)
        write_positions(p, deployment_for(replace(spec, positions_dir=None), r))
        paths.append(p)
    return paths


# -- config files ---------------------------------------------------------------

_TUPLE_FIELDS = {"protocols": str, "factors": float, "duration_primes": int, "init_mults": float,
                 "tx_consts": float, "speeds": float, "late_counts": int}


def spec_from_mapping(values: Dict[str, str], **overrides) -> ExperimentSpec:
    kw = {}
    types = {f.name: f.type for f in fields(ExperimentSpec)}
    for key, raw in values.items():
        key = key.strip().lower()
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        raw = raw.strip()
        if key in _TUPLE_FIELDS:
            kw[key] = tuple(_TUPLE_FIELDS[key](x) for x in raw.replace(",", " ").split())
        elif key == "area":
            w, h = (float(x) for x in raw.replace(",", " ").split())
            kw[key] = (w, h)
        elif key in ("n", "runs", "seed", "duration", "duration_prime", "mobility_slots",
                     "base_nodes", "jobs"):
            kw[key] = int(raw)
        elif key in ("tx_const", "factor", "init_mult", "max_slots", "cluster_sigma"):
            kw[key] = float(raw)
        elif key in ("scale_r2_power", "progress"):
            kw[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            kw[key] = raw
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentSpec(**kw)


def load_config(path, section: str) -> Dict[str, str]:
    """Flat key = value pairs of ``[section]`` (plus ``[DEFAULT]``)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        cp.read_file(fh)
    if cp.has_section(section):
        return dict(cp[section])
    return dict(cp.defaults())
