"""Acceptance criteria, one test per criterion.

Each test prints ``CRITERION <k>: PASS|FAIL <details>`` before asserting.
Heavy scenarios are computed once per session and shared between criteria.
"""
import functools
import time
from dataclasses import replace

import numpy as np
import pytest

from sinrcolor.comms import CommParams
from sinrcolor.deployment import DeploymentSpec, Strategy, build_topology, generate
from sinrcolor.harness import (ExperimentSpec, Scenario, comm_for, deployment_for, run_experiment,
                               run_seed, simulate)
from sinrcolor.protocols import PROTOCOLS
from sinrcolor.sinr import SinrParams, broadcast_range, transmission_range

pytestmark = pytest.mark.slow

PAPER = ExperimentSpec(n=1000, area=(1000.0, 1000.0), runs=10)
DESK = ExperimentSpec(n=250, area=(500.0, 500.0), runs=10)


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def _static_run(spec, name, run, **kw):
    """One static run plus the oracle-side checks needed by criterion 9."""
    pos = deployment_for(spec, run)
    topo = build_topology(pos)
    comm = comm_for(spec, name, topo.delta, **{k: v for k, v in kw.items() if k != "init_mult"})
    sim = simulate(pos, name, comm, run_seed(spec.seed, run), topology=topo,
                   init_mult=kw.get("init_mult"), max_slots=spec.max_slots)
    m = sim.run()
    colors = np.array([-1 if nr.color is None else nr.color for nr in sim.nodes])
    same = topo.matrix & (colors[:, None] == colors[None, :]) & (colors[:, None] >= 0)
    leaders = np.array([bool(getattr(nr.machine, "leader", False)) for nr in sim.nodes])
    return dict(runtime=m.runtime_slots, terminated=m.terminated, conflicts=m.final_conflicts,
                oracle_conflicted=int(same.any(axis=1).sum()), delta=topo.delta,
                max_color=int(colors.max()), uncolored=int((colors < 0).sum()),
                adjacent_leaders=int((topo.matrix & leaders[:, None] & leaders[None, :]).sum()),
                redraws=m.redraw_total)


@functools.lru_cache(maxsize=None)
def batch(scale, name, runs=10, **kw):
    spec = PAPER if scale == "paper" else DESK
    t0 = time.time()
    out = [_static_run(spec, name, r, **kw) for r in range(runs)]
    print(f"[{scale} {name} {kw}] {time.time() - t0:.1f}s")
    return tuple(out)


def mean(rs, col, terminated_only=True):
    vals = [r[col] for r in rs if r["terminated"] or not terminated_only]
    return float(np.mean(vals)) if vals else float("nan")


# ---------------------------------------------------------------------------

def test_criterion_01_sinr_ranges(report):
    rt, rb = transmission_range(SinrParams()), broadcast_range(SinrParams())
    ok = abs(rt - 100.0) <= 1e-9 and abs(rb - 84.0896) <= 1e-3
    report(1, ok, f"r_T={rt:.12f} r_B={rb:.6f}")


def test_criterion_02_grid_degree(report):
    pos = generate(DeploymentSpec(Strategy.GRID, n=1000, area=(1000.0, 1000.0)))
    d = build_topology(pos).delta
    report(2, d == 20, f"grid delta={d}")


def test_criterion_03_sinr_oracle(report):
    from fractions import Fraction
    import random
    from sinrcolor.sinr import Packet, RangeClass, feasible_mask, sinr_feasible
    P = SinrParams()
    rng = random.Random(7)
    agree = 0
    for _ in range(1000):
        n = rng.randint(2, 20)
        pts = [(rng.uniform(0, 300), rng.uniform(0, 300)) for _ in range(n)]
        rx = (rng.uniform(0, 300), rng.uniform(0, 300))
        pk = [Packet(i, pts[i], 0.0, 0.999, None, -1, RangeClass.R1, 1.0) for i in range(n)]

        def inv4(a):
            d2 = (Fraction(a[0]) - Fraction(rx[0])) ** 2 + (Fraction(a[1]) - Fraction(rx[1])) ** 2
            return 1 / d2 ** 2
        exact = inv4(pts[0]) >= 10 * (sum(inv4(p) for p in pts[1:]) + Fraction(1e-9))
        eng = sinr_feasible(pk[0], rx, pk, P)
        vec = bool(feasible_mask(pts[0], 1.0, np.array([rx]), np.array(pts[1:]),
                                 np.ones(n - 1), P)[0])
        agree += exact == eng == vec
    report(3, agree == 1000, f"{agree}/1000 instances agree bit-exactly")


def test_criterion_04_rand4d_speed(report):
    rs = batch("paper", "rand4d")
    rts = [r["runtime"] for r in rs]
    all_ok = all(r["terminated"] and r["conflicts"] == 0 and r["runtime"] < 4600 for r in rs)
    m = float(np.mean(rts))
    report(4, all_ok and 800 <= m <= 2300,
           f"paper scale mean={m:.0f} max={max(rts):.0f} (paper 1256; need all < 4600, "
           f"mean in [800, 2300])")


def test_criterion_05_rand_variant_ordering(report):
    m = {p: mean(batch("paper", p), "runtime") for p in ("rand4d", "rand1d", "rand4d_resp",
                                                           "rand4d_final")}
    dur = comm_for(PAPER, "rand4d", 1).duration
    target = m["rand4d"] + dur
    order = m["rand4d"] < m["rand1d"] < min(m["rand4d_resp"], m["rand4d_final"])
    near = all(abs(m[p] - target) <= 0.3 * target for p in ("rand4d_resp", "rand4d_final"))
    report(5, order and near,
           "means " + ", ".join(f"{PROTOCOLS[p].label}={v:.0f}" for p, v in m.items())
           + f"; base+duration={target:.0f}")


def test_criterion_06_factor_monotonicity(report):
    details, ok = [], True
    for p in ("crrand", "mw"):
        rts, cfs = [], []
        for f in (0.05, 0.2, 0.6):
            rs = batch("desk", p, factor=f)
            rts.append(mean(rs, "runtime"))
            cfs.append(mean(rs, "conflicts"))
        good = rts[0] > rts[1] > rts[2] and cfs[0] <= cfs[1] <= cfs[2]
        ok &= good
        details.append(f"{PROTOCOLS[p].label}: runtime {[round(x) for x in rts]} "
                       f"conflicts {[round(x, 2) for x in cfs]}")
    report(6, ok, "; ".join(details))


COMPARISON = ("rand4d", "rand1d", "crrcor", "mwcor", "yucor", "crrand", "mw", "yu")


def comparison():
    return {p: batch("desk", p) for p in COMPARISON}


def test_criterion_07_correcting_speedup(report):
    c = comparison()
    rt = {p: mean(rs, "runtime") for p, rs in c.items()}
    cr_conf = mean(c["crrcor"], "conflicts")
    checks = {
        "CRRCor<0.5*CRRand": rt["crrcor"] < 0.5 * rt["crrand"],
        "CRRCor conflicts<=0.5": cr_conf <= 0.5,
        "MWCor<0.5*MW": rt["mwcor"] < 0.5 * rt["mw"],
        "YuCor<0.25*Yu": rt["yucor"] < 0.25 * rt["yu"],
    }
    report(7, all(checks.values()),
           f"CRRCor={rt['crrcor']:.0f} ({cr_conf:.2f} conflicts) CRRand={rt['crrand']:.0f} "
           f"MWCor={rt['mwcor']:.0f} MW={rt['mw']:.0f} YuCor={rt['yucor']:.0f} "
           f"Yu={rt['yu']:.0f} {checks}")


def test_criterion_08_comparison_ordering(report):
    c = comparison()
    rt = {p: mean(rs, "runtime") for p, rs in c.items()}
    fastest = min(rt, key=rt.get)
    slowest = max(rt, key=rt.get)
    ratio = max(rt["mwcor"], rt["crrcor"]) / min(rt["mwcor"], rt["crrcor"])
    ok = fastest == "rand4d" and slowest == "yu" and ratio <= 2.0
    order = " < ".join(PROTOCOLS[p].label for p in sorted(rt, key=rt.get))
    report(8, ok, f"{order}; MWCor/CRRCor ratio={ratio:.2f}")


def test_criterion_09_validity(report):
    groups = dict(comparison())
    for p in ("rand4d", "rand1d", "rand4d_resp", "rand4d_final"):
        groups[f"paper:{p}"] = batch("paper", p)
    for p in ("crrand", "mw"):
        for f in (0.05, 0.2, 0.6):
            groups[f"{p}@{f}"] = batch("desk", p, factor=f)
    bad, n_runs, residual = [], 0, {}
    for key, rs in groups.items():
        p = key.split(":")[-1].split("@")[0]
        for i, r in enumerate(rs):
            if not r["terminated"]:
                continue
            n_runs += 1
            # tracker and brute-force oracle must agree on every run
            if r["oracle_conflicted"] != r["conflicts"]:
                bad.append(f"{key}#{i} oracle mismatch")
            if r["conflicts"]:
                bad.append(f"{key}#{i} {r['conflicts']} conflicted nodes")
                residual[PROTOCOLS[p].label] = residual.get(PROTOCOLS[p].label, 0) + 1
            if r["uncolored"]:
                bad.append(f"{key}#{i} uncolored")
            if p.startswith("rand4d") and r["max_color"] >= 4 * r["delta"]:
                bad.append(f"{key}#{i} color {r['max_color']} >= 4 delta")
            if (p == "rand1d" or p.startswith(("cr", "yu"))) and r["max_color"] > r["delta"]:
                bad.append(f"{key}#{i} color {r['max_color']} > delta")
            if r["adjacent_leaders"]:
                bad.append(f"{key}#{i} adjacent MIS winners")
    report(9, not bad,
           f"{n_runs} terminated static runs checked; {len(bad)} violations, first {bad[:5]}; "
           f"runs with conflicts per protocol: {residual}")


@functools.lru_cache(maxsize=None)
def wakeup_rows():
    spec = ExperimentSpec(scenario=Scenario.WAKE_UP, area=(1000.0, 1000.0), runs=10,
                          base_nodes=500, late_counts=(100, 500), progress=False,
                          protocols=("rand4d", "rand4d_resp", "crrcor", "mwcor"))
    t0 = time.time()
    rows, _ = run_experiment(spec)
    print(f"[wakeup] {time.time() - t0:.1f}s")
    return rows


def test_criterion_10_wakeup(report):
    rows = wakeup_rows()
    d = {}
    for r in rows:
        d.setdefault((r["protocol"], r["late_nodes"]), []).append(r["disturbed"])
    m = {k: float(np.mean(v)) for k, v in d.items()}
    checks = {}
    for late in (100, 500):
        resp, base = m[("Rand4DRespColor", late)], m[("Rand4DColor", late)]
        checks[f"resp<5@{late}"] = resp < 5
        checks[f"resp<rand4d@{late}"] = resp < base
        for p in ("CRRCor", "MWCor"):
            checks[f"{p}>rand@{late}"] = m[(p, late)] > max(resp, base)
    checks["rand4d@500 in [15,50]"] = 15 <= m[("Rand4DColor", 500)] <= 50
    report(10, all(checks.values()),
           "disturbed means " + ", ".join(f"{p}+{late}={v:.2f}" for (p, late), v in sorted(m.items()))
           + f"; failed={[k for k, v in checks.items() if not v]}")


def test_criterion_11_mobility(report):
    spec = ExperimentSpec(scenario=Scenario.MOBILITY, n=250, area=(500.0, 500.0), runs=10,
                          speeds=(1.0,), mobility_slots=20_000, progress=False,
                          protocols=("rand4d", "crrcor"))
    t0 = time.time()
    _, summary = run_experiment(spec)
    print(f"[mobility] {time.time() - t0:.1f}s")
    vf = {s["protocol"]: s["valid_fraction_mean"] for s in summary}
    ok = vf["Rand4DColor"] >= 0.90 and vf["Rand4DColor"] > vf["CRRCor"]
    report(11, ok, f"time-averaged valid fraction Rand4DColor={vf['Rand4DColor']:.3f} "
                   f"CRRCor={vf['CRRCor']:.3f}")


def test_criterion_12_determinism(report, tmp_path):
    specs = [
        ExperimentSpec(scenario=Scenario.COMPARISON, n=120, area=(350.0, 350.0), runs=2,
                       protocols=("rand4d", "crrcor", "mwcor", "yucor"), seed=42),
        ExperimentSpec(scenario=Scenario.WAKE_UP, area=(400.0, 400.0), runs=2, base_nodes=80,
                       late_counts=(20,), protocols=("rand4d_resp",), seed=42),
        ExperimentSpec(scenario=Scenario.MOBILITY, n=60, area=(250.0, 250.0), runs=1,
                       mobility_slots=1500, protocols=("rand4d",), seed=42),
    ]
    same = True
    files = 0
    for i, spec in enumerate(specs):
        a, b = tmp_path / f"a{i}", tmp_path / f"b{i}"
        run_experiment(spec, a)
        run_experiment(spec, b)
        for f in sorted(a.iterdir()):
            files += 1
            same &= f.read_bytes() == (b / f.name).read_bytes()
    report(12, same, f"{files} CSV files compared byte-for-byte across re-runs")


def test_criterion_13_passivity(report):
    spec = ExperimentSpec(n=120, area=(350.0, 350.0))
    pos = deployment_for(spec, 3)
    topo = build_topology(pos)
    same, n_packets = True, 0
    for p in ("rand4d", "rand4d_final", "crrcor", "mwcor", "yucor"):
        comm = comm_for(spec, p, topo.delta)
        logs = []
        for collect in (True, False):
            sim = simulate(pos, p, comm, 11, collect_metrics=collect, record_packets=True,
                           topology=topo)
            sim.run()
            logs.append(sim.packet_log)
        same &= logs[0] == logs[1]
        n_packets += len(logs[0])
    from sinrcolor.mobility import MobilitySpec
    logs = []
    for collect in (True, False):
        sim = simulate(pos, "rand4d", comm_for(spec, "rand4d", topo.delta), 11,
                       mobility=MobilitySpec(area=(350.0, 350.0)), max_slots=2000,
                       collect_metrics=collect, record_packets=True)
        sim.run()
        logs.append(sim.packet_log)
    same &= logs[0] == logs[1]
    report(13, same, f"packet logs identical with metrics on/off ({n_packets} static packets, "
                     f"{len(logs[0])} mobile)")
