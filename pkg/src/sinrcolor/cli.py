"""Command line entry point: ``sinrcolor <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (COMPARISON_PROTOCOLS, RAND_PROTOCOLS, ExperimentSpec, Scenario,
                      calibrate_lb, gen_positions, load_config, run_experiment,
                      spec_from_mapping, write_rows)


def _csv_list(kind):
    def parse(s):
        return tuple(kind(x) for x in s.replace(",", " ").split())
    return parse


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sinrcolor", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file with [subcommand] sections")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--runs", type=int, help="runs per parameter point")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--paper-scale", action="store_true",
                        help="n=1000 on 1000 x 1000 m and 100 runs")
    common.add_argument("--strategy", help="deployment strategy (random, grid, ...)")
    common.add_argument("--n", type=int, help="number of nodes")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--max-slots", type=float, dest="max_slots")
    common.add_argument("--positions-dir", dest="positions_dir",
                        help="read deployments from position files when present")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-positions", parents=[common], help="write position files")
    p = sub.add_parser("calibrate", parents=[common], help="local-broadcast calibration")
    p.add_argument("--tx-consts", type=_csv_list(float), dest="tx_consts")
    p = sub.add_parser("run", parents=[common], help="run protocols once per seed")
    p.add_argument("--protocol", type=_csv_list(str), dest="protocols")
    p.add_argument("--factor", type=float)
    p.add_argument("--duration-prime", type=int, dest="duration_prime")
    p = sub.add_parser("sweep", parents=[common], help="sweep factor, duration' or initial palette")
    p.add_argument("--protocol", type=_csv_list(str), dest="protocols")
    p.add_argument("--param", choices=["factor", "duration_prime", "init_palette"], default="factor")
    p.add_argument("--values", type=_csv_list(float))
    p = sub.add_parser("compare", parents=[common], help="protocol comparison")
    p.add_argument("--protocol", type=_csv_list(str), dest="protocols")
    p.add_argument("--rand-variants", action="store_true", help="compare the Rand family")
    p = sub.add_parser("mobility", parents=[common], help="random-direction mobility")
    p.add_argument("--protocol", type=_csv_list(str), dest="protocols")
    p.add_argument("--speeds", type=_csv_list(float))
    p.add_argument("--slots", type=int, dest="mobility_slots")
    p = sub.add_parser("wakeup", parents=[common], help="late wake-up of extra nodes")
    p.add_argument("--protocol", type=_csv_list(str), dest="protocols")
    p.add_argument("--late", type=_csv_list(int), dest="late_counts")
    p.add_argument("--base-nodes", type=int, dest="base_nodes")
    return ap


_SCENARIO = {
    "gen-positions": Scenario.RUN_ONCE, "calibrate": Scenario.LB_CALIBRATION,
    "run": Scenario.RUN_ONCE, "compare": Scenario.COMPARISON,
    "mobility": Scenario.MOBILITY, "wakeup": Scenario.WAKE_UP,
}


def build_spec(args) -> ExperimentSpec:
    values = load_config(args.config, args.command) if args.config else {}
    values.pop("scenario", None)
    over = {k: getattr(args, k, None) for k in
            ("seed", "runs", "n", "jobs", "max_slots", "positions_dir", "protocols",
             "factor", "duration_prime", "tx_consts", "speeds", "mobility_slots",
             "late_counts", "base_nodes")}
    if "protocols" in values:
        # a config file's protocol list beats the per-command default
        over["protocols"] = over["protocols"] or tuple(
            x for x in values["protocols"].replace(",", " ").split())
    if args.strategy:
        over["strategy"] = args.strategy
    if args.command == "sweep":
        scen = {"factor": Scenario.FACTOR_SWEEP, "duration_prime": Scenario.DURATION_PRIME_SWEEP,
                "init_palette": Scenario.INITIAL_COLOR_STUDY}[args.param]
        vals = args.values
        if args.param == "factor":
            over["factors"] = vals or (0.05, 0.2, 0.6)
            over.setdefault("protocols", None)
            over["protocols"] = over["protocols"] or ("crrand", "mw")
        elif args.param == "duration_prime":
            over["duration_primes"] = tuple(int(v) for v in vals) if vals else (287, 575, 1150)
            over["protocols"] = over["protocols"] or ("crrcor", "mwcor", "yucor")
        else:
            over["init_mults"] = vals or (1.0, 2.0)
            over["protocols"] = over["protocols"] or ("crrand",)
    else:
        scen = _SCENARIO[args.command]
        if args.command == "compare":
            if getattr(args, "rand_variants", False):
                scen = Scenario.RAND_VARIANTS
                over["protocols"] = over["protocols"] or RAND_PROTOCOLS
            else:
                over["protocols"] = over["protocols"] or COMPARISON_PROTOCOLS
        elif args.command == "mobility":
            over["protocols"] = over["protocols"] or ("rand4d", "crrcor", "mwcor", "yucor")
        elif args.command == "wakeup":
            over["protocols"] = over["protocols"] or ("rand4d", "rand4d_resp", "crrcor", "mwcor")
            if "area" not in values:
                over["area"] = (1000.0, 1000.0)
    over["scenario"] = scen
    spec = spec_from_mapping(values, **over)
    if args.paper_scale:
        spec = spec.paper_scale()
        # explicit command-line values still win
        spec = replace(spec, **{k: v for k, v in over.items() if v is not None and k in ("runs", "n")})
    return spec


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        spec = build_spec(args)
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = args.out
    if args.command == "gen-positions":
        paths = gen_positions(spec, out)
        print(f"wrote {len(paths)} position files to {out}")
        return 0
    if args.command == "calibrate":
        best, duration, means = calibrate_lb(spec)
        out.mkdir(parents=True, exist_ok=True)
        rows = [{"tx_const": tx, "lb_runtime_mean": m, "best": tx == best,
                 "duration": duration if tx == best else None} for tx, m in means.items()]
        write_rows(out / "calibration.csv", ["tx_const", "lb_runtime_mean", "best", "duration"], rows)
        print(f"tx_const={best} duration={duration}")
        return 0
    rows, summary = run_experiment(spec, out)
    for s in summary:
        rt = s["runtime_mean"]
        print(f"{s['protocol']:<18} runs={s['runs']:<4} runtime={rt if rt is None else round(rt, 1)} "
              f"conflicts={s['conflicts_mean']} disturbed={s['disturbed_mean']} "
              f"valid={s['valid_fraction_mean']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
