"""Command line entry point.

    basketae price --config run.json --method mc|ae|cv
    basketae table --id 1 --scale desk --out results/
    basketae vol-surface --config run.json --out surface.csv
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .config import ConfigError, load_config
from .expansion import build_surface
from .harness import METHODS, emit_table, run_price
from .model import ModelError, TruncationError
from .pide import SolverFailure, StabilityViolation

EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

_NUMERICAL = (SolverFailure, StabilityViolation, TruncationError, FloatingPointError,
              ArithmeticError, np.linalg.LinAlgError)


def _cmd_price(args):
    cfg = load_config(args.config)
    results = run_price(cfg, args.method)
    payload = {
        "config": results[0].config if results else {},
        "results": [
            {"method": r.method, "T": r.maturity, "K": r.strike, "price": r.price,
             "stderr": r.stderr, "seconds": round(r.seconds, 3)}
            for r in results
        ],
    }
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")
    csv_path = cfg.output.get("csv")
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["method", "T", "K", "price", "stderr"])
            for r in results:
                out.writerow([r.method, f"{r.maturity:g}", f"{r.strike:g}", f"{r.price:.6f}",
                              "" if r.stderr is None else f"{r.stderr:.6f}"])
    if cfg.output.get("plots"):
        _price_plots(cfg, args.method, csv_path)


def _price_plots(cfg, method, csv_path):
    from . import plots
    from .estimators import AsymptoticExpansionPricer
    from .montecarlo import price_mc

    stem = os.path.splitext(csv_path)[0] if csv_path else "basketae"
    T = cfg.maturities[-1]
    if method == "mc":
        res = price_mc(cfg.model, cfg.options[-1], cfg.mc)
        plots.mc_convergence(res, f"{stem}_mc_convergence.svg")
        return
    pricer = AsymptoticExpansionPricer(**cfg.pide).fit(cfg.model, cfg.maturities)
    plots.price_vs_strike(pricer, T, f"{stem}_price_vs_strike.svg")
    plots.local_vol_slice(pricer.surface_, T, f"{stem}_local_vol.svg")


def _cmd_table(args):
    rows, path = emit_table(args.id, args.scale, args.out, plots=args.plots,
                            methods=tuple(args.methods.split(",")))
    print(path)
    failed = [r for r in rows if r.errors]
    if failed:
        print(f"{len(failed)} row(s) recorded errors", file=sys.stderr)


def _cmd_vol_surface(args):
    cfg = load_config(args.config)
    maturities = np.linspace(0, max(cfg.maturities), args.points + 1)[1:]
    surface = build_surface(cfg.model, maturities, cfg.pide.get("var_floor"))
    spot = surface.spot
    strikes = spot * np.linspace(0.5, 1.5, args.strikes)
    surface.to_csv(args.out, strikes)
    print(args.out)


def build_parser():
    p = argparse.ArgumentParser(prog="basketae", description=__doc__.splitlines()[0] or None)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    price = sub.add_parser("price", help="price the configured basket call")
    price.add_argument("--config", required=True)
    price.add_argument("--method", choices=METHODS, required=True)
    price.set_defaults(func=_cmd_price)

    table = sub.add_parser("table", help="reproduce a benchmark table as CSV")
    table.add_argument("--id", type=int, choices=(1, 2, 3, 4), required=True)
    table.add_argument("--scale", choices=("desk", "paper"), default="desk")
    table.add_argument("--out", default=".")
    table.add_argument("--methods", default=",".join(METHODS),
                       help="comma separated subset of mc,ae,cv")
    table.add_argument("--plots", action="store_true")
    table.set_defaults(func=_cmd_table)

    vs = sub.add_parser("vol-surface", help="dump the approximate local-vol surface")
    vs.add_argument("--config", required=True)
    vs.add_argument("--out", required=True)
    vs.add_argument("--points", type=int, default=64, help="number of maturities")
    vs.add_argument("--strikes", type=int, default=21, help="number of sampled strikes")
    vs.set_defaults(func=_cmd_vol_surface)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if getattr(args, "methods", None):
        bad = set(args.methods.split(",")) - set(METHODS)
        if bad:
            print(f"error: unknown method(s) {sorted(bad)}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        args.func(args)
    except (ConfigError, ModelError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
