"""Command-line front end for epsilon sweeps.

    dpswarm-experiment --synthetic 1000,4,0.05 --algorithms PSO,GWO --both \
        --epsilons 0.1,1,10 --iterations 30 --population 30 --folds 5 --repeats 2 --out runs/demo

Writes ``results.csv``, ``summary.csv`` and ``plots/*.tsv`` under ``--out``
(plus ``ledgers/*.csv`` with ``--ledgers``).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiment import (
    DEFAULT_EPSILONS,
    ExperimentConfig,
    emit_plot_data,
    run_experiment,
    summarize,
    write_records,
    write_summary,
)


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpswarm-experiment", description=__doc__.split("\n")[0])
    src = p.add_argument_group("data source")
    src.add_argument("--config", help="JSON file mirroring ExperimentConfig; flags override it")
    src.add_argument("--dataset", help="CSV file with one header row")
    src.add_argument("--synthetic", help="n,d,noise_sd for a synthetic linear dataset")
    src.add_argument("--target", help="target column name (default: last column)")
    src.add_argument("--subsample", type=int, help="use a seeded random subset of this many rows")
    p.add_argument("--algorithms", help="comma list of PSO,CPSO,SPSO,GWO,WOA,SOA")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--private", dest="modes", action="store_const", const=(True,))
    mode.add_argument("--non-private", dest="modes", action="store_const", const=(False,))
    mode.add_argument("--both", dest="modes", action="store_const", const=(True, False))
    p.add_argument("--epsilons", help=f"comma list (default {','.join(map(str, DEFAULT_EPSILONS))})")
    p.add_argument("--iterations", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bounds", type=float, help="half-width w_max of the search box")
    p.add_argument("--sensitivity-mode", choices=["per-pair", "global"])
    p.add_argument("--disclosure", choices=["faithful", "strict"])
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="record wall-clock runtime_ms (breaks byte-identical reruns)")
    p.add_argument("--ledgers", action="store_true", help="write one ledger CSV per private run")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    out = Path(args.out)
    overrides = {
        "dataset": args.dataset,
        "synthetic": _floats(args.synthetic) if args.synthetic else None,
        "target": args.target,
        "subsample": args.subsample,
        "algorithms": tuple(a.strip() for a in args.algorithms.split(",")) if args.algorithms else None,
        "private_modes": args.modes,
        "epsilons": _floats(args.epsilons) if args.epsilons else None,
        "iterations": args.iterations,
        "population": args.population,
        "folds": args.folds,
        "repeats": args.repeats,
        "seed": args.seed,
        "w_max": args.bounds,
        "sensitivity_mode": args.sensitivity_mode,
        "disclosure": args.disclosure,
        "workers": args.workers,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.dataset:
        base.pop("synthetic", None)
    elif args.synthetic:
        base.pop("dataset", None)
    if "synthetic" in base and base["synthetic"] is not None:
        n, d, noise = base["synthetic"]
        base["synthetic"] = (int(n), int(d), float(noise))
    if args.timing:
        base["measure_runtime"] = True
    if args.ledgers:
        base["ledger_dir"] = str(out / "ledgers")
    base["results_path"] = str(out / "results.csv")
    return ExperimentConfig(**base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json())
    errors = []
    records = run_experiment(cfg, errors)
    # rewrite in canonical order (resumed sweeps append out of order)
    write_records(records, out / "results.csv")
    if records:
        summary = summarize(records)
        write_summary(summary, out / "summary.csv")
        emit_plot_data(summary, out / "plots")
        for row in summary.values():
            tag = "DP" + row.algorithm if row.private else row.algorithm
            print(f"{tag:8s} eps={row.epsilon:<10g} mean_rmse={row.mean_rmse:.6f} n={row.count}")
    if errors:
        print(f"{len(errors)} cell(s) failed:", file=sys.stderr)
        for e in errors:
            print(f"  {e.algorithm} private={e.private} eps={e.epsilon} repeat={e.repeat} "
                  f"fold={e.fold}: {e.message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
