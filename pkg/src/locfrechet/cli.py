"""Command line entry points.

Subcommands: simulate, ingest, predict, cv, summarize.  Experiment
configs are JSON files validated against the full schema before any
work starts.  Exit codes: 0 success, 2 config error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (
    AllNodesFailedError,
    ConfigError,
    EmptyFileError,
    EmptyReportError,
    InvalidPointError,
    LocFrechetError,
    MalformedRowError,
    NonMonotoneTimeError,
)
from .evaluation import (
    ExperimentConfig,
    ingest_magsat_csv,
    load_sample,
    read_report,
    run_cv,
    summarize,
    write_report,
)
from .extrinsic import BandwidthSpec, extrinsic_predict, save_prediction_csv
from .intrinsic import GeodesicKernel, predict_curve
from .intrinsic import save_prediction_csv as save_intrinsic_csv
from .simulation import SimulationConfig, generate_dataset, load_dataset, save_dataset
from .tangent import fit_tangent_basis

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_DATA_ERRORS = (MalformedRowError, NonMonotoneTimeError, EmptyFileError,
                InvalidPointError, EmptyReportError, FileNotFoundError)


def _cmd_simulate(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    cfg = SimulationConfig(**raw)
    sample = generate_dataset(cfg)
    os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
    meta = args.metadata or os.path.splitext(args.output)[0] + "_metadata.json"
    save_dataset(sample, args.output, meta)
    print(f"wrote {sample.n} curve pairs on {sample.grid.n_nodes} nodes to {args.output}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    sample = ingest_magsat_csv(args.input, args.nodes_per_curve)
    meta = args.metadata or os.path.splitext(args.output)[0] + "_metadata.json"
    save_dataset(sample, args.output, meta)
    print(f"ingested {sample.n} curve pairs from {args.input}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    sample = load_dataset(args.data)
    if not 0 <= args.target < sample.n:
        raise ConfigError(f"target index {args.target} out of range for n={sample.n}")
    x0 = sample.regressors[args.target]
    if args.predictor == "EXTRINSIC":
        component_set = [int(c) for c in args.component_set.split(",")]
        basis = fit_tangent_basis(
            sample.regressors, sample.responses, args.n_basis_components
        )
        pred = extrinsic_predict(
            sample, x0, basis, component_set, BandwidthSpec(args.bandwidth)
        )
        save_prediction_csv(pred, args.output)
        flagged = int(pred.clipped.sum())
        print(f"wrote extrinsic prediction to {args.output} ({flagged} clipped nodes)")
    else:
        pred = predict_curve(args.predictor, sample, x0, GeodesicKernel(args.bandwidth))
        save_intrinsic_csv(pred, args.output)
        print(
            f"wrote {args.predictor} prediction to {args.output} "
            f"({pred.n_interpolated} interpolated nodes)"
        )
    return EXIT_OK


def _cmd_cv(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    sample = load_sample(cfg)
    report = run_cv(cfg, sample)
    write_report(report, cfg.output_dir)
    summarize(report, cfg.output_dir)
    print(f"cross-validation report written to {cfg.output_dir}")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    report = read_report(args.report_dir)
    outdir = args.output_dir or args.report_dir
    summarize(report, outdir)
    print(f"summary files written to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locfrechet",
        description="Local Frechet curve regression on the sphere",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic curve sample")
    p.add_argument("--config", required=True, help="SimulationConfig JSON file")
    p.add_argument("--output", required=True, help="dataset CSV path")
    p.add_argument("--metadata", help="metadata JSON path (default: alongside output)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ingest", help="convert a satellite CSV into a curve sample")
    p.add_argument("--input", required=True)
    p.add_argument("--nodes-per-curve", type=int, required=True, dest="nodes_per_curve")
    p.add_argument("--output", required=True)
    p.add_argument("--metadata")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("predict", help="predict one response curve in-sample")
    p.add_argument("--data", required=True, help="dataset CSV (shared format)")
    p.add_argument("--predictor", choices=["NW", "LL", "EXTRINSIC"], required=True)
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--target", type=int, required=True, help="sample index to predict")
    p.add_argument("--component-set", default="0,1,2", dest="component_set",
                   help="extrinsic only: comma-separated component indices")
    p.add_argument("--n-basis-components", type=int, default=6, dest="n_basis_components")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("cv", help="run k-fold cross-validation")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON file")
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("summarize", help="derive summary files from a written report")
    p.add_argument("--report-dir", required=True, dest="report_dir")
    p.add_argument("--output-dir", dest="output_dir")
    p.set_defaults(func=_cmd_summarize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AllNodesFailedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LocFrechetError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
