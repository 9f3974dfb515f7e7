"""``hoalm-bench``: reference, run, sweep, stability, certify and render subcommands.

Exit codes: 0 success, 1 solver failure, 2 configuration error,
3 non-advisory certificate failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, SweepConfig, load_json
from .io import TraceFormatError
from .svg import render_svg

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_CERTIFICATE = 0, 1, 2, 3

log = logging.getLogger("hoalm.bench")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hoalm-bench", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="log progress and inner solver iterations")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, config=True):
        p = sub.add_parser(name, help=help_text, parents=[common])
        if config:
            p.add_argument("--config", required=True, type=Path, help="experiment config (JSON)")
        p.add_argument("--out", required=True, type=Path, help="output directory (or file for render)")
        return p

    add("reference", "compute and cache the reference solution")
    p = add("run", "run one experiment and write trace.csv")
    p.add_argument("--no-reference", action="store_true", help="run without a reference; error columns stay empty")
    p = add("sweep", "run an (r, epsilon) grid")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--no-reference", action="store_true", help="skip the reference and rate classification")
    add("stability", "compare explicit and stable dual updates")
    p = add("certify", "check convergence-rate certificates on a fresh run")
    p.add_argument("--theorem", action="append", dest="theorems",
                   choices=["linear", "superlinear", "sublinear", "primal_bregman", "dual_descent"],
                   help="check to run (repeatable); defaults follow from r and p")
    p = add("render", "draw CSV traces as an SVG chart", config=False)
    p.add_argument("csv", nargs="+", type=Path, help="trace CSV files")
    p.add_argument("--column", default="dual_err", help="column to plot (log scale)")
    p.add_argument("--label", action="append", dest="labels", help="legend entry per CSV (repeatable)")
    p.add_argument("--title")
    return parser


def _experiment(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(load_json(path))


def _dispatch(args) -> int:
    if args.command == "reference":
        cfg = _experiment(args.config)
        ref_dir = Path(cfg.reference_dir) if cfg.reference_dir else args.out / "references"
        res = ex.compute_reference(cfg.problem, ref_dir)
        print(json.dumps({"path": str(res.path), "fingerprint": res.solution.fingerprint,
                          "cache_hit": res.cache_hit, "iterations": res.solver_iterations}))
        return EXIT_OK
    if args.command == "run":
        cfg = _experiment(args.config)
        res = ex.run_experiment(cfg, args.out, use_reference=not args.no_reference)
        print(res.csv_path)
        if res.failure:
            log.error("solver failure: %s", res.failure)
            return EXIT_SOLVER
        return EXIT_OK
    if args.command == "sweep":
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = SweepConfig.from_dict(load_json(args.config))
        summary = ex.sweep(cfg, args.out, jobs=args.jobs, use_reference=not args.no_reference)
        print(args.out / "summary.json")
        return EXIT_SOLVER if summary["failed"] else EXIT_OK
    if args.command == "stability":
        cmp = ex.stability_experiment(_experiment(args.config), args.out)
        print(json.dumps(cmp, sort_keys=True))
        return EXIT_SOLVER if cmp["failure_explicit"] or cmp["failure_stable"] else EXIT_OK
    if args.command == "certify":
        doc = ex.certify(_experiment(args.config), args.out, theorems=args.theorems)
        for rep in doc["reports"]:
            tag = "PASS" if rep["passed"] else ("WARN" if rep["advisory"] else "FAIL")
            print(f"{tag} {rep['theorem']}" + (" (advisory)" if rep["advisory"] else ""))
        return EXIT_CERTIFICATE if doc["hard_failure"] else EXIT_OK
    if args.command == "render":
        if args.labels and len(args.labels) != len(args.csv):
            raise ConfigError("give one --label per CSV or none")
        print(render_svg(args.csv, args.column, args.out, labels=args.labels, title=args.title))
        return EXIT_OK
    raise ConfigError(f"unknown command {args.command}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.verbose:
        logging.getLogger("hoalm").setLevel(logging.DEBUG)
    try:
        return _dispatch(args)
    except (ConfigError, ex.MissingReference, TraceFormatError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except ValueError as exc:
        # bad render column, unknown theorem name, unsupported norm pair
        log.error("%s", exc)
        return EXIT_CONFIG
    except ex.SolverFailure as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
