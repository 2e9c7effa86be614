from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from .artifacts import REPORT_FILE, ArtifactWriter, package_version, render_report
from .config import ConfigError, RunConfig, config_to_dict, load_config, resolve_config_source, with_overrides
from .errors import SimulationError
from .logger import configure_logging, run_context
from .models import Validity
from .scenario import run_scenario
from .sweep import run_sweep

OUTPUT_ENV = "AFC_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or general.output_dir)")
    common.add_argument("--grid-points", type=int, help="override grid.n_points")
    common.add_argument("--quiet", action="store_true", help="only errors on the console")

    parser = argparse.ArgumentParser(prog="afcsim", description="Atomic frequency comb memory simulator")
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", parents=[common], help="run one scenario from a preset name or config path")
    run.add_argument("source")
    sweep = commands.add_parser("sweep", parents=[common], help="run the sweep section of a config")
    sweep.add_argument("source")
    return parser


def _prepare(args: argparse.Namespace) -> RunConfig:
    config = load_config(resolve_config_source(args.source))
    if args.grid_points is not None:
        config = with_overrides(config, {"grid.n_points": args.grid_points})
    if args.command == "sweep" and config.sweep is None:
        raise ConfigError("sweep", "the sweep command needs a sweep section")
    return config


def _output_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    return Path(args.out or os.environ.get(OUTPUT_ENV) or config.general.output_dir)


def execute(args: argparse.Namespace, config: RunConfig, logger: logging.Logger) -> List[Path]:
    writer = ArtifactWriter(_output_dir(args, config))
    echoed = config_to_dict(config)
    if args.command == "sweep" or config.general.kind == "sweep":
        result = run_sweep(config)
        writer.add("sweep.csv", result.to_csv())
        writer.add(REPORT_FILE, render_report(echoed, result.stats, Validity()))
    else:
        report = run_scenario(config)
        writer.add_all(report.tables)
        writer.add(REPORT_FILE, render_report(echoed, report.results, report.validity))
        if not report.validity.ok:
            logger.warning("Result outside the validity regime: %s", report.validity)
    return writer.flush()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _prepare(args)
    except ConfigError as exc:
        print(f"Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        logger = configure_logging(config.general, quiet=args.quiet)
    except OSError as exc:
        print(f"Cannot open log file: {exc}", file=sys.stderr)
        return EXIT_IO
    logger.info("afcsim %s, scenario %s from %s", package_version(), config.general.kind, args.source)

    try:
        with run_context(scenario=config.general.kind):
            written = execute(args, config, logger)
    except ConfigError as exc:
        logger.error("Config error: %s", exc)
        print(f"Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        logger.exception("Simulation failed: %s", exc)
        print(f"Simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as exc:
        logger.exception("Writing artifacts failed: %s", exc)
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    logger.info("Run finished: files=%s", len(written))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
