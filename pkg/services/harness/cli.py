"""
Command-line entry point.

    linkpred.py stats [DATASET ...]
    linkpred.py embed
    linkpred.py run
    linkpred.py sweep-walklength [--walk-length R ...]
    linkpred.py gain REPORT_A REPORT_B
    linkpred.py fixtures

Global flags: --config PATH, --seed N, --out DIR, --jobs N, --log-level LEVEL.
Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 numeric failure.
"""

import argparse
import sys
from typing import List, Optional

from loguru import logger

from config import ExperimentConfig, Settings
from exceptions import ConfigError, ContractError, DataError, LinkPredError, NumericError
from services.harness.commands import cmd_embed, cmd_fixtures, cmd_gain, cmd_run, cmd_stats, cmd_sweep_walklength
from services.harness.log_setup import configure_logging

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this project reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _global_flags(default=None) -> argparse.ArgumentParser:
    flags = _Parser(add_help=False, argument_default=default)
    flags.add_argument("--config", help="key=value experiment file (defaults for every key)")
    flags.add_argument("--seed", type=int, help="master seed; replaces the configured seed list")
    flags.add_argument("--out", help="output directory")
    flags.add_argument("--jobs", type=int, help="worker processes for the grid")
    flags.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linkpred", description="Link prediction benchmark harness", parents=[_global_flags()])
    # flags may also follow the subcommand; SUPPRESS keeps a value given before it
    common = _global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    stats = sub.add_parser("stats", parents=[common], help="dataset statistics")
    stats.add_argument("datasets", nargs="*", help="edge-list paths or fixture:<name> (default: configured)")
    sub.add_parser("embed", parents=[common], help="train and write transductive embeddings")
    sub.add_parser("run", parents=[common], help="run the experiment grid")
    sweep = sub.add_parser("sweep-walklength", parents=[common], help="MAP as a function of walk length")
    sweep.add_argument("--walk-length", type=int, action="append", dest="walk_lengths",
                       help="absolute walk length (repeatable); default: configured walk fractions")
    gain = sub.add_parser("gain", parents=[common], help="per-query AP gain of report A over report B")
    gain.add_argument("report_a")
    gain.add_argument("report_b")
    sub.add_parser("fixtures", parents=[common], help="write the bundled synthetic graphs")
    return parser


def load_config(args, settings: Settings) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig(out_dir=settings.out_dir)
    changes = {}
    if args.seed is not None:
        changes["seeds"] = [args.seed]
    if args.out:
        changes["out_dir"] = args.out
    return config.with_overrides(**changes) if changes else config


def dispatch(args, settings: Settings) -> int:
    config = load_config(args, settings)
    jobs = args.jobs if args.jobs is not None else settings.jobs
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    seed = config.seeds[0]

    if args.command == "stats":
        frame = cmd_stats(args.datasets or config.datasets, config.out_dir)
        sys.stdout.write(frame.to_csv(index=False, lineterminator="\n"))
    elif args.command == "embed":
        for path in cmd_embed(config, seed, config.out_dir, settings):
            sys.stdout.write(f"{path}\n")
    elif args.command == "run":
        sys.stdout.write(f"{cmd_run(config, jobs, settings)}\n")
    elif args.command == "sweep-walklength":
        frame = cmd_sweep_walklength(config, jobs, settings, args.walk_lengths)
        sys.stdout.write(frame.to_csv(index=False, lineterminator="\n"))
    elif args.command == "gain":
        for path in cmd_gain(args.report_a, args.report_b, config.out_dir):
            sys.stdout.write(f"{path}\n")
    elif args.command == "fixtures":
        for path in cmd_fixtures(config.out_dir, seed):
            sys.stdout.write(f"{path}\n")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    settings = Settings()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"linkpred: error: {e}\n")
        return EXIT_USAGE
    configure_logging(args.log_level or settings.log_level)

    try:
        return dispatch(args, settings)
    except (ConfigError, ContractError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_USAGE
    except DataError as e:
        logger.error(f"Data error: {e}")
        return EXIT_DATA
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_DATA
    except NumericError as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_NUMERIC
    except LinkPredError as e:
        logger.error(str(e))
        return EXIT_USAGE
