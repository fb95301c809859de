"""
The ``estimate`` subcommand group.

Commands:
- estimate run --config cfg.json [--d D] [--seed S] [--shots N] [--output report.json] [--csv shots.csv]

Flags given on the command line override the configuration file. The JSON
report embeds the resolved configuration; --csv writes the per-shot rows of
experiments that produce them.
"""
import argparse
import csv
import logging
from pathlib import Path

from uframe.commands.experiments import CsvRows, run_experiment
from uframe.schemas import ExperimentConfig, ExperimentReport

logger = logging.getLogger(__name__)

OVERRIDES = ("d", "seed", "shots", "threads", "output", "csv")


def register(subparsers) -> None:
    """
    Add the estimate sub-commands.
    """
    parser = subparsers.add_parser("estimate", help="Run estimation experiments.")
    actions = parser.add_subparsers(dest="action", required=True)

    run = actions.add_parser("run", help="Run the experiment described by a configuration file.")
    run.add_argument("--config", type=Path, default=None, help="JSON experiment configuration.")
    run.add_argument("--d", type=int, default=None, help="Override the dimension.")
    run.add_argument("--seed", type=int, default=None, help="Override the seed.")
    run.add_argument("--shots", type=int, default=None, help="Override the number of shots.")
    run.add_argument("--threads", type=int, default=None, help="Override the sampling threads.")
    run.add_argument("--output", default=None, help="Write the JSON report here instead of stdout.")
    run.add_argument("--csv", default=None, help="Write per-shot rows as CSV.")
    run.set_defaults(handler=run_config)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Load the configuration file, or defaults, and apply command-line overrides.
    """
    config = ExperimentConfig.load(args.config) if args.config is not None else ExperimentConfig()
    updates = {name: getattr(args, name) for name in OVERRIDES if getattr(args, name) is not None}
    if not updates:
        return config
    # re-validate so that overrides obey the same constraints as the file
    return ExperimentConfig.model_validate(config.model_dump() | updates)


def write_csv(path: str, rows: CsvRows) -> None:
    """
    Write rows to path with a header taken from the first row.
    """
    if not rows:
        logger.warning("%s: this experiment has no per-shot rows", path)
        return
    with open(path, mode="w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %d rows to %s", len(rows), path)


def run_config(args: argparse.Namespace) -> ExperimentReport:
    """
    Run the resolved experiment and write its CSV rows when configured.
    """
    config = resolve_config(args)
    report, rows = run_experiment(config)
    if config.csv:
        write_csv(config.csv, rows)
    return report
