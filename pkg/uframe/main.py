"""
Command-line application: builds the parser from the subcommand modules and
maps errors to exit codes.

Exit codes:
- 0: success, the report is written to --output or stdout.
- 1: a file could not be read or written.
- 2: invalid input or a failed validation (singular frame, invalid POVM, ...).
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import BaseModel, ValidationError

from uframe.commands import covariant, estimate, frame, povm
from uframe.config import UFRAME_LOG_LEVEL
from uframe.errors import UFrameError
from uframe.schemas import ExperimentReport

logger = logging.getLogger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """
    Create and configure the argument parser.
    """
    parser = argparse.ArgumentParser(
        prog="uframe",
        description="Universal detectors, operator frames and their estimation noise.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # one module per subcommand group
    frame.register(subparsers)
    povm.register(subparsers)
    covariant.register(subparsers)
    estimate.register(subparsers)

    return parser


def configure_logging(level: str = UFRAME_LOG_LEVEL) -> None:
    """
    Configure root logging to standard error at the given level.
    """
    logging.basicConfig(
        stream=sys.stderr,
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def write_report(report: BaseModel) -> None:
    """
    Write a report as JSON to its configured output file, or to standard output.
    """
    payload = report.model_dump_json(indent=2)
    output = report.config.output if isinstance(report, ExperimentReport) else None
    if output:
        Path(output).write_text(payload + "\n", encoding="utf-8")
        logger.info("report written to %s", output)
    else:
        sys.stdout.write(payload + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    """
    Parse argv, run the selected command and return the process exit code.

    0 on success, 1 when a file cannot be read or written, and the error's exit
    code (2 for invalid input) otherwise. Errors are printed to stderr as "error: ...".
    """
    parser = create_parser()
    args = parser.parse_args(argv)
    configure_logging()
    try:
        write_report(args.handler(args))
    except UFrameError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
