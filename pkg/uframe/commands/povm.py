"""
The ``povm`` subcommand group.

Commands:
- povm check <file> [--ancilla A]: positivity and completeness of a POVM file,
  informational completeness, and with --ancilla the universality of a
  bipartite POVM for that ancilla (keyword or matrix file).
"""
import argparse
from pathlib import Path

from uframe.commands.inputs import resolve_ancilla
from uframe.errors import ShapeMismatchError
from uframe.povm.measurement import is_info_complete, universality_report
from uframe.schemas import PovmCheckReport, PovmFile


def register(subparsers) -> None:
    """
    Add the povm sub-commands.
    """
    parser = subparsers.add_parser("povm", help="Inspect POVMs.")
    actions = parser.add_subparsers(dest="action", required=True)

    check = actions.add_parser("check", help="Validate a POVM file.")
    check.add_argument("file", type=Path, help="JSON POVM file.")
    check.add_argument("--ancilla", default=None, help="Ancilla keyword or matrix file for the universality test.")
    check.set_defaults(handler=check_povm)


def check_povm(args: argparse.Namespace) -> PovmCheckReport:
    """
    Validity, informational completeness and optional universality of a POVM file.
    """
    povm = PovmFile.model_validate_json(args.file.read_text(encoding="utf-8")).to_povm()
    povm.require_valid()
    universality = None
    if args.ancilla is not None:
        if not povm.is_bipartite:
            raise ShapeMismatchError("--ancilla needs a POVM file with dim_h and dim_k")
        universality = universality_report(povm, resolve_ancilla(args.ancilla, povm.dim_k))
    return PovmCheckReport(povm=povm.report, info_complete=is_info_complete(povm), universality=universality)
