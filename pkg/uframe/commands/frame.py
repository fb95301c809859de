"""
The ``frame`` subcommand group.

Commands:
- frame check <file>: frame bounds of the operators in a FrameFile and, when
  they form a frame, the completeness defect of the canonical dual.
"""
import argparse
import logging
from pathlib import Path

from uframe.frames.operator_frame import canonical_dual, completeness_defect, frame_summary
from uframe.schemas import FrameCheckReport, FrameFile

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    """
    Add the frame sub-commands.
    """
    parser = subparsers.add_parser("frame", help="Inspect operator frames.")
    actions = parser.add_subparsers(dest="action", required=True)

    check = actions.add_parser("check", help="Frame bounds and canonical dual of a frame file.")
    check.add_argument("file", type=Path, help="JSON frame file.")
    check.set_defaults(handler=check_frame)


def check_frame(args: argparse.Namespace) -> FrameCheckReport:
    """
    Frame bounds of a frame file and the defect of its canonical dual.
    """
    frame = FrameFile.model_validate_json(args.file.read_text(encoding="utf-8")).to_frame()
    summary = frame_summary(frame)
    defect = None
    if summary["is_frame"]:
        defect = completeness_defect(frame, canonical_dual(frame))
    else:
        logger.warning("%s does not span the operator space", args.file)
    return FrameCheckReport(**summary, canonical_dual_defect=defect)
