"""
The ``covariant`` subcommand group.

Commands:
- covariant weyl --d D [--check]: Weyl group diagnostics, the abelian ancilla
  and the closed-form dual checked against the numerically computed one.
  With --check any diagnostic above tolerance is an error.
- covariant sud --d D --ancilla A: analytic SU(d) frame parameters and the
  canonical covariant xi for an ancilla.
"""
import argparse
import logging

import numpy as np

from uframe.commands.inputs import resolve_ancilla
from uframe.config import DUAL_TOL, HERMITIAN_TOL
from uframe.covariant.sud import (
    covariant_dual_check,
    sud_canonical_dual_xi,
    sud_frame_eigenvalues,
    sud_params,
)
from uframe.covariant.weyl import (
    abelian_dual,
    abelian_frame,
    ancilla_traces,
    weyl_bell_povm,
    weyl_diagnostics,
    weyl_system,
)
from uframe.errors import UFrameError
from uframe.estimation.variance import xi_noise_coefficient
from uframe.frames.operator_frame import canonical_dual, completeness_defect
from uframe.schemas import MatrixSchema, SudCheckReport, WeylCheckReport

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    """
    Add the covariant sub-commands.
    """
    parser = subparsers.add_parser("covariant", help="Group-covariant universal detectors.")
    actions = parser.add_subparsers(dest="action", required=True)

    weyl = actions.add_parser("weyl", help="Discrete Weyl-Heisenberg detector.")
    weyl.add_argument("--d", type=int, default=2, help="Dimension of the system.")
    weyl.add_argument("--ancilla", default="paper-abelian", help="Ancilla keyword or matrix file.")
    weyl.add_argument("--check", action="store_true", help="Fail when a diagnostic exceeds tolerance.")
    weyl.set_defaults(handler=check_weyl)

    sud = actions.add_parser("sud", help="SU(d) covariant detector.")
    sud.add_argument("--d", type=int, default=2, help="Dimension of the system.")
    sud.add_argument("--ancilla", default="pure-basis", help="Ancilla keyword or matrix file.")
    sud.set_defaults(handler=check_sud)


def check_weyl(args: argparse.Namespace) -> WeylCheckReport:
    """
    Weyl group diagnostics and the closed-form dual against the numerical one.
    """
    w = weyl_system(args.d)
    nu = resolve_ancilla(args.ancilla, args.d)
    diagnostics = weyl_diagnostics(w)
    frame = abelian_frame(w, nu)
    dual = abelian_dual(w, nu)
    unique = canonical_dual(frame)
    report = WeylCheckReport(
        **diagnostics.model_dump(),
        bell_completeness_defect=weyl_bell_povm(w).povm.report.completeness_defect,
        ancilla=MatrixSchema.from_matrix(nu.matrix),
        ancilla_min_eigenvalue=float(np.linalg.eigvalsh(nu.matrix)[0]),
        min_abs_trace=float(np.abs(ancilla_traces(w, nu)).min()),
        dual_completeness_defect=completeness_defect(frame, dual),
        unique_dual_distance=float(np.linalg.norm(dual.elements - unique.elements)),
    )
    if args.check:
        worst = max(report.max_unitarity_error, report.max_orthogonality_error, report.max_cocycle_error)
        if worst > HERMITIAN_TOL:
            raise UFrameError(f"Weyl system check failed: error {worst:.3e}")
        if report.dual_completeness_defect > DUAL_TOL or report.unique_dual_distance > DUAL_TOL:
            raise UFrameError(
                f"closed-form dual check failed: defect {report.dual_completeness_defect:.3e}, "
                f"distance {report.unique_dual_distance:.3e}"
            )
    return report


def check_sud(args: argparse.Namespace) -> SudCheckReport:
    """
    Analytic SU(d) frame parameters and the canonical seed operator.
    """
    nu = resolve_ancilla(args.ancilla, args.d)
    params = sud_params(nu)
    xi = sud_canonical_dual_xi(nu)
    return SudCheckReport(
        **params.model_dump(),
        eigenvalues=list(sud_frame_eigenvalues(params.d, params.p)),
        xi=MatrixSchema.from_matrix(xi.xi),
        xi_purity=xi.purity,
        dual_conditions_hold=covariant_dual_check(xi, nu),
        noise_coefficient=xi_noise_coefficient(xi),
    )
