"""
Experiment runners behind ``estimate run``.

Each runner takes a resolved ExperimentConfig and returns its report together
with optional per-shot rows for the CSV output. All randomness flows from
``config.seed``: one generator for auxiliary draws (observables, states, test
operators) and seeded substreams for the samplers.

Runners:
- estimate: Monte Carlo estimate of Tr[rho O] with the chosen detector.
- reconstruct: expansion of random operators through the detector's dual.
- universality: frame bounds of the detector with the chosen ancilla.
- variance-scan: optimal noise coefficient over a grid of ancilla purities.
- optimality-demo: noise of the canonical covariant dual against the ideal measurement.
- haar-check: Monte Carlo check of the Haar moment identities.
"""
import logging
from typing import Callable

import numpy as np

from uframe.commands.inputs import resolve_ancilla, resolve_observable, resolve_state
from uframe.config import PSD_TOL
from uframe.covariant.sud import (
    covariant_perturbation,
    isotropic_ancilla,
    sud_bell_povm,
    sud_canonical_dual_xi,
    sud_processing_values,
)
from uframe.covariant.weyl import abelian_dual, abelian_frame, weyl_bell_povm, weyl_system
from uframe.errors import ConfigurationError, SingularFrameError
from uframe.estimation.haar import haar_identity_check
from uframe.estimation.parallel import worker_count
from uframe.estimation.sampling import covariant_sample, mc_estimate, sample_outcomes
from uframe.estimation.variance import (
    average_variance_exact,
    delta_obs_analytic,
    delta_opt_analytic,
    variance_report,
)
from uframe.frames.operator_frame import (
    DualFrame,
    OperatorFrame,
    canonical_dual,
    completeness_defect,
    reconstruction_error,
)
from uframe.povm.measurement import DensityMatrix, Povm, processing_function, universality_report, xi_frame
from uframe.schemas import (
    EstimateReport,
    ExperimentConfig,
    ExperimentReport,
    HaarCheckReport,
    OptimalityReport,
    ReconstructReport,
    UniversalityExperimentReport,
    VarianceScanReport,
    VarianceScanRow,
)

logger = logging.getLogger(__name__)

CsvRows = list[dict[str, float]] | None

SCAN_POINTS = 20
SCAN_SPOT_CHECKS = (0.6, 1.0)
RECONSTRUCT_OPERATORS = 50
PERTURBATIONS = 100


def _is_maximally_mixed(nu: DensityMatrix) -> bool:
    return nu.purity <= 1 / nu.dim + 1e-10


def _detector_povm(config: ExperimentConfig, rng: np.random.Generator) -> Povm:
    if config.detector == "weyl":
        return weyl_bell_povm(weyl_system(config.d)).povm
    return sud_bell_povm(config.d, config.quadrature, rng).povm


def _detector_frame(
    config: ExperimentConfig,
    nu: DensityMatrix,
    rng: np.random.Generator,
) -> tuple[OperatorFrame, DualFrame]:
    """
    System frame and its dual: closed form for the Weyl detector, the canonical
    dual of the quadrature Bell POVM otherwise.
    """
    if _is_maximally_mixed(nu):
        raise SingularFrameError("frame singular: nu = I/d")
    if config.detector == "weyl":
        w = weyl_system(config.d)
        return abelian_frame(w, nu), abelian_dual(w, nu)
    frame = xi_frame(_detector_povm(config, rng), nu)
    return frame, canonical_dual(frame)


def run_estimate(config: ExperimentConfig) -> tuple[EstimateReport, CsvRows]:
    """
    Monte Carlo estimate of Tr[rho O] next to the exact value and the detector noise.
    """
    rng = np.random.default_rng(config.seed)
    d = config.d
    nu = resolve_ancilla(config.ancilla, d)
    o = resolve_observable(config.observable, d, rng)
    rho = resolve_state(config.state, d, rng)
    if not o.hermitian:
        raise ConfigurationError("estimate run expects a Hermitian observable")
    if _is_maximally_mixed(nu):
        raise SingularFrameError("frame singular: nu = I/d")
    exact = float(np.trace(rho.matrix @ o.matrix).real)
    delta_obs = delta_obs_analytic(o, d)

    if config.detector == "weyl":
        w = weyl_system(d)
        frame, dual = abelian_frame(w, nu), abelian_dual(w, nu)
        f = processing_function(dual, o)
        records = sample_outcomes(rho, nu, weyl_bell_povm(w).povm, config.shots, config.seed, config.threads)
        estimate = mc_estimate(records, f)
        delta_xi = average_variance_exact(frame, f, o)
        rows = [{"outcome": int(k), "f": float(f.real[k])} for k in records.outcomes]
    else:
        xi = sud_canonical_dual_xi(nu)
        report = variance_report(xi, nu, o)
        records = covariant_sample(rho, nu, config.shots, config.seed, config.threads)

        def f_of(unitaries: np.ndarray) -> np.ndarray:
            return sud_processing_values(xi, unitaries, o)

        estimate = mc_estimate(records, f_of)
        delta_xi = report.delta_xi
        values = f_of(records.unitaries).real
        rows = [{"f": float(v), "weight": float(wt)} for v, wt in zip(values, records.weights)]

    ratio = delta_xi / delta_obs if delta_obs > 0 else 0.0
    logger.info("estimate %.6f +- %.6f against exact %.6f", estimate.value, estimate.std_error, exact)
    return (
        EstimateReport(
            config=config,
            estimate=estimate.value,
            std_error=estimate.std_error,
            exact=exact,
            z_score=estimate.z_score(exact),
            delta_obs=delta_obs,
            delta_xi=delta_xi,
            ratio=ratio,
        ),
        rows,
    )


def run_reconstruct(config: ExperimentConfig) -> tuple[ReconstructReport, CsvRows]:
    """
    Expand random operators through the detector frame and its dual.
    """
    rng = np.random.default_rng(config.seed)
    d = config.d
    nu = resolve_ancilla(config.ancilla, d)
    frame, dual = _detector_frame(config, nu, rng)
    operators = rng.standard_normal((RECONSTRUCT_OPERATORS, d, d)) + 1j * rng.standard_normal(
        (RECONSTRUCT_OPERATORS, d, d)
    )
    errors = [reconstruction_error(a, frame, dual) for a in operators]
    return (
        ReconstructReport(
            config=config,
            operators=RECONSTRUCT_OPERATORS,
            max_reconstruction_error=max(errors),
            dual_completeness_defect=completeness_defect(frame, dual),
        ),
        None,
    )


def run_universality(config: ExperimentConfig) -> tuple[UniversalityExperimentReport, CsvRows]:
    """
    Frame bounds of the detector with the configured ancilla.
    """
    rng = np.random.default_rng(config.seed)
    nu = resolve_ancilla(config.ancilla, config.d)
    report = universality_report(_detector_povm(config, rng), nu)
    if not report.universal:
        if _is_maximally_mixed(nu):
            raise SingularFrameError("frame singular: nu = I/d")
        raise SingularFrameError(
            f"frame singular: bounds ({report.lower_bound:.3e}, {report.upper_bound:.3e})"
        )
    return (
        UniversalityExperimentReport(
            config=config,
            universal=report.universal,
            lower_bound=report.lower_bound,
            upper_bound=report.upper_bound,
        ),
        None,
    )


def _n_states(config: ExperimentConfig) -> int:
    return max(2, config.shots // config.n_group)


def scan_purities(d: int) -> list[float]:
    """
    p = 1/d + (1 - 1/d) k / SCAN_POINTS, k = 1..SCAN_POINTS, plus the
    SCAN_SPOT_CHECKS values that miss this grid, in increasing order.
    """
    grid = [1 / d + (1 - 1 / d) * k / SCAN_POINTS for k in range(1, SCAN_POINTS + 1)]
    extra = [s for s in SCAN_SPOT_CHECKS if s > 1 / d and not any(np.isclose(s, p, atol=1e-9) for p in grid)]
    return sorted(grid + extra)


def run_variance_scan(config: ExperimentConfig) -> tuple[VarianceScanReport, CsvRows]:
    """
    Optimal coefficient over scan_purities(d), with Monte Carlo spot checks at SCAN_SPOT_CHECKS.
    """
    rng = np.random.default_rng(config.seed)
    d = config.d
    o = resolve_observable(config.observable, d, rng)
    rows = []
    for p in scan_purities(d):
        row = VarianceScanRow(p=p, coefficient=delta_opt_analytic(p, d))
        if any(np.isclose(p, spot, atol=1e-9) for spot in SCAN_SPOT_CHECKS):
            nu = isotropic_ancilla(d, min(p, 1.0))
            report = variance_report(
                sud_canonical_dual_xi(nu), nu, o, _n_states(config), config.n_group, config.seed, config.threads
            )
            row = row.model_copy(
                update={
                    "empirical_ratio": report.empirical_ratio,
                    "empirical_ratio_std_error": report.empirical_ratio_std_error,
                }
            )
        rows.append(row)
    coefficients = [row.coefficient for row in rows]
    decreasing = all(b < a for a, b in zip(coefficients, coefficients[1:]))
    csv_rows = [{"p": row.p, "coefficient": row.coefficient} for row in rows]
    return VarianceScanReport(config=config, rows=rows, strictly_decreasing=decreasing), csv_rows


def run_optimality_demo(config: ExperimentConfig) -> tuple[OptimalityReport, CsvRows]:
    """
    Noise of the canonical covariant dual, checked by Monte Carlo and against perturbed seeds.
    """
    rng = np.random.default_rng(config.seed)
    d = config.d
    nu = resolve_ancilla(config.ancilla, d)
    o = resolve_observable(config.observable, d, rng)
    if _is_maximally_mixed(nu):
        raise SingularFrameError("frame singular: nu = I/d")

    if config.detector == "weyl":
        w = weyl_system(d)
        frame = abelian_frame(w, nu)
        f = processing_function(abelian_dual(w, nu), o)
        delta_obs = delta_obs_analytic(o, d)
        delta_xi = average_variance_exact(frame, f, o)
        ratio = delta_xi / delta_obs if delta_obs > 0 else 0.0
        return OptimalityReport(config=config, delta_obs=delta_obs, delta_xi=delta_xi, ratio=ratio), None

    xi = sud_canonical_dual_xi(nu)
    report = variance_report(xi, nu, o, _n_states(config), config.n_group, config.seed, config.threads)
    excess = min(
        float(np.vdot(xi.xi + delta, xi.xi + delta).real) - xi.purity
        for delta in (covariant_perturbation(nu, rng, scale) for scale in rng.uniform(0.01, 1.0, PERTURBATIONS))
    )
    if excess < -PSD_TOL:
        logger.warning("a perturbed dual beat the canonical one by %.3e", -excess)
    return (
        OptimalityReport(
            config=config,
            delta_obs=report.delta_obs,
            delta_xi=report.delta_xi,
            ratio=report.ratio,
            empirical_ratio=report.empirical_ratio,
            empirical_ratio_std_error=report.empirical_ratio_std_error,
            min_perturbed_purity_excess=excess,
        ),
        None,
    )


def run_haar_check(config: ExperimentConfig) -> tuple[HaarCheckReport, CsvRows]:
    """
    Monte Carlo check of the Haar moment identities.
    """
    if config.shots < 1000:
        raise ConfigurationError("haar-check needs shots >= 1000")
    report = haar_identity_check(config.d, config.shots, config.seed)
    return (
        HaarCheckReport(
            config=config,
            first_moment_max_error=report.first_moment.max_error,
            first_moment_max_z=report.first_moment.max_z,
            second_moment_max_error=report.second_moment.max_error,
            second_moment_max_z=report.second_moment.max_z,
            swap_identity_error=report.swap_identity_error,
        ),
        None,
    )


RUNNERS: dict[str, Callable[[ExperimentConfig], tuple[ExperimentReport, CsvRows]]] = {
    "estimate": run_estimate,
    "reconstruct": run_reconstruct,
    "universality": run_universality,
    "variance-scan": run_variance_scan,
    "optimality-demo": run_optimality_demo,
    "haar-check": run_haar_check,
}


def run_experiment(config: ExperimentConfig) -> tuple[ExperimentReport, CsvRows]:
    """
    Run the configured experiment with its thread count capped by UFRAME_THREADS.
    The report embeds the capped count.
    """
    config = config.model_copy(update={"threads": worker_count(config.threads)})
    logger.info(
        "running %s (d=%d, detector=%s, seed=%d, threads=%d)",
        config.experiment,
        config.d,
        config.detector,
        config.seed,
        config.threads,
    )
    return RUNNERS[config.experiment](config)
