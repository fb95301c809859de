"""
Noise of universal-detector estimators, averaged over Haar-random pure states.

For O Hermitian on C^d the ideal measurement of O has average variance

    delta_obs = (Tr[O^2] - Tr[O]^2 / d) / (d + 1).

The SU(d) covariant estimator with seed xi (Tr[xi] = 1, Tr[nu^T xi] = d) has

    delta_xi = (Tr[xi^2] - 1) / (d - 1) * delta_obs,

minimized by the canonical xi at the coefficient (d^2 + d - 1 - p) / (d p - 1),
p = Tr[nu^2]; for a pure ancilla it is d + 2.
"""
import logging
import math

import numpy as np
from pydantic import BaseModel

from uframe.config import PROBABILITY_CLIP, UFRAME_DEFAULT_SEED
from uframe.covariant.sud import CovariantXi, covariant_dual_check
from uframe.errors import (
    InvalidDualError,
    InvalidProbabilityError,
    InvalidStateError,
    NotHermitianError,
    ShapeMismatchError,
)
from uframe.estimation.haar import haar_unitaries
from uframe.estimation.parallel import run_streams, worker_count
from uframe.estimation.sampling import Estimate
from uframe.frames.operator_frame import OperatorFrame
from uframe.povm.measurement import DensityMatrix, Observable, ProcessingFunction

logger = logging.getLogger(__name__)


class Covariance2x2(BaseModel):
    """
    Covariance of (Re f, Im f) under the outcome distribution.
    """

    var_re: float
    var_im: float
    cov: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.var_re, self.cov], [self.cov, self.var_im]])

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


class VarianceReport(BaseModel):
    d: int
    p: float
    delta_obs: float
    delta_xi: float
    ratio: float
    empirical_variance: float | None = None
    empirical_std_error: float | None = None
    empirical_ratio: float | None = None
    empirical_ratio_std_error: float | None = None
    shots: int = 0


def covariance_matrix(f_values, probs) -> Covariance2x2:
    """
    Covariance of the real and imaginary parts of f under probs.
    """
    f = np.asarray(f_values, dtype=np.complex128)
    q = np.asarray(probs, dtype=np.float64)
    if f.shape != q.shape or f.ndim != 1:
        raise ShapeMismatchError(f"{f.shape} processing values against {q.shape} probabilities")
    if abs(math.fsum(q) - 1) > PROBABILITY_CLIP or q.min() < -PROBABILITY_CLIP:
        raise InvalidProbabilityError("probabilities must be nonnegative and sum to 1")
    mean = np.dot(q, f)
    re, im = f.real - mean.real, f.imag - mean.imag
    return Covariance2x2(
        var_re=float(np.dot(q, re * re)),
        var_im=float(np.dot(q, im * im)),
        cov=float(np.dot(q, re * im)),
    )


def _reference_state(psi0, d: int) -> np.ndarray | None:
    if psi0 is None:
        return None
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if psi0.shape != (d,):
        raise ShapeMismatchError(f"reference state of shape {psi0.shape} for d={d}")
    norm = np.linalg.norm(psi0)
    if norm < 1e-12:
        raise InvalidStateError("reference state must be nonzero")
    return psi0 / norm


def _haar_states(d: int, n: int, rng: np.random.Generator, psi0: np.ndarray | None) -> np.ndarray:
    """
    Rows U_k |psi0>; psi0 = None picks the first basis vector.
    """
    u = haar_unitaries(d, n, rng)
    return u[:, :, 0] if psi0 is None else u @ psi0


def _hermitian_observable(o: Observable, d: int) -> None:
    if not o.hermitian:
        raise NotHermitianError("the noise figures are defined for Hermitian observables")
    if o.dim != d:
        raise ShapeMismatchError(f"observable of dimension {o.dim} for d={d}")


def delta_obs_analytic(o: Observable, d: int) -> float:
    """
    (Tr[O^2] - Tr[O]^2 / d) / (d + 1).
    """
    _hermitian_observable(o, d)
    m = o.matrix
    value = (np.vdot(m, m).real - np.trace(m).real ** 2 / d) / (d + 1)
    return max(float(value), 0.0)


def xi_noise_coefficient(xi: CovariantXi) -> float:
    """
    (Tr[xi^2] - 1) / (d - 1).
    """
    return (xi.purity - 1) / (xi.d - 1)


def delta_xi_analytic(xi: CovariantXi, o: Observable, d: int) -> float:
    """
    Noise coefficient of xi times delta_obs.
    """
    if xi.d != d:
        raise ShapeMismatchError(f"xi of dimension {xi.d} for d={d}")
    return xi_noise_coefficient(xi) * delta_obs_analytic(o, d)


def delta_opt_analytic(p: float, d: int) -> float:
    """
    Optimal noise coefficient for an ancilla of purity p, on (1/d, 1].
    """
    if not 1 / d < p <= 1 + 1e-12:
        raise InvalidStateError(f"ancilla purity {p} outside (1/d, 1] for d={d}")
    return (d * d + d - 1 - p) / (d * p - 1)


def _estimate(samples: np.ndarray) -> Estimate:
    n = len(samples)
    mean = math.fsum(samples) / n
    se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Estimate(value=mean, std_error=se, samples=n)


def delta_obs_mc(
    o: Observable,
    d: int,
    n: int,
    seed: int = UFRAME_DEFAULT_SEED,
    workers: int | None = None,
    psi0=None,
) -> Estimate:
    """
    Haar average of <O^2> - <O>^2 over the states U|psi0>.
    """
    _hermitian_observable(o, d)
    ref = _reference_state(psi0, d)
    m = o.matrix
    m2 = m @ m

    def draw(share: int, rng: np.random.Generator) -> np.ndarray:
        psi = _haar_states(d, share, rng, ref)
        first = np.einsum("si,ij,sj->s", psi.conj(), m, psi).real
        second = np.einsum("si,ij,sj->s", psi.conj(), m2, psi).real
        return second - first**2

    return _estimate(np.concatenate(run_streams(draw, n, seed, worker_count(workers))))


def delta_xi_mc(
    xi: CovariantXi,
    nu: DensityMatrix,
    o: Observable,
    n_states: int,
    n_group: int = 10,
    seed: int = UFRAME_DEFAULT_SEED,
    workers: int | None = None,
    psi0=None,
) -> Estimate:
    """
    Haar-state average of the covariant estimator variance.

    The states are U|psi0> for Haar U; psi0 defaults to the first basis vector
    and does not change the average. For each state psi the second moment of
    f_U = Tr[(U xi U^dagger) O] is estimated from n_group Haar unitaries with
    plain importance weights d <psi|U nu^T U^dagger|psi>. These are not
    self-normalized: the weight density integrates to 1 over the normalized
    Haar measure, so the plain weighted mean is unbiased. <psi|O|psi>^2 is
    subtracted exactly.
    """
    d = nu.dim
    _hermitian_observable(o, d)
    if not covariant_dual_check(xi, nu):
        raise InvalidDualError("xi does not define a covariant dual for this ancilla")
    if n_states < 2 or n_group < 1:
        raise ValueError("need at least two states and one group sample per state")
    nu_t, m = nu.transpose, o.matrix
    ref = _reference_state(psi0, d)

    def draw(share: int, rng: np.random.Generator) -> np.ndarray:
        psi = _haar_states(d, share, rng, ref)
        u = haar_unitaries(d, share * n_group, rng).reshape(share, n_group, d, d)
        u_dag = np.conj(np.swapaxes(u, 2, 3))
        weights = d * np.einsum("si,sgij,sj->sg", psi.conj(), u @ nu_t @ u_dag, psi).real
        f = np.einsum("sgij,ij->sg", (u @ xi.xi @ u_dag).conj(), m).real
        second = (weights * f**2).mean(axis=1)
        mean = np.einsum("si,ij,sj->s", psi.conj(), m, psi).real
        return second - mean**2

    samples = np.concatenate(run_streams(draw, n_states, seed, worker_count(workers)))
    logger.debug("delta_xi Monte Carlo over %d states x %d group samples", n_states, n_group)
    return _estimate(samples)


def average_variance_exact(frame: OperatorFrame, f: ProcessingFunction, o: Observable) -> float:
    """
    Exact Haar-state average of the variance of f for a finite detector.

    The outcome probabilities are Tr[rho Xi_i], so the average second moment is
    sum_i f_i^2 Tr[Xi_i] / d.
    """
    d = frame.dim_h
    if frame.dim_k != d:
        raise ShapeMismatchError("the system frame must consist of square operators")
    if len(f) != frame.size:
        raise ShapeMismatchError(f"{len(f)} processing values for {frame.size} frame elements")
    _hermitian_observable(o, d)
    traces = np.trace(frame.elements, axis1=1, axis2=2).real
    m = o.matrix
    second = math.fsum(f.real**2 * traces) / d
    ideal = (np.vdot(m, m).real + np.trace(m).real ** 2) / (d * (d + 1))
    return float(second - ideal)


def variance_report(
    xi: CovariantXi,
    nu: DensityMatrix,
    o: Observable,
    n_states: int = 0,
    n_group: int = 10,
    seed: int = UFRAME_DEFAULT_SEED,
    workers: int | None = None,
) -> VarianceReport:
    """
    Analytic noise figures of the covariant estimator, plus a Monte Carlo check when n_states > 0.
    """
    d = nu.dim
    delta_obs = delta_obs_analytic(o, d)
    coefficient = xi_noise_coefficient(xi)
    report = {
        "d": d,
        "p": nu.purity,
        "delta_obs": delta_obs,
        "delta_xi": coefficient * delta_obs,
        "ratio": coefficient,
    }
    if n_states > 0:
        mc = delta_xi_mc(xi, nu, o, n_states, n_group, seed, workers)
        report |= {
            "empirical_variance": mc.value,
            "empirical_std_error": mc.std_error,
            "shots": n_states * n_group,
        }
        if delta_obs > 0:
            report |= {
                "empirical_ratio": mc.value / delta_obs,
                "empirical_ratio_std_error": mc.std_error / delta_obs,
            }
    logger.info("noise ratio %.6f for d=%d, p=%.6f", coefficient, d, report["p"])
    return VarianceReport(**report)
