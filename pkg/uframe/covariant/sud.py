"""
The SU(d)-covariant universal detector.

For the frame Xi_U[nu] = U nu^T U^dagger integrated against a Haar measure of
total mass d (so that the elements sum to the identity), Schur's lemma gives

    F      = |I>><<I| / d + (d p - 1)/(d^2 - 1) (I - |I>><<I| / d)
    F^{-1} = |I>><<I| / d + (d^2 - 1)/(d p - 1) (I - |I>><<I| / d)

with p = Tr[(nu^T)^2]. The canonical dual is Theta_U = U xi U^dagger with
xi = a nu^T + b I, a = (d^2 - 1)/(d p - 1), b = (p - d)/(d p - 1). A covariant
family U xi U^dagger is a dual iff Tr[xi] = 1 and Tr[nu^T xi] = d, and among
those the canonical xi minimizes Tr[xi^2].

Finite materializations use N Haar samples, each carrying weight d / N.
"""
import logging

import numpy as np
from pydantic import BaseModel, model_validator

from uframe.config import DUAL_TOL, HERMITIAN_TOL
from uframe.core.hilbert_schmidt import as_cmatrix, random_hermitian, vectorize
from uframe.core.types import ArrayModel, CMatrix, ComplexArray
from uframe.covariant.weyl import BellPovm, bell_povm, weyl_system
from uframe.errors import DimensionError, ShapeMismatchError, SingularFrameError
from uframe.estimation.haar import haar_unitaries
from uframe.frames.operator_frame import DualFrame, FrameOperatorMatrix, OperatorFrame
from uframe.povm.measurement import DensityMatrix, Observable

logger = logging.getLogger(__name__)


class SudFrameParams(BaseModel):
    d: int
    p: float
    a: float
    b: float


class CovariantXi(ArrayModel):
    """
    Hermitian seed operator xi of a covariant dual U xi U^dagger.
    """

    xi: ComplexArray

    @model_validator(mode="after")
    def _check_xi(self):
        m = self.xi
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"xi must be square, got shape {m.shape}")
        if np.linalg.norm(m - m.conj().T) > HERMITIAN_TOL:
            raise ValueError("xi must be Hermitian")
        return self

    @property
    def d(self) -> int:
        return self.xi.shape[0]

    @property
    def purity(self) -> float:
        """
        Tr[xi^2].
        """
        return float(np.vdot(self.xi, self.xi).real)


def _identity_projector(d: int) -> CMatrix:
    ket = vectorize(np.eye(d)).amplitudes
    return np.outer(ket, ket.conj()) / d


def _check_purity(nu: DensityMatrix) -> float:
    d, p = nu.dim, nu.purity
    if p <= 1 / d + 1e-10:
        raise SingularFrameError(f"frame singular: nu = I/d (Tr[nu^2] = {p:.12f})")
    return p


def sud_frame_eigenvalues(d: int, p: float) -> tuple[float, float]:
    """
    (1, (d p - 1)/(d^2 - 1)): eigenvalue on |I>> and on its complement.
    """
    return 1.0, (d * p - 1) / (d * d - 1)


def sud_frame_operator(nu: DensityMatrix) -> FrameOperatorMatrix:
    """
    Analytic frame operator of the SU(d) detector with ancilla nu.
    """
    d = nu.dim
    _, second = sud_frame_eigenvalues(d, nu.purity)
    proj = _identity_projector(d)
    return FrameOperatorMatrix(matrix=proj + second * (np.eye(d * d) - proj))


def sud_frame_operator_inverse(nu: DensityMatrix) -> FrameOperatorMatrix:
    """
    Analytic inverse frame operator; raises SingularFrameError for nu = I/d.
    """
    d = nu.dim
    p = _check_purity(nu)
    proj = _identity_projector(d)
    return FrameOperatorMatrix(matrix=proj + (d * d - 1) / (d * p - 1) * (np.eye(d * d) - proj))


def sud_params(nu: DensityMatrix) -> SudFrameParams:
    """
    Purity p and the canonical dual coefficients a, b.
    """
    d = nu.dim
    p = _check_purity(nu)
    return SudFrameParams(d=d, p=p, a=(d * d - 1) / (d * p - 1), b=(p - d) / (d * p - 1))


def sud_canonical_dual_xi(nu: DensityMatrix) -> CovariantXi:
    """
    xi = a nu^T + b I, which is also the variance-optimal covariant xi.
    """
    params = sud_params(nu)
    xi = params.a * nu.transpose + params.b * np.eye(nu.dim)
    return CovariantXi(xi=(xi + xi.conj().T) / 2)


def covariant_dual_check(xi: CovariantXi, nu: DensityMatrix, tol: float = DUAL_TOL) -> bool:
    """
    Tr[xi] = 1 and Tr[nu^T xi] = d.
    """
    if xi.d != nu.dim:
        return False
    d = nu.dim
    return bool(abs(np.trace(xi.xi) - 1) < tol and abs(np.trace(nu.transpose @ xi.xi) - d) < tol)


def sud_processing_value(xi: CovariantXi, u, o: Observable) -> complex:
    """
    f_U = Tr[(U xi U^dagger)^dagger O].
    """
    u = as_cmatrix(u)
    if u.shape != xi.xi.shape or o.matrix.shape != xi.xi.shape:
        raise ShapeMismatchError("xi, U and O must share one dimension")
    theta = u @ xi.xi @ u.conj().T
    return complex(np.vdot(theta, o.matrix))


def sud_processing_values(xi: CovariantXi, unitaries: np.ndarray, o: Observable) -> np.ndarray:
    """
    sud_processing_value for a stack of unitaries.
    """
    theta = unitaries @ xi.xi @ np.conj(np.swapaxes(unitaries, 1, 2))
    return np.einsum("nij,ij->n", theta.conj(), o.matrix)


def sud_frame(nu: DensityMatrix, unitaries: np.ndarray) -> OperatorFrame:
    """
    Finite weighted frame {U_k nu^T U_k^dagger} with weights d / N.
    """
    d, n = nu.dim, len(unitaries)
    elements = unitaries @ nu.transpose @ np.conj(np.swapaxes(unitaries, 1, 2))
    return OperatorFrame.weighted(elements, np.full(n, d / n))


def covariant_dual_frame(xi: CovariantXi, unitaries: np.ndarray) -> DualFrame:
    """
    {U_k xi U_k^dagger} with the weights of sud_frame folded in.
    """
    d, n = xi.d, len(unitaries)
    elements = unitaries @ xi.xi @ np.conj(np.swapaxes(unitaries, 1, 2))
    return DualFrame(elements=elements * np.sqrt(d / n), provenance="covariant")


def sud_bell_povm(d: int, n: int, rng: np.random.Generator) -> BellPovm:
    """
    Quadrature-sampled SU(d) Bell POVM.

    Each Haar sample V_k is composed with the d^2 Weyl unitaries, so the n d^2
    projectors (1/(n d)) |V_k W_beta>><<V_k W_beta| sum to the identity exactly.
    """
    if d < 2:
        raise DimensionError(f"the SU(d) Bell POVM needs d >= 2, got {d}")
    weyl = weyl_system(d).unitaries
    v = haar_unitaries(d, n, rng)
    unitaries = (v[:, None, :, :] @ weyl[None, :, :, :]).reshape(n * d * d, d, d)
    return bell_povm(unitaries, np.full(len(unitaries), 1.0 / n))


def isotropic_ancilla(d: int, p: float) -> DensityMatrix:
    """
    nu = t |0><0| + (1 - t) I / d with Tr[nu^2] = p.
    """
    if not 1 / d <= p <= 1:
        raise ValueError(f"purity {p} outside [1/d, 1]")
    t = np.sqrt((p - 1 / d) / (1 - 1 / d))
    nu = (1 - t) * np.eye(d) / d
    nu[0, 0] += t
    return DensityMatrix(matrix=nu)


def covariant_perturbation(nu: DensityMatrix, rng: np.random.Generator, scale: float = 1.0) -> CMatrix:
    """
    Random Hermitian delta with Tr[delta] = 0 and Tr[nu^T delta] = 0.
    """
    d = nu.dim
    basis = [np.eye(d) / np.sqrt(d)]
    nu_t = nu.transpose - np.trace(nu.transpose) / d * np.eye(d)
    norm = np.linalg.norm(nu_t)
    if norm > 1e-12:
        basis.append(nu_t / norm)
    delta = random_hermitian(d, rng)
    for e in basis:
        delta = delta - np.vdot(e, delta).real * e
    return scale * delta / np.linalg.norm(delta)
