"""
POVMs, states and observables, and the universality machinery built on them.

A bipartite POVM {Pi_i} on H (x) K is universal for H with ancilla state nu when
the operators

    Xi_i[nu] = sum_j Psi_j nu^T Psi_j^dagger,     Pi_i = sum_j |Psi_j>><<Psi_j|

form an operator frame on H. For any dual Theta_i of that frame the processing
function f_i = Tr[Theta_i^dagger O] then gives Tr[rho O] = sum_i f_i Tr[(rho (x) nu) Pi_i].
"""
import logging
from functools import cached_property

import numpy as np
from pydantic import BaseModel, model_validator

from uframe.config import (
    EIGEN_CLIP,
    FRAME_TOL,
    HERMITIAN_TOL,
    POVM_TOL,
    PROBABILITY_CLIP,
    PSD_TOL,
    STATE_TOL,
)
from uframe.core.hilbert_schmidt import (
    DoubleKet,
    as_cmatrix,
    devectorize,
    herm_eig,
    is_hermitian,
    psd_power,
)
from uframe.core.types import ArrayModel, CMatrix, ComplexArray
from uframe.errors import (
    InvalidPovmError,
    InvalidProbabilityError,
    NotPositiveError,
    ShapeMismatchError,
    SingularOperatorError,
)
from uframe.frames.operator_frame import (
    DualFrame,
    OperatorFrame,
    frame_bounds,
    is_frame,
)

logger = logging.getLogger(__name__)


class DensityMatrix(ArrayModel):
    """
    Hermitian, positive semidefinite, unit-trace matrix.
    """

    matrix: ComplexArray

    @model_validator(mode="after")
    def _check_state(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"a density matrix must be square, got shape {m.shape}")
        if np.linalg.norm(m - m.conj().T) > STATE_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > STATE_TOL:
            raise ValueError(f"density matrix has trace {np.trace(m).real:.12f}")
        if np.linalg.eigvalsh(m)[0] < -STATE_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        return self

    @classmethod
    def pure(cls, ket) -> "DensityMatrix":
        psi = np.asarray(ket, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(matrix=np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, d: int, k: int = 0) -> "DensityMatrix":
        psi = np.zeros(d, dtype=np.complex128)
        psi[k] = 1.0
        return cls.pure(psi)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(matrix=np.eye(d) / d)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def transpose(self) -> CMatrix:
        """
        nu^T in the fixed computational basis.
        """
        return np.array(self.matrix.T)

    @property
    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)


class Observable(ArrayModel):
    """
    Square operator O whose expectation is estimated.
    """

    matrix: ComplexArray
    hermitian: bool = True

    @model_validator(mode="after")
    def _check_observable(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"an observable must be square, got shape {m.shape}")
        if self.hermitian and np.linalg.norm(m - m.conj().T) > HERMITIAN_TOL:
            raise ValueError("observable flagged Hermitian is not Hermitian")
        return self

    @classmethod
    def of(cls, matrix) -> "Observable":
        m = as_cmatrix(matrix)
        return cls(matrix=m, hermitian=is_hermitian(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermitian_part(self) -> "Observable":
        return Observable(matrix=(self.matrix + self.matrix.conj().T) / 2)

    def anti_hermitian_part(self) -> "Observable":
        """
        The Hermitian B with O = hermitian_part + i B.
        """
        return Observable(matrix=(self.matrix - self.matrix.conj().T) / 2j)


class ProcessingFunction(ArrayModel):
    """
    Values f_i(nu, O), indexed like the POVM outcomes.
    """

    values: ComplexArray

    @property
    def real(self) -> np.ndarray:
        return np.array(self.values.real)

    def __len__(self) -> int:
        return len(self.values)


class Povm(ArrayModel):
    """
    Ordered positive operators summing to the identity, optionally split as H (x) K.
    """

    elements: ComplexArray
    dim_h: int | None = None
    dim_k: int | None = None

    @model_validator(mode="after")
    def _check_shape(self):
        e = self.elements
        if e.ndim != 3 or 0 in e.shape or e.shape[1] != e.shape[2]:
            raise ValueError(f"expected a stack of square matrices, got shape {e.shape}")
        if (self.dim_h is None) != (self.dim_k is None):
            raise ValueError("a bipartite split needs both dim_h and dim_k")
        if self.dim_h is not None and self.dim_h * self.dim_k != e.shape[1]:
            raise ValueError(f"split ({self.dim_h}, {self.dim_k}) does not factor dimension {e.shape[1]}")
        return self

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def is_bipartite(self) -> bool:
        return self.dim_h is not None

    @cached_property
    def report(self) -> "PovmReport":
        return validate_povm(self)

    def require_valid(self) -> None:
        report = self.report
        if not report.is_valid:
            raise InvalidPovmError(
                f"not a POVM: completeness defect {report.completeness_defect:.3e}, "
                f"smallest eigenvalue {min(report.min_eigenvalues):.3e}"
            )

    def __len__(self) -> int:
        return self.size


class PovmReport(BaseModel):
    """
    Diagnostics of validate_povm.
    """

    size: int
    dim: int
    min_eigenvalues: list[float]
    hermiticity_defect: float
    completeness_defect: float
    is_valid: bool


class UniversalityReport(BaseModel):
    universal: bool
    lower_bound: float
    upper_bound: float


def validate_povm(p: Povm) -> PovmReport:
    """
    Positivity and completeness defects of a POVM.
    """
    e = p.elements
    herm = float(np.max(np.linalg.norm(e - np.conj(np.swapaxes(e, 1, 2)), axis=(1, 2))))
    hermitized = (e + np.conj(np.swapaxes(e, 1, 2))) / 2
    min_eigs = np.linalg.eigvalsh(hermitized)[:, 0]
    defect = float(np.linalg.norm(e.sum(axis=0) - np.eye(p.dim)))
    valid = herm <= HERMITIAN_TOL and min_eigs.min() >= -PSD_TOL and defect <= POVM_TOL
    logger.debug("povm of %d elements: defect %.3e, min eigenvalue %.3e", p.size, defect, min_eigs.min())
    return PovmReport(
        size=p.size,
        dim=p.dim,
        min_eigenvalues=[float(x) for x in min_eigs],
        hermiticity_defect=herm,
        completeness_defect=defect,
        is_valid=bool(valid),
    )


def diagonalize_element(pi, dim_h: int, dim_k: int) -> list[DoubleKet]:
    """
    Vectors |Psi_j>> with sum_j |Psi_j>><<Psi_j| = Pi and squared norm equal to
    the j-th nonzero eigenvalue of Pi.
    """
    pi = as_cmatrix(pi)
    if pi.shape != (dim_h * dim_k, dim_h * dim_k):
        raise ShapeMismatchError(f"element of shape {pi.shape} does not live on ({dim_h}, {dim_k})")
    eig = herm_eig(pi)
    values = eig.eigenvalues
    if values[0] < -PSD_TOL:
        raise NotPositiveError(f"POVM element has negative eigenvalue {values[0]:.3e}")
    threshold = EIGEN_CLIP * max(values[-1], 0.0)
    return [
        DoubleKet(dim_h=dim_h, dim_k=dim_k, amplitudes=np.sqrt(lam) * eig.eigenvectors[:, j])
        for j, lam in enumerate(values)
        if lam > threshold
    ]


def xi_frame(p: Povm, nu: DensityMatrix) -> OperatorFrame:
    """
    The system frame Xi_i[nu] = sum_j Psi_j nu^T Psi_j^dagger, one element per outcome.
    """
    if not p.is_bipartite:
        raise ShapeMismatchError("xi_frame needs a POVM with a bipartite split")
    if nu.dim != p.dim_k:
        raise ShapeMismatchError(f"ancilla of dimension {nu.dim} does not match dim_k = {p.dim_k}")
    nu_t = nu.transpose
    elements = np.zeros((p.size, p.dim_h, p.dim_h), dtype=np.complex128)
    for i, pi in enumerate(p.elements):
        for ket in diagonalize_element(pi, p.dim_h, p.dim_k):
            psi = devectorize(ket)
            elements[i] += psi @ nu_t @ psi.conj().T
    return OperatorFrame(elements=elements, labels=tuple(range(p.size)))


def universality_report(p: Povm, nu: DensityMatrix, tol: float = FRAME_TOL) -> UniversalityReport:
    """
    Frame bounds of the ancilla-induced system frame of p.
    """
    frame = xi_frame(p, nu)
    a, b = frame_bounds(frame)
    return UniversalityReport(universal=is_frame(frame, tol), lower_bound=a, upper_bound=b)


def is_universal(p: Povm, nu: DensityMatrix, tol: float = FRAME_TOL) -> bool:
    """
    True when p with ancilla nu yields a frame on the system.
    """
    return universality_report(p, nu, tol).universal


def processing_function(dual: DualFrame, o: Observable) -> ProcessingFunction:
    """
    f_i = Tr[Theta_i^dagger O].
    """
    _, h, k = dual.elements.shape
    if o.matrix.shape != (h, k):
        raise ShapeMismatchError(f"observable of shape {o.matrix.shape} does not match dual elements ({h}, {k})")
    return ProcessingFunction(values=dual.vectors.conj() @ o.matrix.reshape(-1))


def _joint_state(rho: DensityMatrix, nu: DensityMatrix | None, p: Povm) -> CMatrix:
    state = rho.matrix if nu is None else np.kron(rho.matrix, nu.matrix)
    if state.shape[0] != p.dim:
        raise ShapeMismatchError(f"state of dimension {state.shape[0]} does not match POVM dimension {p.dim}")
    if nu is not None and p.is_bipartite and (rho.dim, nu.dim) != (p.dim_h, p.dim_k):
        raise ShapeMismatchError("system and ancilla dimensions do not match the POVM split")
    return state


def born_weights(rho: DensityMatrix, nu: DensityMatrix | None, p: Povm) -> np.ndarray:
    """
    Raw Tr[(rho (x) nu) Pi_i], without clipping.
    """
    state = _joint_state(rho, nu, p)
    return np.einsum("ij,kji->k", state, p.elements).real


def outcome_probabilities(rho: DensityMatrix, nu: DensityMatrix | None, p: Povm) -> np.ndarray:
    """
    Born probabilities Tr[(rho (x) nu) Pi_i]; nu = None for a system-only POVM.
    """
    weights = born_weights(rho, nu, p)
    if weights.min() < -PROBABILITY_CLIP:
        raise InvalidProbabilityError(f"negative outcome probability {weights.min():.3e}")
    probs = np.clip(weights, 0.0, None)
    total = probs.sum()
    if abs(total - 1) > PROBABILITY_CLIP:
        raise InvalidProbabilityError(f"outcome probabilities sum to {total:.12f}")
    return probs / total


def estimate_expectation_exact(
    rho: DensityMatrix,
    nu: DensityMatrix,
    p: Povm,
    f: ProcessingFunction,
) -> complex:
    """
    sum_i f_i Tr[(rho (x) nu) Pi_i]: the estimator's mean, exactly.
    """
    if len(f) != p.size:
        raise ShapeMismatchError(f"{len(f)} processing values for {p.size} outcomes")
    return complex(np.dot(f.values, born_weights(rho, nu, p)))


def info_complete_from_positive(k_list) -> Povm:
    """
    Normalize positive operators K_i into the POVM S^{-1/2} K_i S^{-1/2}, S = sum_i K_i.
    """
    ks = np.asarray(k_list, dtype=np.complex128)
    if ks.ndim != 3 or ks.shape[1] != ks.shape[2]:
        raise ShapeMismatchError(f"expected a stack of square matrices, got shape {ks.shape}")
    for i, k in enumerate(ks):
        if herm_eig(k).eigenvalues[0] < -PSD_TOL:
            raise NotPositiveError(f"operator {i} is not positive semidefinite")
    try:
        s_inv_sqrt = psd_power(ks.sum(axis=0), -0.5)
    except SingularOperatorError as exc:
        raise SingularOperatorError(f"sum of the operators is not invertible: {exc.detail}") from exc
    elements = s_inv_sqrt @ ks @ s_inv_sqrt
    elements = (elements + np.conj(np.swapaxes(elements, 1, 2))) / 2
    return Povm(elements=elements)


def is_info_complete(p: Povm, tol: float = FRAME_TOL) -> bool:
    """
    True when the POVM elements span the operator space.
    """
    if p.size < p.dim**2:
        return False
    return is_frame(OperatorFrame(elements=p.elements), tol)
