"""
Operator frames, frame operators and dual frames.

A frame {Xi_i} of operators K -> H is stored as a stack of matrices of shape
(n, dim_h, dim_k). The frame operator is F = sum_i |Xi_i>><<Xi_i| acting on the
(dim_h * dim_k)-dimensional double-ket space. Continuous frames are handled as
finite weighted frames: the square root of each quadrature weight is folded into
its element, so all sums below are plain finite sums.

Duals are index-aligned with their parent frame: Theta_i pairs with Xi_i.
"""
import logging
from functools import cached_property
from typing import Any, Literal, NamedTuple

import numpy as np
from pydantic import model_validator

from uframe.config import DUAL_TOL, FRAME_TOL
from uframe.core.hilbert_schmidt import as_cmatrix, herm_eig, hermitian_part, psd_power
from uframe.core.types import ArrayModel, CMatrix, ComplexArray
from uframe.errors import ShapeMismatchError, SingularFrameError, SingularOperatorError

logger = logging.getLogger(__name__)


def _stack(elements: ComplexArray) -> None:
    if elements.ndim != 3 or 0 in elements.shape:
        raise ValueError(f"expected a non-empty stack of matrices, got shape {elements.shape}")


class FrameOperatorMatrix(ArrayModel):
    """
    Hermitian PSD frame operator F on the double-ket space.
    """

    matrix: ComplexArray

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.clip(herm_eig(self.matrix).eigenvalues, 0.0, None)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


class OperatorFrame(ArrayModel):
    """
    Ordered collection of operators Xi_i of shape (dim_h, dim_k).
    """

    elements: ComplexArray
    labels: tuple[Any, ...] | None = None

    @model_validator(mode="after")
    def _check_elements(self):
        _stack(self.elements)
        if self.labels is not None and len(self.labels) != len(self.elements):
            raise ValueError("one label per frame element is required")
        return self

    @classmethod
    def weighted(cls, operators, weights, labels=None) -> "OperatorFrame":
        """
        Fold quadrature weights w_i into the elements as sqrt(w_i) * Xi_i.
        """
        ops = np.asarray(operators, dtype=np.complex128)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(ops),) or np.any(w < 0):
            raise ShapeMismatchError("need one nonnegative weight per operator")
        return cls(elements=ops * np.sqrt(w)[:, None, None], labels=labels)

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def dim_h(self) -> int:
        return self.elements.shape[1]

    @property
    def dim_k(self) -> int:
        return self.elements.shape[2]

    @property
    def space_dim(self) -> int:
        return self.dim_h * self.dim_k

    @cached_property
    def vectors(self) -> CMatrix:
        """
        Row i is |Xi_i>>.
        """
        return self.elements.reshape(self.size, self.space_dim)

    @cached_property
    def frame_operator(self) -> FrameOperatorMatrix:
        """
        F = sum_i |Xi_i>><<Xi_i|, Hermitian by construction.
        """
        v = self.vectors
        return FrameOperatorMatrix(matrix=hermitian_part(v.T @ v.conj()))

    def __len__(self) -> int:
        return self.size


class DualFrame(ArrayModel):
    """
    Operators Theta_i index-aligned with a parent frame.
    """

    elements: ComplexArray
    provenance: Literal["canonical", "alternate", "covariant"]

    @model_validator(mode="after")
    def _check_elements(self):
        _stack(self.elements)
        return self

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def vectors(self) -> CMatrix:
        n, h, k = self.elements.shape
        return self.elements.reshape(n, h * k)

    def __len__(self) -> int:
        return self.size


class Expansion(NamedTuple):
    coefficients: np.ndarray
    reconstruction: CMatrix


def frame_operator(frame: OperatorFrame) -> FrameOperatorMatrix:
    """
    Frame operator of the frame.
    """
    return frame.frame_operator


def frame_bounds(frame: OperatorFrame) -> tuple[float, float]:
    """
    Optimal frame bounds (a, b): the extreme eigenvalues of F.
    """
    values = frame.frame_operator.eigenvalues
    return float(values[0]), float(values[-1])


def is_frame(frame: OperatorFrame, tol: float = FRAME_TOL) -> bool:
    """
    True when the lower frame bound exceeds tol times the upper one.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, b = frame_bounds(frame)
    return b > 0 and a > tol * b


def _inverse_frame_operator(frame: OperatorFrame, tol: float) -> CMatrix:
    a, b = frame_bounds(frame)
    if not (b > 0 and a > tol * b):
        raise SingularFrameError(
            f"frame operator is singular: bounds ({a:.3e}, {b:.3e}) fail the relative test {tol:.0e}"
        )
    if a < 1e3 * tol * b:
        logger.warning("frame is nearly singular: condition number %.3e", b / a)
    try:
        return psd_power(frame.frame_operator.matrix, -1.0)
    except SingularOperatorError as exc:
        raise SingularFrameError(exc.detail) from exc


def _dual_from_vectors(frame: OperatorFrame, vectors: CMatrix, provenance: str) -> DualFrame:
    return DualFrame(elements=vectors.reshape(frame.elements.shape), provenance=provenance)


def canonical_dual(frame: OperatorFrame, tol: float = FRAME_TOL) -> DualFrame:
    """
    Theta_i = F^{-1} Xi_i.
    """
    f_inv = _inverse_frame_operator(frame, tol)
    dual = _dual_from_vectors(frame, frame.vectors @ f_inv.T, "canonical")
    logger.debug("canonical dual of %d elements, defect %.3e", frame.size, completeness_defect(frame, dual))
    return dual


def alternate_dual(frame: OperatorFrame, y_list, tol: float = FRAME_TOL) -> DualFrame:
    """
    |Theta_i>> = F^{-1}|Xi_i>> + |Y_i>> - sum_j <<Xi_j|F^{-1}|Xi_i>> |Y_j>>.
    """
    y = np.asarray(y_list, dtype=np.complex128)
    if y.shape != frame.elements.shape:
        raise ShapeMismatchError(f"Y operators of shape {y.shape} do not match the frame {frame.elements.shape}")
    f_inv = _inverse_frame_operator(frame, tol)
    v = frame.vectors
    y_vectors = y.reshape(frame.size, frame.space_dim)
    canonical = v @ f_inv.T
    # gram[j, i] = <<Xi_j|F^{-1}|Xi_i>>
    gram = v.conj() @ f_inv @ v.T
    vectors = canonical + y_vectors - gram.T @ y_vectors
    return _dual_from_vectors(frame, vectors, "alternate")


def _check_dual(frame: OperatorFrame, dual: DualFrame) -> None:
    if dual.elements.shape != frame.elements.shape:
        raise ShapeMismatchError(
            f"dual of shape {dual.elements.shape} is not aligned with frame {frame.elements.shape}"
        )


def expand(a, frame: OperatorFrame, dual: DualFrame) -> Expansion:
    """
    Coefficients c_i = Tr[Theta_i^dagger A] and the reconstruction sum_i c_i Xi_i.
    """
    a = as_cmatrix(a)
    _check_dual(frame, dual)
    if a.shape != (frame.dim_h, frame.dim_k):
        raise ShapeMismatchError(f"operator of shape {a.shape} does not fit the frame")
    coefficients = dual.vectors.conj() @ a.reshape(-1)
    reconstruction = (frame.vectors.T @ coefficients).reshape(a.shape)
    return Expansion(coefficients=coefficients, reconstruction=reconstruction)


def reconstruction_error(a, frame: OperatorFrame, dual: DualFrame) -> float:
    """
    Frobenius norm of A minus its reconstruction through (frame, dual).
    """
    a = as_cmatrix(a)
    return float(np.linalg.norm(expand(a, frame, dual).reconstruction - a))


def completeness_defect(frame: OperatorFrame, dual: DualFrame) -> float:
    """
    Frobenius norm of sum_i |Xi_i>><<Theta_i| - I.
    """
    _check_dual(frame, dual)
    resolution = frame.vectors.T @ dual.vectors.conj()
    return float(np.linalg.norm(resolution - np.eye(frame.space_dim)))


def is_valid_dual(frame: OperatorFrame, dual: DualFrame, tol: float = DUAL_TOL) -> bool:
    """
    True when sum_i |Xi_i>><<Theta_i| is the identity to within tol.
    """
    return completeness_defect(frame, dual) < tol


def frame_summary(frame: OperatorFrame, tol: float = FRAME_TOL) -> dict[str, Any]:
    """
    Size, shape, frame bounds and the frame test as a plain dict.
    """
    a, b = frame_bounds(frame)
    return {
        "size": frame.size,
        "dim_h": frame.dim_h,
        "dim_k": frame.dim_k,
        "lower_bound": a,
        "upper_bound": b,
        "is_frame": is_frame(frame, tol),
    }


__all__ = [
    "DualFrame",
    "Expansion",
    "FrameOperatorMatrix",
    "OperatorFrame",
    "alternate_dual",
    "canonical_dual",
    "completeness_defect",
    "expand",
    "frame_bounds",
    "frame_operator",
    "frame_summary",
    "is_frame",
    "is_valid_dual",
    "reconstruction_error",
]
