"""
Dense complex matrix algebra and the Hilbert-Schmidt double-ket isomorphism.

An operator A from K to H is identified with the bipartite vector

    |A>> = sum_{n,m} A_nm |n> (x) |m>

in the standard computational bases, i.e. row-major vectorization. With this
convention the identities

    (A (x) B)|C>>      = |A C B^T>>
    Tr_K[|A>><<B|]     = A B^dagger
    Tr_H[|A>><<B|]     = A^T B^*

hold literally, and <<A|B>> = Tr[A^dagger B].

Functions:
- vectorize / devectorize: the isomorphism and its inverse.
- hs_inner: Hilbert-Schmidt scalar product.
- sandwich, partial_trace_ancilla, partial_trace_system: the three identities above.
- herm_eig, psd_power: Hermitian eigendecomposition and powers of PSD operators.
"""
import logging

import numpy as np
from pydantic import model_validator
from scipy.linalg import eigh

from uframe.config import EIGEN_CLIP, HERMITIAN_TOL, PSD_TOL
from uframe.core.types import ArrayModel, CMatrix, ComplexArray, RealArray
from uframe.errors import (
    NotHermitianError,
    NotPositiveError,
    ShapeMismatchError,
    SingularOperatorError,
)

logger = logging.getLogger(__name__)


def as_cmatrix(a) -> CMatrix:
    """
    Coerce ``a`` to a finite 2-D complex128 array.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or 0 in arr.shape:
        raise ShapeMismatchError(f"expected a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeMismatchError("matrix contains non-finite entries")
    return arr


class DoubleKet(ArrayModel):
    """
    The vector |A>> of H (x) K associated with an operator A: K -> H.
    """

    dim_h: int
    dim_k: int
    amplitudes: ComplexArray

    @model_validator(mode="after")
    def _check_length(self):
        if self.amplitudes.shape != (self.dim_h * self.dim_k,):
            raise ValueError(
                f"amplitudes of shape {self.amplitudes.shape} do not match dims ({self.dim_h}, {self.dim_k})"
            )
        return self

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def inner(self, other: "DoubleKet") -> complex:
        """
        <<self|other>>.
        """
        if (self.dim_h, self.dim_k) != (other.dim_h, other.dim_k):
            raise ShapeMismatchError("double-kets live on different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def outer(self, other: "DoubleKet") -> CMatrix:
        """
        |self>><<other| as a (dim_h*dim_k) square matrix.
        """
        return np.outer(self.amplitudes, other.amplitudes.conj())


class HermitianEig(ArrayModel):
    """
    Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix.
    """

    eigenvalues: RealArray
    eigenvectors: ComplexArray

    def reconstruct(self) -> CMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def vectorize(a) -> DoubleKet:
    """
    Double-ket |A>> of A, stacking rows.
    """
    a = as_cmatrix(a)
    return DoubleKet(dim_h=a.shape[0], dim_k=a.shape[1], amplitudes=a.reshape(-1))


def devectorize(v: DoubleKet) -> CMatrix:
    """
    Inverse of vectorize.
    """
    return np.array(v.amplitudes).reshape(v.dim_h, v.dim_k)


def hs_inner(a, b) -> complex:
    """
    Hilbert-Schmidt inner product <<A|B>> = Tr[A^dagger B].
    """
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot pair shapes {a.shape} and {b.shape}")
    return complex(np.vdot(a, b))


def sandwich(a, b, c_ket: DoubleKet) -> DoubleKet:
    """
    (A (x) B)|C>> computed as |A C B^T>>.
    """
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.shape[1] != c_ket.dim_h or b.shape[1] != c_ket.dim_k:
        raise ShapeMismatchError(
            f"cannot apply {a.shape} (x) {b.shape} to a double-ket on ({c_ket.dim_h}, {c_ket.dim_k})"
        )
    return vectorize(a @ devectorize(c_ket) @ b.T)


def _check_pair(a_ket: DoubleKet, b_ket: DoubleKet) -> None:
    if (a_ket.dim_h, a_ket.dim_k) != (b_ket.dim_h, b_ket.dim_k):
        raise ShapeMismatchError("double-kets live on different spaces")


def partial_trace_ancilla(a_ket: DoubleKet, b_ket: DoubleKet) -> CMatrix:
    """
    Tr_K[|A>><<B|] = A B^dagger.
    """
    _check_pair(a_ket, b_ket)
    a, b = devectorize(a_ket), devectorize(b_ket)
    return a @ b.conj().T


def partial_trace_system(a_ket: DoubleKet, b_ket: DoubleKet) -> CMatrix:
    """
    Tr_H[|A>><<B|] = A^T B^*.
    """
    _check_pair(a_ket, b_ket)
    a, b = devectorize(a_ket), devectorize(b_ket)
    return a.T @ b.conj()


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    """
    True when |A - A^dagger|_F <= tol.
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return bool(np.linalg.norm(a - a.conj().T) <= tol)


def hermitian_part(a) -> CMatrix:
    """
    (A + A^dagger) / 2.
    """
    a = as_cmatrix(a)
    return (a + a.conj().T) / 2


def herm_eig(a, tol: float = HERMITIAN_TOL) -> HermitianEig:
    """
    Ascending eigendecomposition of a Hermitian matrix.

    Raises NotHermitianError when |A - A^dagger|_F exceeds tol.
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f"eigendecomposition needs a square matrix, got {a.shape}")
    defect = np.linalg.norm(a - a.conj().T)
    if defect > tol:
        raise NotHermitianError(f"matrix is not Hermitian: |A - A^dagger|_F = {defect:.3e}")
    values, vectors = eigh(hermitian_part(a))
    return HermitianEig(eigenvalues=values, eigenvectors=vectors)


def psd_power(a, exponent: float) -> CMatrix:
    """
    A^exponent for a Hermitian positive semidefinite A, computed in its eigenbasis.

    Eigenvalues in [-PSD_TOL, 0) are clipped to zero. Negative exponents require
    every eigenvalue above EIGEN_CLIP times the largest one.
    """
    eig = herm_eig(a)
    values = np.array(eig.eigenvalues)
    if values[0] < -PSD_TOL:
        raise NotPositiveError(f"matrix has negative eigenvalue {values[0]:.3e}")
    values = np.clip(values, 0.0, None)
    if exponent < 0:
        top = values[-1]
        if top <= 0 or values[0] <= EIGEN_CLIP * top:
            raise SingularOperatorError(
                f"cannot raise a singular matrix to the power {exponent} "
                f"(eigenvalue range [{values[0]:.3e}, {top:.3e}])"
            )
    powered = values**exponent
    v = eig.eigenvectors
    return (v * powered) @ v.conj().T


def swap_operator(d: int) -> CMatrix:
    """
    The swap E on H (x) H: E |phi>|psi> = |psi>|phi>.
    """
    e = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            e[j * d + i, i * d + j] = 1.0
    return e


def symmetric_projector(d: int) -> CMatrix:
    """
    (I + E) / 2 on C^d (x) C^d.
    """
    return (np.eye(d * d) + swap_operator(d)) / 2


def antisymmetric_projector(d: int) -> CMatrix:
    """
    (I - E) / 2 on C^d (x) C^d.
    """
    return (np.eye(d * d) - swap_operator(d)) / 2


def random_hermitian(d: int, rng: np.random.Generator) -> CMatrix:
    """
    Hermitian part of a complex Gaussian matrix.
    """
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> CMatrix:
    """
    A random full-rank (or rank ``rank``) density matrix G G^dagger / Tr[G G^dagger].
    """
    g = rng.standard_normal((d, rank or d)) + 1j * rng.standard_normal((d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
