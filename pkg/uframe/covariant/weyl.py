"""
Discrete Weyl-Heisenberg group, Bell POVMs and the abelian covariant detector.

The d^2 unitaries U_(a,b) = Z^a X^b with Z|k> = w^k |k>, X|k> = |k+1 mod d>,
w = exp(2 pi i / d), form a projective UIR of Z_d x Z_d:

    U_alpha U_beta U_alpha^dagger = exp(i c(alpha, beta)) U_beta,
    c((a, b), (a', b')) = (2 pi / d)(a b' - a' b).

The flat label of (a, b) is alpha = a * d + b, so alpha = 0 is the identity.
"""
import logging
from functools import cached_property

import numpy as np
from pydantic import BaseModel, model_validator

from uframe.config import PSD_TOL, POVM_TOL, TRACE_FLOOR
from uframe.core.types import ArrayModel, CMatrix, ComplexArray, RealArray
from uframe.errors import DimensionError, InvalidPovmError, NotPositiveError, VanishingTraceError
from uframe.frames.operator_frame import DualFrame, OperatorFrame
from uframe.povm.measurement import DensityMatrix, Povm

logger = logging.getLogger(__name__)


class WeylSystem(ArrayModel):
    d: int
    unitaries: ComplexArray

    @model_validator(mode="after")
    def _check_table(self):
        if self.unitaries.shape != (self.d**2, self.d, self.d):
            raise ValueError(f"expected {self.d ** 2} unitaries of size {self.d}, got {self.unitaries.shape}")
        return self

    @cached_property
    def labels(self) -> np.ndarray:
        """
        Row alpha holds the pair (a, b).
        """
        return np.array([divmod(alpha, self.d) for alpha in range(self.d**2)])

    def index(self, a: int, b: int) -> int:
        return (a % self.d) * self.d + (b % self.d)

    def label(self, alpha: int) -> tuple[int, int]:
        return divmod(alpha, self.d)

    def cocycle(self, alpha: int, beta: int) -> float:
        (a, b), (a2, b2) = self.label(alpha), self.label(beta)
        return 2 * np.pi / self.d * (a * b2 - a2 * b)

    @cached_property
    def cocycle_table(self) -> np.ndarray:
        """
        c[alpha, beta] for every pair.
        """
        a, b = self.labels[:, 0], self.labels[:, 1]
        return 2 * np.pi / self.d * (np.outer(a, b) - np.outer(b, a))

    def negate(self, alpha: int) -> int:
        a, b = self.label(alpha)
        return self.index(-a, -b)

    def __len__(self) -> int:
        return self.d**2


class BellPovm(ArrayModel):
    """
    Pi_i = (alpha_i / d) |U_i>><<U_i| on H (x) H.
    """

    weights: RealArray
    unitaries: ComplexArray

    @property
    def d(self) -> int:
        return self.unitaries.shape[1]

    @cached_property
    def povm(self) -> Povm:
        d = self.d
        kets = self.unitaries.reshape(len(self.unitaries), d * d)
        elements = np.einsum("ki,kj->kij", kets, kets.conj()) * (self.weights / d)[:, None, None]
        return Povm(elements=elements, dim_h=d, dim_k=d)


class WeylDiagnostics(BaseModel):
    d: int
    max_unitarity_error: float
    max_orthogonality_error: float
    max_cocycle_error: float


def weyl_system(d: int) -> WeylSystem:
    """
    The d^2 Weyl unitaries W_(a,b) = Z^a X^b with their index tables.
    """
    if d < 2:
        raise DimensionError(f"the Weyl system needs d >= 2, got {d}")
    omega = np.exp(2j * np.pi / d)
    z = np.diag(omega ** np.arange(d))
    x = np.roll(np.eye(d), 1, axis=0)
    unitaries = np.array(
        [np.linalg.matrix_power(z, a) @ np.linalg.matrix_power(x, b) for a in range(d) for b in range(d)]
    )
    return WeylSystem(d=d, unitaries=unitaries)


def weyl_diagnostics(w: WeylSystem) -> WeylDiagnostics:
    """
    Unitarity, Tr[U_a^dagger U_b] = d delta_ab and the commutation phases.
    """
    d, u = w.d, w.unitaries
    eye = np.eye(d)
    unitarity = max(np.linalg.norm(v.conj().T @ v - eye) for v in u)
    gram = np.einsum("aji,bjk->abik", u.conj(), u).trace(axis1=2, axis2=3)
    orthogonality = float(np.max(np.abs(gram - d * np.eye(d * d))))
    phases = np.exp(1j * w.cocycle_table)
    conj = np.einsum("aij,bjk,alk->abil", u, u, u.conj())
    cocycle = float(np.max(np.abs(conj - phases[:, :, None, None] * u[None, :, :, :])))
    return WeylDiagnostics(
        d=d,
        max_unitarity_error=float(unitarity),
        max_orthogonality_error=orthogonality,
        max_cocycle_error=cocycle,
    )


def bell_povm(unitaries, weights) -> BellPovm:
    """
    Bell POVM from weighted unitaries, checked for unitarity and completeness.
    """
    u = np.asarray(unitaries, dtype=np.complex128)
    w = np.asarray(weights, dtype=np.float64)
    if u.ndim != 3 or u.shape[1] != u.shape[2] or w.shape != (len(u),):
        raise InvalidPovmError("need a stack of square unitaries with one weight each")
    if np.any(w <= 0):
        raise InvalidPovmError("Bell POVM weights must be positive")
    d = u.shape[1]
    for k, v in enumerate(u):
        if np.linalg.norm(v.conj().T @ v - np.eye(d)) > 1e-10:
            raise InvalidPovmError(f"operator {k} is not unitary")
    bell = BellPovm(weights=w, unitaries=u)
    defect = bell.povm.report.completeness_defect
    if defect > POVM_TOL:
        raise InvalidPovmError(f"Bell operators do not sum to the identity: defect {defect:.3e}")
    return bell


def weyl_bell_povm(w: WeylSystem) -> BellPovm:
    """
    Bell POVM of the Weyl system, one outcome per Weyl unitary.
    """
    return bell_povm(w.unitaries, np.ones(len(w)))


def hermitian_weyl_representatives(w: WeylSystem) -> CMatrix:
    """
    Rephased Weyl elements V_alpha with V_{-alpha} = V_alpha^dagger.

    Pairs {alpha, -alpha} get U_alpha and U_alpha^dagger; a self-paired element
    (U^2 proportional to I) is divided by a square root of that scalar, which
    makes it Hermitian. For d = 2 this yields the Pauli matrices.
    """
    reps = np.array(w.unitaries)
    for alpha in range(1, len(w)):
        partner = w.negate(alpha)
        u = w.unitaries[alpha]
        if partner == alpha:
            # principal branch, with -1 taken at angle +pi
            phase = np.angle((u @ u)[0, 0])
            if phase <= -np.pi + 1e-9:
                phase += 2 * np.pi
            reps[alpha] = u * np.exp(-0.5j * phase)
        elif partner > alpha:
            reps[alpha] = u
            reps[partner] = u.conj().T
    return reps


def abelian_ancilla(d: int) -> DensityMatrix:
    """
    nu = I/d + sum_{alpha > 0} V_alpha / (d (d^2 - 1)), Hermitized.
    """
    w = weyl_system(d)
    reps = hermitian_weyl_representatives(w)
    nu = np.eye(d) / d + reps[1:].sum(axis=0) / (d * (d * d - 1))
    nu = (nu + nu.conj().T) / 2
    lowest = np.linalg.eigvalsh(nu)[0]
    if lowest < -PSD_TOL:
        raise NotPositiveError(f"abelian ancilla for d={d} is not positive: eigenvalue {lowest:.3e}")
    logger.debug("abelian ancilla d=%d, lowest eigenvalue %.3e", d, lowest)
    return DensityMatrix(matrix=nu)


def abelian_frame(w: WeylSystem, nu: DensityMatrix) -> OperatorFrame:
    """
    Xi_alpha = U_alpha nu^T U_alpha^dagger / d.
    """
    if nu.dim != w.d:
        raise DimensionError(f"ancilla of dimension {nu.dim} for a d={w.d} Weyl system")
    u = w.unitaries
    elements = u @ nu.transpose @ np.conj(np.swapaxes(u, 1, 2)) / w.d
    return OperatorFrame(elements=elements, labels=tuple(range(len(w))))


def ancilla_traces(w: WeylSystem, nu: DensityMatrix) -> np.ndarray:
    """
    Tr[U_beta nu*] for every beta.
    """
    return np.einsum("bij,ji->b", w.unitaries, nu.matrix.conj())


def abelian_dual(w: WeylSystem, nu: DensityMatrix) -> DualFrame:
    """
    Theta_alpha = (1/d) sum_beta U_beta exp(-i c(beta, alpha)) / Tr[U_beta nu*].
    """
    if nu.dim != w.d:
        raise DimensionError(f"ancilla of dimension {nu.dim} for a d={w.d} Weyl system")
    traces = ancilla_traces(w, nu)
    smallest = np.abs(traces).min()
    if smallest < TRACE_FLOOR:
        raise VanishingTraceError(f"Tr[U_beta nu*] vanishes (|min| = {smallest:.3e}); the frame is singular")
    coefficients = np.exp(-1j * w.cocycle_table) / traces[:, None]
    elements = np.einsum("ba,bij->aij", coefficients, w.unitaries) / w.d
    return DualFrame(elements=elements, provenance="covariant")
