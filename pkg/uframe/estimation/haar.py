"""
Haar-random unitaries and Monte Carlo checks of the Haar moment identities.

Averages here are over the normalized Haar measure. The identities checked by
haar_identity_check are

    E[U A U^dagger]                = Tr[A] I / d
    E[(U (x) U) A (U (x) U)^dagger] = Tr[P_S A] P_S / d_S + Tr[P_A A] P_A / d_A
    Tr[E (B (x) B)]                 = Tr[B^2]

with d_S = d(d+1)/2, d_A = d(d-1)/2. Integrating instead against a measure of
total mass d multiplies the first two right-hand sides by d, giving the forms
Tr[A] I and 2/(d+1) Tr[P_S A] P_S + 2/(d-1) Tr[P_A A] P_A.
"""
import logging

import numpy as np
from pydantic import BaseModel

from uframe.core.hilbert_schmidt import (
    antisymmetric_projector,
    as_cmatrix,
    random_hermitian,
    swap_operator,
    symmetric_projector,
)
from uframe.core.types import CMatrix
from uframe.errors import DimensionError

logger = logging.getLogger(__name__)

CHUNK = 10_000


class HaarSampler(BaseModel):
    """
    Seeded source of n Haar unitaries of dimension d.
    """

    d: int
    seed: int
    n: int

    def unitaries(self) -> np.ndarray:
        return haar_unitaries(self.d, self.n, np.random.default_rng(self.seed))

    def states(self, psi0=None) -> np.ndarray:
        """
        Rows U_k |psi0>; psi0 defaults to the first basis vector.
        """
        u = self.unitaries()
        if psi0 is None:
            return np.array(u[:, :, 0])
        return u @ np.asarray(psi0, dtype=np.complex128)


class MomentCheck(BaseModel):
    max_error: float
    max_std_error: float
    max_z: float


class HaarIdentityReport(BaseModel):
    d: int
    samples: int
    seed: int
    first_moment: MomentCheck
    second_moment: MomentCheck
    swap_identity_error: float


def haar_unitaries(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    n Haar unitaries: QR of complex Ginibre matrices with R-diagonal phase fix.
    """
    if d < 2:
        raise DimensionError(f"Haar sampling needs d >= 2, got {d}")
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_unitary(d: int, source: np.random.Generator) -> CMatrix:
    """
    One Haar unitary.
    """
    return haar_unitaries(d, 1, source)[0]


def twirl(a, unitaries: np.ndarray) -> CMatrix:
    """
    Sample mean of U A U^dagger.
    """
    a = as_cmatrix(a)
    return (unitaries @ a @ np.conj(np.swapaxes(unitaries, 1, 2))).mean(axis=0)


def _moment_check(chunks, expected: CMatrix) -> MomentCheck:
    """
    Mean of the sampled matrices against ``expected``, accumulated chunk by chunk.
    """
    n, total, total_sq = 0, 0.0, 0.0
    for samples in chunks:
        n += len(samples)
        total = total + samples.sum(axis=0)
        total_sq = total_sq + (samples.real**2 + samples.imag**2).sum(axis=0)
    mean = total / n
    # pooled variance of real and imaginary parts
    var = (total_sq - n * np.abs(mean) ** 2) / (n - 1)
    se = np.sqrt(np.clip(var, 0.0, None) / n)
    err = np.abs(mean - expected)
    z = np.where(err < 1e-12, 0.0, err / np.maximum(se, 1e-300))
    return MomentCheck(max_error=float(err.max()), max_std_error=float(se.max()), max_z=float(z.max()))


def second_moment_expectation(a, d: int) -> CMatrix:
    """
    Haar average of (U (x) U) A (U (x) U)^dagger.
    """
    a = as_cmatrix(a)
    p_s, p_a = symmetric_projector(d), antisymmetric_projector(d)
    dim_s, dim_a = d * (d + 1) / 2, d * (d - 1) / 2
    return np.trace(p_s @ a) * p_s / dim_s + np.trace(p_a @ a) * p_a / dim_a


def haar_identity_check(
    d: int,
    n: int,
    seed: int,
    a=None,
    a2=None,
    b=None,
) -> HaarIdentityReport:
    """
    Monte Carlo errors of the first and second Haar moment identities and the
    exact swap identity. Test operators default to seeded random Hermitian ones.
    """
    if n < 1000:
        raise ValueError("haar_identity_check needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    a = random_hermitian(d, rng) if a is None else as_cmatrix(a)
    a2 = random_hermitian(d * d, rng) if a2 is None else as_cmatrix(a2)
    b = random_hermitian(d, rng) if b is None else as_cmatrix(b)
    u = haar_unitaries(d, n, rng)

    def first_chunks():
        for block in np.array_split(u, max(1, n // CHUNK)):
            yield block @ a @ np.conj(np.swapaxes(block, 1, 2))

    def second_chunks():
        for block in np.array_split(u, max(1, n // CHUNK)):
            m = len(block)
            uu = np.einsum("nij,nkl->nikjl", block, block).reshape(m, d * d, d * d)
            yield uu @ a2 @ np.conj(np.swapaxes(uu, 1, 2))

    first = _moment_check(first_chunks(), np.trace(a) * np.eye(d) / d)
    second = _moment_check(second_chunks(), second_moment_expectation(a2, d))

    swap_error = abs(np.trace(swap_operator(d) @ np.kron(b, b)) - np.trace(b @ b))
    logger.debug("haar identities d=%d n=%d: z1=%.2f z2=%.2f", d, n, first.max_z, second.max_z)
    return HaarIdentityReport(
        d=d,
        samples=n,
        seed=seed,
        first_moment=first,
        second_moment=second,
        swap_identity_error=float(swap_error),
    )
