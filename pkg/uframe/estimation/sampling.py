"""
Born-rule sampling and Monte Carlo estimation of Tr[rho O].

Finite detectors are sampled outcome by outcome from Tr[(rho (x) nu) Pi_i].
The continuous SU(d) detector is sampled by importance sampling: unitaries
are drawn from the normalized Haar measure and carry the density
d Tr[rho U nu^T U^dagger] of the covariant POVM as a weight.
"""
import logging
from typing import Callable

import numpy as np
from pydantic import BaseModel, model_validator

from uframe.config import UFRAME_DEFAULT_SEED
from uframe.core.types import ArrayModel, ComplexArray, IntArray, RealArray
from uframe.errors import ShapeMismatchError
from uframe.estimation.haar import haar_unitaries
from uframe.estimation.parallel import run_streams, worker_count
from uframe.povm.measurement import DensityMatrix, Povm, ProcessingFunction, outcome_probabilities

logger = logging.getLogger(__name__)


class ShotRecords(ArrayModel):
    """
    A batch of measurement records.

    Finite detectors fill ``outcomes`` with flat POVM indices. The continuous
    covariant detector fills ``unitaries`` with the sampled group elements and
    ``weights`` with their importance weights.
    """

    size: int
    outcomes: IntArray | None = None
    unitaries: ComplexArray | None = None
    weights: RealArray | None = None
    cardinality: int | None = None

    @model_validator(mode="after")
    def _check_records(self):
        if (self.outcomes is None) == (self.unitaries is None):
            raise ValueError("records hold either outcome indices or sampled unitaries")
        held = self.outcomes if self.outcomes is not None else self.unitaries
        if len(held) != self.size:
            raise ValueError(f"{len(held)} records for size {self.size}")
        if self.outcomes is not None and self.size and self.outcomes.min() < 0:
            raise ValueError("outcome indices must be nonnegative")
        if self.outcomes is not None and self.cardinality is not None and self.size:
            if self.outcomes.max() >= self.cardinality:
                raise ValueError(f"outcome index beyond POVM cardinality {self.cardinality}")
        if self.weights is not None:
            if self.weights.shape != (self.size,):
                raise ValueError("one weight per record is required")
            if np.any(self.weights < 0):
                raise ValueError("importance weights must be nonnegative")
        return self

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    def counts(self) -> np.ndarray:
        if self.outcomes is None:
            raise ShapeMismatchError("unitary records have no outcome counts")
        return np.bincount(self.outcomes, minlength=self.cardinality or 0)

    def __len__(self) -> int:
        return self.size


class Estimate(BaseModel):
    value: float
    imag: float = 0.0
    std_error: float
    samples: int

    @property
    def complex_value(self) -> complex:
        return complex(self.value, self.imag)

    def z_score(self, exact: float) -> float:
        if self.std_error == 0:
            return 0.0 if abs(self.value - exact) < 1e-12 else float("inf")
        return abs(self.value - exact) / self.std_error


def sample_outcomes(
    rho: DensityMatrix,
    nu: DensityMatrix | None,
    p: Povm,
    n: int,
    seed: int = UFRAME_DEFAULT_SEED,
    workers: int | None = None,
) -> ShotRecords:
    """
    n i.i.d. outcome indices distributed as Tr[(rho (x) nu) Pi_i].
    """
    if n < 1:
        raise ValueError("at least one shot is required")
    probs = outcome_probabilities(rho, nu, p)

    def draw(share: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(p.size, size=share, p=probs)

    outcomes = np.concatenate(run_streams(draw, n, seed, worker_count(workers)))
    logger.debug("sampled %d shots over %d outcomes", n, p.size)
    return ShotRecords(size=n, outcomes=outcomes, cardinality=p.size)


def covariant_weights(rho: DensityMatrix, nu: DensityMatrix, unitaries: np.ndarray) -> np.ndarray:
    """
    d Tr[rho U nu^T U^dagger] per unitary: the outcome density against normalized Haar.
    """
    d = rho.dim
    frames = unitaries @ nu.transpose @ np.conj(np.swapaxes(unitaries, 1, 2))
    weights = d * np.einsum("ij,nji->n", rho.matrix, frames).real
    return np.clip(weights, 0.0, None)


def covariant_sample(
    rho: DensityMatrix,
    nu: DensityMatrix,
    n: int,
    seed: int = UFRAME_DEFAULT_SEED,
    workers: int | None = None,
) -> ShotRecords:
    """
    Haar-proposal importance sample of the continuous SU(d) covariant POVM.
    """
    if n < 1:
        raise ValueError("at least one shot is required")
    if rho.dim != nu.dim:
        raise ShapeMismatchError(f"system dimension {rho.dim} differs from ancilla dimension {nu.dim}")

    def draw(share: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        u = haar_unitaries(rho.dim, share, rng)
        return u, covariant_weights(rho, nu, u)

    parts = run_streams(draw, n, seed, worker_count(workers))
    unitaries = np.concatenate([u for u, _ in parts])
    weights = np.concatenate([w for _, w in parts])
    return ShotRecords(size=n, unitaries=unitaries, weights=weights)


def _record_values(records: ShotRecords, f) -> np.ndarray:
    if isinstance(f, ProcessingFunction):
        if records.outcomes is None:
            raise ShapeMismatchError("a processing function needs outcome-index records")
        if records.cardinality is not None and len(f) != records.cardinality:
            raise ShapeMismatchError(f"{len(f)} processing values for {records.cardinality} outcomes")
        return f.values[records.outcomes]
    if records.unitaries is None:
        raise ShapeMismatchError("a function of unitaries needs unitary records")
    values = np.asarray(f(records.unitaries), dtype=np.complex128)
    if values.shape != (records.size,):
        raise ShapeMismatchError(f"expected {records.size} values, got shape {values.shape}")
    return values


def mc_estimate(
    records: ShotRecords,
    f: ProcessingFunction | Callable[[np.ndarray], np.ndarray],
    real: bool = True,
) -> Estimate:
    """
    Sample mean of f over the records with its standard error.

    ``f`` is a processing function indexed by outcome, or a vectorized callable
    mapping the (n, d, d) stack of sampled unitaries to n values. For a
    Hermitian observable only Re f is used. Weighted records are averaged
    self-normalized, with the delta-method standard error.
    """
    if records.size == 0:
        raise ValueError("cannot estimate from empty records")
    values = _record_values(records, f)
    if real:
        values = values.real
    n = records.size
    if records.weights is None:
        mean = values.mean()
        spread = np.abs(values - mean) ** 2
        se = float(np.sqrt(spread.sum() / (n - 1) / n)) if n > 1 else 0.0
    else:
        w = records.weights
        total = w.sum()
        if total <= 0:
            raise ValueError("all importance weights vanish")
        mean = np.dot(w, values) / total
        se = float(np.sqrt(np.dot(w**2, np.abs(values - mean) ** 2)) / total)
    mean = complex(mean)
    return Estimate(value=mean.real, imag=0.0 if real else mean.imag, std_error=se, samples=n)
