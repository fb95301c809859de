"""
Shared input resolution for the subcommands.

Ancillas, states and observables are given either as a keyword or as the path
of a JSON matrix file in the MatrixSchema layout.

Functions:
- read_matrix: Load a MatrixSchema file.
- resolve_ancilla: paper-abelian, pure-basis, maximally-mixed or a file.
- resolve_state: basis-zero, random-pure, maximally-mixed or a file.
- resolve_observable: pauli-z, random-hermitian or a file.
"""
import logging
from pathlib import Path

import numpy as np

from uframe.core.hilbert_schmidt import random_hermitian
from uframe.covariant.weyl import abelian_ancilla
from uframe.errors import DimensionError
from uframe.estimation.haar import haar_unitary
from uframe.povm.measurement import DensityMatrix, Observable
from uframe.schemas import MatrixSchema

logger = logging.getLogger(__name__)


def read_matrix(path: str | Path) -> np.ndarray:
    """
    Read a matrix file.
    """
    schema = MatrixSchema.model_validate_json(Path(path).read_text(encoding="utf-8"))
    return schema.to_matrix()


def _check_dim(m: np.ndarray, d: int, what: str) -> np.ndarray:
    if m.shape != (d, d):
        raise DimensionError(f"{what} of shape {m.shape} for d={d}")
    return m


def resolve_ancilla(value: str, d: int) -> DensityMatrix:
    """
    Ancilla keyword or matrix file to a density matrix.
    """
    if value == "paper-abelian":
        return abelian_ancilla(d)
    if value == "pure-basis":
        return DensityMatrix.basis(d)
    if value == "maximally-mixed":
        return DensityMatrix.maximally_mixed(d)
    logger.info("reading ancilla from %s", value)
    return DensityMatrix(matrix=_check_dim(read_matrix(value), d, "ancilla"))


def resolve_state(value: str, d: int, rng: np.random.Generator) -> DensityMatrix:
    """
    State keyword or matrix file to a density matrix.
    """
    if value == "basis-zero":
        return DensityMatrix.basis(d)
    if value == "random-pure":
        return DensityMatrix.pure(haar_unitary(d, rng)[:, 0])
    if value == "maximally-mixed":
        return DensityMatrix.maximally_mixed(d)
    logger.info("reading state from %s", value)
    return DensityMatrix(matrix=_check_dim(read_matrix(value), d, "state"))


def resolve_observable(value: str, d: int, rng: np.random.Generator) -> Observable:
    """
    pauli-z is diag(1, ..., -1) with equally spaced entries, i.e. Z for d = 2.
    """
    if value == "pauli-z":
        return Observable(matrix=np.diag(np.linspace(1.0, -1.0, d)))
    if value == "random-hermitian":
        return Observable(matrix=random_hermitian(d, rng))
    logger.info("reading observable from %s", value)
    return Observable.of(_check_dim(read_matrix(value), d, "observable"))
