"""
Reference POVMs: computational-basis projections, product projections on H (x) K
and the qubit tetrahedral (SIC) POVM.
"""
import numpy as np

from uframe.povm.measurement import Povm

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# Bloch vectors of a regular tetrahedron.
TETRAHEDRON = np.array(
    [
        [1, 1, 1],
        [1, -1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
    ]
) / np.sqrt(3)


def computational_povm(d: int) -> Povm:
    """
    Projective measurement {|k><k|}.
    """
    elements = np.zeros((d, d, d), dtype=np.complex128)
    for k in range(d):
        elements[k, k, k] = 1.0
    return Povm(elements=elements)


def product_povm(dim_h: int, dim_k: int) -> Povm:
    """
    {|n><n| (x) |m><m|} on H (x) K, outcome index n * dim_k + m.
    """
    elements = np.array(
        [np.kron(h, k) for h in computational_povm(dim_h).elements for k in computational_povm(dim_k).elements]
    )
    return Povm(elements=elements, dim_h=dim_h, dim_k=dim_k)


def tetrahedron_projectors() -> np.ndarray:
    """
    The four pure states (I + n_k . sigma) / 2.
    """
    return np.array([(PAULI_I + n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z) / 2 for n in TETRAHEDRON])


def tetrahedral_povm() -> Povm:
    """
    Qubit SIC-POVM with Bloch vectors on a regular tetrahedron.
    """
    return Povm(elements=tetrahedron_projectors() / 2)
