"""
Shared array types and the frozen pydantic base used by every array-valued model.
"""
from typing import Annotated, TypeAlias

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, BeforeValidator, ConfigDict

CMatrix: TypeAlias = npt.NDArray[np.complex128]
RVector: TypeAlias = npt.NDArray[np.float64]


def frozen_array(value, dtype=np.complex128) -> np.ndarray:
    """
    Copy ``value`` into a read-only array of ``dtype``, rejecting NaN/Inf entries.
    """
    try:
        arr = np.array(value, dtype=dtype, copy=True)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"cannot read an array of {np.dtype(dtype).name}: {exc}") from exc
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite entries")
    arr.flags.writeable = False
    return arr


def _complex_array(value) -> np.ndarray:
    return frozen_array(value, np.complex128)


def _real_array(value) -> np.ndarray:
    return frozen_array(value, np.float64)


def _int_array(value) -> np.ndarray:
    try:
        arr = np.array(value, dtype=np.int64, copy=True)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"cannot read an integer array: {exc}") from exc
    arr.flags.writeable = False
    return arr


ComplexArray = Annotated[np.ndarray, BeforeValidator(_complex_array)]
RealArray = Annotated[np.ndarray, BeforeValidator(_real_array)]
IntArray = Annotated[np.ndarray, BeforeValidator(_int_array)]


class ArrayModel(BaseModel):
    """
    Base schema for immutable models holding numpy arrays.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
