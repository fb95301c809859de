"""
Pydantic schemas for the JSON files read and the reports written by the CLI.

Matrices travel as {rows, cols, re, im} with ``im`` optional for real data.
"""
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from uframe.config import DEFAULT_QUADRATURE, UFRAME_DEFAULT_SEED
from uframe.frames.operator_frame import OperatorFrame
from uframe.povm.measurement import Povm, PovmReport, UniversalityReport


class MatrixSchema(BaseModel):
    """
    Dense complex matrix as nested lists of real and imaginary parts.
    """
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    re: list[list[float]]
    im: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _check_shape(self):
        for part in (self.re, self.im):
            if part is None:
                continue
            if len(part) != self.rows or any(len(row) != self.cols for row in part):
                raise ValueError(f"matrix entries do not match shape ({self.rows}, {self.cols})")
        return self

    def to_matrix(self) -> np.ndarray:
        m = np.array(self.re, dtype=np.complex128)
        if self.im is not None:
            m = m + 1j * np.array(self.im, dtype=np.float64)
        return m

    @classmethod
    def from_matrix(cls, a) -> "MatrixSchema":
        m = np.asarray(a, dtype=np.complex128)
        return cls(rows=m.shape[0], cols=m.shape[1], re=m.real.tolist(), im=m.imag.tolist())


class FrameFile(BaseModel):
    """
    Schema of a frame file: operators K -> H with optional quadrature weights.
    """
    dim_h: int = Field(ge=1)
    dim_k: int = Field(ge=1)
    weights: Optional[list[float]] = None
    elements: list[MatrixSchema] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_elements(self):
        for i, e in enumerate(self.elements):
            if (e.rows, e.cols) != (self.dim_h, self.dim_k):
                raise ValueError(f"element {i} has shape ({e.rows}, {e.cols})")
        if self.weights is not None and len(self.weights) != len(self.elements):
            raise ValueError("one weight per element is required")
        return self

    def to_frame(self) -> OperatorFrame:
        ops = np.array([e.to_matrix() for e in self.elements])
        if self.weights is None:
            return OperatorFrame(elements=ops)
        return OperatorFrame.weighted(ops, self.weights)


class PovmFile(BaseModel):
    """
    Schema of a POVM file, optionally split as H (x) K.
    """
    dim: int = Field(ge=1)
    dim_h: Optional[int] = None
    dim_k: Optional[int] = None
    elements: list[MatrixSchema] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_elements(self):
        for i, e in enumerate(self.elements):
            if (e.rows, e.cols) != (self.dim, self.dim):
                raise ValueError(f"element {i} has shape ({e.rows}, {e.cols}), expected ({self.dim}, {self.dim})")
        return self

    def to_povm(self) -> Povm:
        return Povm(
            elements=np.array([e.to_matrix() for e in self.elements]),
            dim_h=self.dim_h,
            dim_k=self.dim_k,
        )


AncillaKeyword = Literal["paper-abelian", "pure-basis", "maximally-mixed"]
ObservableKeyword = Literal["pauli-z", "random-hermitian"]
StateKeyword = Literal["basis-zero", "random-pure", "maximally-mixed"]

ANCILLA_KEYWORDS = ("paper-abelian", "pure-basis", "maximally-mixed")
OBSERVABLE_KEYWORDS = ("pauli-z", "random-hermitian")
STATE_KEYWORDS = ("basis-zero", "random-pure", "maximally-mixed")


def _keyword_or_file(value: str, keywords: tuple[str, ...], what: str) -> str:
    if value in keywords or value.endswith(".json"):
        return value
    raise ValueError(f"{what} must be one of {', '.join(keywords)} or a .json file, got {value!r}")


class ExperimentConfig(BaseModel):
    """
    Schema of an experiment configuration file.
    """
    experiment: Literal[
        "estimate", "reconstruct", "universality", "variance-scan", "optimality-demo", "haar-check"
    ] = "estimate"
    d: int = Field(default=2, ge=2)
    detector: Literal["weyl", "sud"] = "weyl"
    ancilla: str = "paper-abelian"
    observable: str = "pauli-z"
    state: str = "basis-zero"
    shots: int = Field(default=100_000, ge=1)
    seed: int = UFRAME_DEFAULT_SEED
    n_group: int = Field(default=10, ge=1)
    quadrature: int = Field(default=DEFAULT_QUADRATURE, ge=1)
    threads: Optional[int] = Field(default=None, ge=1)
    output: Optional[str] = None
    csv: Optional[str] = None

    @field_validator("ancilla")
    @classmethod
    def _check_ancilla(cls, value: str) -> str:
        return _keyword_or_file(value, ANCILLA_KEYWORDS, "ancilla")

    @field_validator("observable")
    @classmethod
    def _check_observable(cls, value: str) -> str:
        return _keyword_or_file(value, OBSERVABLE_KEYWORDS, "observable")

    @field_validator("state")
    @classmethod
    def _check_state(cls, value: str) -> str:
        return _keyword_or_file(value, STATE_KEYWORDS, "state")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


class FrameCheckReport(BaseModel):
    """
    Output of ``frame check``.
    """
    size: int
    dim_h: int
    dim_k: int
    lower_bound: float
    upper_bound: float
    is_frame: bool
    canonical_dual_defect: Optional[float] = None


class PovmCheckReport(BaseModel):
    """
    Output of ``povm check``.
    """
    povm: PovmReport
    info_complete: bool
    universality: Optional[UniversalityReport] = None


class WeylCheckReport(BaseModel):
    """
    Output of ``covariant weyl``.
    """
    d: int
    max_unitarity_error: float
    max_orthogonality_error: float
    max_cocycle_error: float
    bell_completeness_defect: float
    ancilla: MatrixSchema
    ancilla_min_eigenvalue: float
    min_abs_trace: float
    dual_completeness_defect: float
    unique_dual_distance: float


class SudCheckReport(BaseModel):
    """
    Output of ``covariant sud``.
    """
    d: int
    p: float
    a: float
    b: float
    eigenvalues: list[float]
    xi: MatrixSchema
    xi_purity: float
    dual_conditions_hold: bool
    noise_coefficient: float


class ExperimentReport(BaseModel):
    """
    Common envelope: every report embeds the resolved configuration.
    """
    config: ExperimentConfig


class EstimateReport(ExperimentReport):
    estimate: float
    std_error: float
    exact: float
    z_score: float
    delta_obs: float
    delta_xi: float
    ratio: float


class ReconstructReport(ExperimentReport):
    operators: int
    max_reconstruction_error: float
    dual_completeness_defect: float


class UniversalityExperimentReport(ExperimentReport):
    universal: bool
    lower_bound: float
    upper_bound: float


class VarianceScanRow(BaseModel):
    p: float
    coefficient: float
    empirical_ratio: Optional[float] = None
    empirical_ratio_std_error: Optional[float] = None


class VarianceScanReport(ExperimentReport):
    rows: list[VarianceScanRow]
    strictly_decreasing: bool


class OptimalityReport(ExperimentReport):
    delta_obs: float
    delta_xi: float
    ratio: float
    empirical_ratio: Optional[float] = None
    empirical_ratio_std_error: Optional[float] = None
    min_perturbed_purity_excess: Optional[float] = None


class HaarCheckReport(ExperimentReport):
    first_moment_max_error: float
    first_moment_max_z: float
    second_moment_max_error: float
    second_moment_max_z: float
    swap_identity_error: float
