from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationInfo, field_validator

from .families import trace_preserving_normalization
from .channel import KrausChannel

ComplexPair = Tuple[float, float]


def to_pair(value: complex) -> ComplexPair:
    value = complex(value)
    return (float(value.real), float(value.imag))


def to_pairs(values: Any) -> List[ComplexPair]:
    return [to_pair(v) for v in np.asarray(values).ravel()]


def to_pair_matrix(m: Any) -> List[List[ComplexPair]]:
    return [[to_pair(v) for v in row] for row in np.asarray(m)]


def plain(value: Any) -> Any:
    """Turn numpy scalars, arrays and complex numbers into JSON-ready data."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return list(to_pair(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class ChannelFixture(BaseModel):
    """Kraus operators as nested [re, im] pairs, one document per channel."""

    name: str = Field(..., min_length=1)
    dim: int = Field(..., ge=1)
    kraus: List[List[List[ComplexPair]]] = Field(..., min_length=1)
    metadata: Dict[str, Any] = Field(default_factory=dict)
    normalization: Literal["none", "trace_preserving"] = "none"

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("Fixture name cannot be empty")
        return v.strip()

    @field_validator("kraus")
    @classmethod
    def validate_shapes(
        cls, v: List[List[List[ComplexPair]]], info: ValidationInfo
    ) -> List[List[List[ComplexPair]]]:
        n = info.data.get("dim")
        if n is None:
            return v
        if len(v) > n * n:
            raise ValueError(
                f"{len(v)} Kraus operators exceed n^2 = {n * n}"
            )
        for op_idx, op in enumerate(v):
            if len(op) != n:
                raise ValueError(
                    f"kraus[{op_idx}] has {len(op)} rows, expected {n}"
                )
            for row_idx, row in enumerate(op):
                if len(row) != n:
                    raise ValueError(
                        f"kraus[{op_idx}] row {row_idx} has {len(row)} "
                        f"entries, expected {n}"
                    )
        return v

    def matrices(self) -> List[np.ndarray]:
        return [
            np.array([[complex(re, im) for re, im in row] for row in op])
            for op in self.kraus
        ]

    def to_channel(self) -> KrausChannel:
        kraus = self.matrices()
        if self.normalization == "trace_preserving":
            kraus = trace_preserving_normalization(kraus)
        return KrausChannel.from_kraus(kraus)

    @classmethod
    def from_matrices(
        cls,
        name: str,
        kraus: List[np.ndarray],
        metadata: Optional[Dict[str, Any]] = None,
        normalization: str = "none",
    ) -> "ChannelFixture":
        return cls(
            name=name,
            dim=int(np.asarray(kraus[0]).shape[0]),
            kraus=[to_pair_matrix(a) for a in kraus],
            metadata=plain(metadata or {}),
            normalization=normalization,
        )


class ValidationSection(BaseModel):
    trace_preserving: bool
    unital: bool
    tp_residual: float
    unital_residual: float


class SpectrumSection(BaseModel):
    eigenvalues: List[ComplexPair]
    peripheral: List[ComplexPair]
    spectral_radius: float
    epsilon: float


class FixedPointSection(BaseModel):
    full_rank: bool
    min_eigenvalue: float
    residual: float
    state: List[List[ComplexPair]]
    notes: List[str] = Field(default_factory=list)


class AlgebraSection(BaseModel):
    dimension: int
    include_identity: bool
    star_closed: bool
    closure_residual: float
    labels: List[str]
    level_dims: List[int]
    adjoint_coefficients: List[List[ComplexPair]]


class BlocksSection(BaseModel):
    dims: List[int] = Field(default_factory=list)
    leakage: Optional[float] = None
    irreducible: List[bool] = Field(default_factory=list)
    error: Optional[Dict[str, Any]] = None


class ShemeshSection(BaseModel):
    method: Literal["shemesh", "generalized_shemesh", "unavailable"]
    operators: List[int] = Field(default_factory=list)
    dimension: Optional[int] = None
    basis: List[List[ComplexPair]] = Field(default_factory=list)
    note: Optional[str] = None


class PrimitivitySection(BaseModel):
    certified: bool
    witness_m: Optional[int]
    span_dims: List[int]
    m_max: int


class CertificateModel(BaseModel):
    name: str
    detail: Dict[str, Any] = Field(default_factory=dict)


class PredictionSection(BaseModel):
    structure: str
    block_dims: List[int]
    order_bounds: List[List[int]]
    period_bound: Optional[int]
    longest_period: Optional[int]
    global_orders: Optional[List[int]] = None
    certificates: List[CertificateModel] = Field(default_factory=list)


class DynamicsSection(BaseModel):
    period: Optional[int]
    angles: List[str]
    non_cyclic: List[ComplexPair] = Field(default_factory=list)
    steps: Optional[int] = None
    lag_distances: Optional[Dict[str, float]] = None
    trace_drift: Optional[float] = None


class ConsistencySection(BaseModel):
    """Cross-check of the numerical spectrum against the prediction."""

    peripheral_allowed: bool
    period_divides_bound: Optional[bool]
    tolerance: float


class AnalysisReport(BaseModel):
    fixture: str
    command: str
    tool_version: str
    seed: int
    tolerances: Dict[str, float]
    validation: Optional[ValidationSection] = None
    spectrum: Optional[SpectrumSection] = None
    fixed_point: Optional[FixedPointSection] = None
    algebra: Optional[AlgebraSection] = None
    blocks: Optional[BlocksSection] = None
    shemesh: Optional[ShemeshSection] = None
    primitivity: Optional[PrimitivitySection] = None
    prediction: Optional[PredictionSection] = None
    dynamics: Optional[DynamicsSection] = None
    consistency: Optional[ConsistencySection] = None
    steps_completed: List[str] = Field(default_factory=list)
