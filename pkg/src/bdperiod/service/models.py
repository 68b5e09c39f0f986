"""Pydantic request and response schemas for the analysis service."""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from ..policy import ProbePolicy

Row = Annotated[list[float], Field(min_length=3, max_length=3)]


class ConstantTail(BaseModel):
    model_config = ConfigDict(extra="forbid")
    family: Literal["constant"]
    p: float
    q: float
    r: float


class GeometricSelfTail(BaseModel):
    model_config = ConfigDict(extra="forbid")
    family: Literal["geometric_self"]
    p: float
    q: float
    c: float
    rho: float


class PowerSelfTail(BaseModel):
    model_config = ConfigDict(extra="forbid")
    family: Literal["power_self"]
    p: float
    q: float
    c: float
    alpha: float


class ProductPositiveTail(BaseModel):
    model_config = ConfigDict(extra="forbid")
    family: Literal["product_positive"]
    c: float
    rho: float


class ZeroSelfTailModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    family: Literal["zero_self_tail"]
    p: float
    q: float


Tail = Annotated[
    Union[ConstantTail, GeometricSelfTail, PowerSelfTail, ProductPositiveTail, ZeroSelfTailModel],
    Field(discriminator="family"),
]


class ChainDocument(BaseModel):
    """The chain-spec document; unknown fields are rejected."""

    model_config = ConfigDict(extra="forbid")
    prefix: list[Row] = Field(default_factory=list)
    tail: Tail
    n0: Optional[int] = None


class PolicyOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")
    horizon: Optional[int] = None
    div_threshold: Optional[float] = None
    qbar_threshold: Optional[float] = None
    qbar_horizon: Optional[int] = None
    use_analytic: Optional[bool] = None

    def to_policy(self) -> ProbePolicy:
        kwargs = {k: v for k, v in self.model_dump().items() if v is not None}
        return ProbePolicy(**kwargs)


class SimulateOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")
    seed: int = 1
    seeds: int = Field(default=1, ge=1, description="fleet size")
    steps: int = Field(default=1_000_000, ge=1)
    burn_in: Optional[int] = Field(default=None, ge=0)
    m: list[int] = Field(default_factory=lambda: [2])
    x0: int = Field(default=0, ge=0)
    window: int = Field(default=1024, ge=1)


class AnalyzeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    chain: ChainDocument
    policy: PolicyOptions = Field(default_factory=PolicyOptions)
    simulate: Optional[SimulateOptions] = None


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    chain: ChainDocument
    sim: SimulateOptions = Field(default_factory=SimulateOptions)


class QpolyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    chain: ChainDocument
    n: int = Field(default=200, ge=0)
    route: Literal["direct", "sum1", "sum2"] = "direct"
    x: float = -1.0
    policy: PolicyOptions = Field(default_factory=PolicyOptions)


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    chain: ChainDocument


class ToolInfo(BaseModel):
    name: str
    version: str


class VerdictModel(BaseModel):
    decision: Literal["diverges", "converges", "undecided"]
    method: Literal["analytic", "numeric_threshold"]
    horizon_used: int
    partial_value: float
    note: str = ""


class ClassificationModel(BaseModel):
    kind: Literal["positive_recurrent", "null_recurrent", "transient", "undecided"]
    mass: VerdictModel
    scale: VerdictModel


class CrossChecksModel(BaseModel):
    series_vs_growth: bool
    qbar_routes: bool
    qbar_max_rel_diff: float


class PeriodReportModel(BaseModel):
    classification: ClassificationModel
    birth_product: VerdictModel
    aperiodicity: VerdictModel
    period: Union[int, Literal["infinite", "undecided"]]
    fired_sufficient_conditions: list[str]
    cross_checks: CrossChecksModel


class SeriesSummaryModel(BaseModel):
    horizon: int
    verdicts: dict[str, VerdictModel]
    final_partials: dict[str, float]


class QbarSummaryModel(BaseModel):
    x: float
    n: int
    route: str
    last_value: float
    saturated_at: Optional[int]
    growth: Optional[VerdictModel]


class ResidueClassModel(BaseModel):
    m: int
    estimate: Union[int, Literal["inconclusive"]]
    n_states: int
    n_voters: int
    diagnostics: dict


class ReturnsModel(BaseModel):
    count: int
    last_index: Optional[int]


class EmpiricalReportModel(BaseModel):
    seed: int
    x0: int
    steps: int
    burn_in: int
    period_estimate: Union[int, Literal["infinite_signature", "inconclusive"]]
    last_nonright_step: Optional[int]
    parity_lock_step: int
    returns_to_origin: ReturnsModel
    residue: dict[str, ResidueClassModel]
    moves: dict[str, int]
    moves_post: dict[str, int]
    final_state: int
    max_state: int


class EmpiricalAgreementModel(BaseModel):
    majority_estimate: Union[int, str]
    analytic_period: Union[int, str]
    matches: Optional[bool]
    estimate_counts: dict[str, int]


class PolicyEcho(BaseModel):
    horizon: int
    div_threshold: float
    qbar_threshold: float
    qbar_horizon: int
    use_analytic: bool


class AnalyzeResponse(BaseModel):
    tool: ToolInfo
    chain: ChainDocument
    row0_adjusted: bool
    policy: PolicyEcho
    period_report: PeriodReportModel
    series: SeriesSummaryModel
    qbar: QbarSummaryModel
    empirical: Optional[list[EmpiricalReportModel]]
    empirical_agreement: Optional[EmpiricalAgreementModel]


class SimulateResponse(BaseModel):
    tool: ToolInfo
    chain: ChainDocument
    row0_adjusted: bool
    master_seed: int
    fleet: int
    steps: int
    burn_in: int
    ms: list[int]
    x0: int
    reports: list[EmpiricalReportModel]
    estimate_counts: dict[str, int]
    majority_estimate: Union[int, str]


class QpolyResponse(BaseModel):
    tool: ToolInfo
    chain: ChainDocument
    x: float
    route: str
    is_qbar: bool
    values: list[float]
    summary: QbarSummaryModel


class ValidateResponse(BaseModel):
    valid: bool
    chain: ChainDocument
    row0_adjusted: bool


class ErrorInfo(BaseModel):
    type: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorInfo
