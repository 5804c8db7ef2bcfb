from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional


class InvariantFinding(BaseModel):
    name: str
    passed: bool
    statistic: float
    tolerance: float


class NormValidationReport(BaseModel):
    norm: Dict[str, Any]
    samples: int
    seed: int
    findings: List[InvariantFinding]
    passed: bool

    def failed(self) -> List[str]:
        return [f.name for f in self.findings if not f.passed]


class LevelCheck(BaseModel):
    level: int
    direction: List[float]
    direction_angles: List[float] = Field(default_factory=list)
    escape_distances: List[float] = Field(default_factory=list)
    ratios: List[float] = Field(default_factory=list)
    direction_converges: bool
    escapes: bool
    ratio_vanishes: bool
    growth_diverges: Optional[bool] = None
    growth_dominates: Optional[bool] = None

    @property
    def passed(self) -> bool:
        checks = [self.direction_converges, self.escapes, self.ratio_vanishes, self.growth_diverges,
                  self.growth_dominates]
        return all(c for c in checks if c is not None)


class FlagValidationReport(BaseModel):
    declared_level: int
    detected_level: Optional[int]
    detected_directions: List[List[float]] = Field(default_factory=list)
    levels: List[LevelCheck]
    offsets_converge: bool
    offset_limits: List[float] = Field(default_factory=list)
    asymptotic_through: Optional[List[float]] = None
    verdict: str
    valid: bool
    findings: List[str] = Field(default_factory=list)


class FiberRecord(BaseModel):
    id: str
    projection: Optional[List[float]] = None
    angular_error: Optional[float] = None
    busemann: Optional[str] = None
    equivalence_class: Optional[int] = None
    excluded: bool = False
    note: Optional[str] = None


class FiberReport(BaseModel):
    direction: List[float]
    records: List[FiberRecord]
    classes: int
    min_spread: Optional[float] = None
    excluded: List[str] = Field(default_factory=list)


class ContinuityReport(BaseModel):
    target: List[float]
    projections: List[List[float]]
    angular_distances: List[float]
    sup_distances: List[float]
    converges: bool


class RegularityReport(BaseModel):
    verdict: str
    resolution: int
    tolerance: float
    singular_directions: List[List[float]]
    max_regular_width: float
    localized_corners: int = 0
    declared_confirmed: List[List[float]] = Field(default_factory=list)
    declared_unconfirmed: List[List[float]] = Field(default_factory=list)


class CriterionRecord(BaseModel):
    criterion: str
    status: str
    error_message: Optional[str] = None
    duration_ms: int = 0
    data: Dict[str, Any] = Field(default_factory=dict)


class ReportEnvelope(BaseModel):
    """Wrapper every subcommand emits"""
    command: str
    status: int
    config_hash: str
    seed: int
    tolerances: Dict[str, float]
    payload: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None
