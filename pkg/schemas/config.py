import hashlib
import json
import logging
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from typing import Dict, List, Literal, Optional

from errors import ConfigError

logger = logging.getLogger("mh.config")

NormFamily = Literal["two-disk", "euclidean", "p-norm", "sqrt-quadratic-plus-abs", "intersection-of-ellipsoids",
                     "custom-formula"]


class EllipsoidSection(BaseModel):
    form: List[List[float]]
    center: List[float]


class NormSection(BaseModel):
    family: NormFamily
    dimension: int = 2
    label: Optional[str] = None
    p: Optional[float] = None
    quadratic_form: Optional[List[List[float]]] = None
    abs_index: int = 0
    abs_weight: float = 1.0
    ellipsoids: Optional[List[EllipsoidSection]] = None
    formula: Optional[str] = None
    singular_directions: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def _family_parameters(self):
        required = {
            "p-norm": "p",
            "sqrt-quadratic-plus-abs": "quadratic_form",
            "intersection-of-ellipsoids": "ellipsoids",
            "custom-formula": "formula",
        }.get(self.family)
        if required and getattr(self, required) is None:
            raise ValueError(f"family {self.family!r} requires {required!r}")
        if self.family == "two-disk" and self.dimension != 2:
            raise ValueError("the two-disk norm is two-dimensional")
        if not 2 <= self.dimension <= 4:
            raise ValueError("dimension must lie in [2, 4]")
        return self


class ValidationSection(BaseModel):
    samples: int = Field(10000, ge=100)
    seed: int = 0
    validate_on_load: bool = True


class SequenceSection(BaseModel):
    """Either ambient `coordinates`, or canonical `growth` + `offsets` in the frame of `flag`"""
    coordinates: Optional[List[str]] = None
    growth: Optional[List[str]] = None
    offsets: Optional[List[str]] = None
    flag: Optional[List[List[float]]] = None
    level: Optional[int] = None
    base: Optional[List[float]] = None

    @model_validator(mode="after")
    def _one_form(self):
        if (self.coordinates is None) == (self.growth is None):
            raise ValueError("give exactly one of 'coordinates' or 'growth'")
        return self


class HorofunctionSection(BaseModel):
    kind: Literal["busemann", "sequence", "closed-form"]
    origin: Optional[List[float]] = None
    direction: Optional[List[float]] = None
    sequence: Optional[str] = None
    formula: Optional[str] = None
    a: float = 0.0
    lam: Optional[float] = None
    mu: Optional[float] = None
    eps1: int = -1
    eps2: int = 1
    base: Optional[List[float]] = None

    @model_validator(mode="after")
    def _kind_parameters(self):
        if self.kind == "busemann" and self.direction is None:
            raise ValueError("busemann horofunction requires 'direction'")
        if self.kind == "sequence" and self.sequence is None:
            raise ValueError("sequence horofunction requires 'sequence'")
        if self.kind == "closed-form" and self.formula is None:
            raise ValueError("closed-form horofunction requires 'formula'")
        return self


class GridSection(BaseModel):
    low: float = -5.0
    high: float = 5.0
    step: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.high <= self.low:
            raise ValueError("grid high must exceed low")
        return self


class ScheduleSection(BaseModel):
    max_steps: int = Field(40, ge=4, le=200)
    tolerance: float = Field(1e-8, gt=0)
    method: Literal["aitken", "richardson"] = "aitken"
    richardson_order: int = Field(4, ge=2)
    roundoff_factor: float = Field(8.0, gt=0)
    max_roundoff: float = Field(1e-5, gt=0)


class ProjectionSection(BaseModel):
    radii: List[float] = Field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0])
    angular_samples: int = Field(4096, ge=64)
    drift_tol: float = Field(1e-4, gt=0)
    min_tol: float = Field(1e-6, gt=0)

    @field_validator("radii")
    @classmethod
    def _positive(cls, radii):
        if not radii or any(r <= 0 for r in radii):
            raise ValueError("radii must be a non-empty list of positive numbers")
        return sorted(radii)


class RegularitySection(BaseModel):
    tolerance: float = Field(1e-6, gt=0)
    angular_resolution: int = Field(3600, ge=8)


class OutputSection(BaseModel):
    directory: Optional[str] = None
    format: Literal["csv", "svg", "report"] = "report"


class RunConfig(BaseModel):
    norm: NormSection
    validation: ValidationSection = Field(default_factory=ValidationSection)
    sequences: Dict[str, SequenceSection] = Field(default_factory=dict)
    horofunctions: Dict[str, HorofunctionSection] = Field(default_factory=dict)
    grid: GridSection = Field(default_factory=GridSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    projection: ProjectionSection = Field(default_factory=ProjectionSection)
    regularity: RegularitySection = Field(default_factory=RegularitySection)
    output: OutputSection = Field(default_factory=OutputSection)
    seed: int = 20240607
    equivalence_tol: float = Field(1e-6, gt=0)

    @model_validator(mode="after")
    def _references(self):
        for name, section in self.horofunctions.items():
            if section.kind == "sequence" and section.sequence not in self.sequences:
                raise ValueError(f"horofunction {name!r} references unknown sequence {section.sequence!r}")
        for name, section in self.sequences.items():
            width = len(section.coordinates) if section.coordinates is not None else \
                len(section.growth) + len(section.offsets or [])
            if width != self.norm.dimension:
                raise ValueError(f"sequence {name!r} has {width} coordinates, norm dimension is {self.norm.dimension}")
        return self

    def config_hash(self) -> str:
        return compute_hash(json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":")))


def compute_hash(content: str) -> str:
    """SHA256 of the canonical content"""
    return hashlib.sha256(content.encode()).hexdigest()


def parse_config(data: dict, source: str = "<config>") -> RunConfig:
    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"{source}: invalid field {where}: {first['msg']} ({e.error_count()} error(s))")


def load_config(path: str) -> RunConfig:
    """Read a YAML run configuration; parse errors carry line and column"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config ({e.strerror})")
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: YAML parse error{where}: {getattr(e, 'problem', e)}")
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    config = parse_config(data, path)
    logger.info(f"Loaded config {path} (hash {config.config_hash()[:12]})")
    return config
