import numpy as np
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from errors import ArgumentError
from models.vectors import Direction, as_point, as_points

BUSEMANN = "busemann-of-ray"
SEQUENCE = "limit-of-sequence"
CLOSED_FORM = "closed-form"
PROVENANCES = (BUSEMANN, SEQUENCE, CLOSED_FORM)

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Horofunction:
    """Evaluable function on A^n vanishing at `base`.

    `evaluator` maps an (m, n) batch to m raw values; the public call
    subtracts the raw value at the base unless the evaluator is already
    normalized, and returns exactly 0 at the base.
    """

    evaluator: Evaluator
    base: np.ndarray
    provenance: str
    source: Any
    label: str
    offset: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def of(cls, evaluator: Evaluator, base, provenance: str, source: Any = None, label: Optional[str] = None,
           normalized: bool = False, metadata: Optional[Dict] = None) -> "Horofunction":
        if provenance not in PROVENANCES:
            raise ArgumentError(f"horofunction: unknown provenance {provenance!r}")
        base = as_point(base, name="horofunction base")
        offset = 0.0 if normalized else float(np.asarray(evaluator(base[None, :]), dtype=float)[0])
        return cls(evaluator, base, provenance, source, label or provenance, offset, dict(metadata or {}))

    @property
    def dimension(self) -> int:
        return self.base.size

    def values(self, points) -> np.ndarray:
        pts = as_points(points, self.dimension)
        out = np.asarray(self.evaluator(pts), dtype=float) - self.offset
        at_base = np.all(pts == self.base, axis=1)
        if np.any(at_base):
            out = np.where(at_base, 0.0, out)
        return out

    def __call__(self, x):
        if np.ndim(x) == 1:
            return float(self.values(x)[0])
        return self.values(x)

    def describe(self) -> Dict[str, Any]:
        source = self.source
        if hasattr(source, "origin"):
            source = {"origin": source.origin.tolist(), "direction": source.direction.vector.tolist()}
        return {
            "label": self.label,
            "provenance": self.provenance,
            "source": source,
            "base": self.base.tolist(),
            "metadata": {k: v for k, v in self.metadata.items() if k != "certificate_values"},
        }


@dataclass(frozen=True, eq=False)
class HoroballSample:
    """Level-set points of `horofunction` inside `box`.

    `polylines` is filled in the plane only; `inside` marks probe-grid nodes
    in the closed sublevel set {f <= level}.
    """

    horofunction: Horofunction
    level: float
    points: np.ndarray
    polylines: List[np.ndarray]
    grid: np.ndarray
    inside: np.ndarray
    max_residual: float
    diagnostic: Optional[str] = None

    @property
    def empty(self) -> bool:
        return len(self.points) == 0


@dataclass(frozen=True, eq=False)
class WeakPoint:
    """Class of codirected rays, i.e. a Minkowski-unit direction"""

    direction: Direction

    def angle_to(self, other: "WeakPoint") -> float:
        return self.direction.angle_to(other.direction)

    def __repr__(self) -> str:
        return f"WeakPoint({np.array2string(self.direction.vector, precision=10)})"


@dataclass(frozen=True, eq=False)
class CoarsePoint:
    representative: Horofunction
    id: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def of(cls, f: Horofunction, id: Optional[str] = None, **metadata) -> "CoarsePoint":
        meta = {"provenance": f.provenance}
        meta.update(metadata)
        return cls(f, id or f.label, meta)
