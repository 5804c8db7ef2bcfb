import numpy as np
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

from errors import ArgumentError

UNIT_TOL = 1e-12
RENORMALIZE_TOL = 1e-6
MIN_DIMENSION = 2
MAX_DIMENSION = 4


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def as_vector(values, dimension: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce to a read-only 1-D float array, checking dimension and finiteness"""
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise ArgumentError(f"{name}: not a numeric vector ({e})")
    if arr.ndim != 1:
        raise ArgumentError(f"{name}: expected a flat coordinate list, got shape {arr.shape}")
    if arr.size < MIN_DIMENSION:
        raise ArgumentError(f"{name}: dimension {arr.size} below {MIN_DIMENSION}")
    if dimension is not None and arr.size != dimension:
        raise ArgumentError(f"{name}: dimension mismatch ({arr.size} != {dimension})")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name}: non-finite coordinates {arr.tolist()}")
    return _frozen(arr)


as_point = as_vector


def as_points(values, dimension: int, name: str = "points") -> np.ndarray:
    """Batch form: (m, n) array; a single point is promoted to shape (1, n)"""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dimension:
        raise ArgumentError(f"{name}: dimension mismatch (shape {arr.shape}, expected (*, {dimension}))")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name}: non-finite coordinates")
    return arr


def euclidean_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between two nonzero vectors, accurate near 0 and pi"""
    ua = np.asarray(a, dtype=float) / np.linalg.norm(a)
    ub = np.asarray(b, dtype=float) / np.linalg.norm(b)
    return float(2.0 * np.arctan2(np.linalg.norm(ua - ub), np.linalg.norm(ua + ub)))


@dataclass(frozen=True, eq=False)
class Direction:
    """Minkowski-unit vector; doubles as a weak ideal point"""

    vector: np.ndarray
    euclidean_length: float

    @classmethod
    def unit(cls, nm, values) -> "Direction":
        """Accept a vector that is already unit up to RENORMALIZE_TOL"""
        v = as_vector(values, nm.dimension, "direction")
        length = float(nm.evaluate(v))
        if abs(length - 1.0) > RENORMALIZE_TOL:
            raise ArgumentError(f"direction: norm {length:.12g} is not 1 within {RENORMALIZE_TOL}")
        if abs(length - 1.0) > UNIT_TOL:
            v = v / length
        return cls(_frozen(v), float(np.linalg.norm(v)))

    @classmethod
    def along(cls, nm, values) -> "Direction":
        """Normalize any nonzero vector onto the unit sphere"""
        v = as_vector(values, nm.dimension, "direction")
        length = float(nm.evaluate(v))
        if length == 0.0:
            raise ArgumentError("direction: zero vector has no direction")
        v = v / length
        return cls(_frozen(v), float(np.linalg.norm(v)))

    @property
    def dimension(self) -> int:
        return self.vector.size

    def angle_to(self, other: "Direction") -> float:
        return euclidean_angle(self.vector, other.vector)

    def __repr__(self) -> str:
        return f"Direction({np.array2string(self.vector, precision=12)})"


@dataclass(frozen=True, eq=False)
class EuclideanUnitNormal:
    vector: np.ndarray

    @classmethod
    def of(cls, values, dimension: Optional[int] = None) -> "EuclideanUnitNormal":
        v = as_vector(values, dimension, "normal")
        length = float(np.linalg.norm(v))
        if length == 0.0:
            raise ArgumentError("normal: zero vector")
        return cls(_frozen(v / length))

    @classmethod
    def at_angle(cls, angle: float) -> "EuclideanUnitNormal":
        return cls(_frozen([np.cos(angle), np.sin(angle)]))

    @property
    def dimension(self) -> int:
        return self.vector.size

    def angle_to(self, other: "EuclideanUnitNormal") -> float:
        return euclidean_angle(self.vector, other.vector)

    def __repr__(self) -> str:
        return f"EuclideanUnitNormal({np.array2string(self.vector, precision=12)})"


@dataclass(frozen=True, eq=False)
class Ray:
    """c(t) = origin + t * direction, arc length in the Minkowski norm"""

    origin: np.ndarray
    direction: Direction

    @classmethod
    def of(cls, nm, origin, direction) -> "Ray":
        if not isinstance(direction, Direction):
            direction = Direction.along(nm, direction)
        return cls(as_point(origin, nm.dimension, "ray origin"), direction)

    def at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self.origin + float(t) * self.direction.vector
        return self.origin + t[:, None] * self.direction.vector


@dataclass(frozen=True, eq=False)
class DistanceFunction:
    """d_y(x) = |x - y| - |x0 - y| with y the center and x0 the base"""

    center: np.ndarray
    base: np.ndarray

    @classmethod
    def of(cls, center, base, dimension: Optional[int] = None) -> "DistanceFunction":
        center = as_point(center, dimension, "center")
        return cls(center, as_point(base, center.size, "base"))


@dataclass(frozen=True, eq=False)
class BoundingBox:
    low: np.ndarray
    high: np.ndarray

    @classmethod
    def cube(cls, low: float, high: float, dimension: int) -> "BoundingBox":
        if not high > low:
            raise ArgumentError(f"box: high {high} must exceed low {low}")
        return cls(_frozen(np.full(dimension, low)), _frozen(np.full(dimension, high)))

    @property
    def dimension(self) -> int:
        return self.low.size

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all((points >= self.low) & (points <= self.high), axis=1)


@dataclass(frozen=True, eq=False)
class PointGrid:
    """Regular probe grid over a box, endpoints included"""

    box: BoundingBox
    step: float

    @classmethod
    def cube(cls, low: float = -5.0, high: float = 5.0, step: float = 0.5, dimension: int = 2) -> "PointGrid":
        if step <= 0:
            raise ArgumentError(f"grid: step must be positive, got {step}")
        return cls(BoundingBox.cube(low, high, dimension), float(step))

    @property
    def dimension(self) -> int:
        return self.box.dimension

    def axes(self) -> Tuple[np.ndarray, ...]:
        axes = []
        for lo, hi in zip(self.box.low, self.box.high):
            count = int(np.floor((hi - lo) / self.step + 1e-9)) + 1
            axes.append(lo + self.step * np.arange(count))
        return tuple(axes)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def __len__(self) -> int:
        return int(np.prod([a.size for a in self.axes()]))


def stack_points(points: Iterable) -> np.ndarray:
    return np.vstack([np.asarray(p, dtype=float) for p in points])
