import abc
import numpy as np
import sympy
from typing import Dict, List, Optional, Sequence, Tuple

from errors import ArgumentError
from models.vectors import MAX_DIMENSION, MIN_DIMENSION

FAMILIES = ("euclidean", "p-norm", "sqrt-quadratic-plus-abs", "intersection-of-ellipsoids", "custom-formula")


class SingularNorm(metaclass=abc.ABCMeta):
    """A symmetric gauge on R^n given by an evaluable formula.

    `evaluate` is vectorized over the last axis: an (m, n) array gives m norms.
    Instances are immutable once built.
    """

    family: str = ""

    def __init__(self, dimension: int, singular_directions: Sequence = (), label: Optional[str] = None):
        if not MIN_DIMENSION <= int(dimension) <= MAX_DIMENSION:
            raise ArgumentError(f"norm: dimension {dimension} outside [{MIN_DIMENSION}, {MAX_DIMENSION}]")
        self.dimension = int(dimension)
        self.label = label or self.family
        self._singular = tuple(self._unit(d) for d in singular_directions)

    def _unit(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape != (self.dimension,):
            raise ArgumentError(f"norm: singular direction {values} has wrong dimension")
        v = v / float(self._evaluate(v))
        v.setflags(write=False)
        return v

    @property
    def declared_singular_directions(self) -> Tuple[np.ndarray, ...]:
        return self._singular

    @abc.abstractmethod
    def _evaluate(self, v: np.ndarray) -> np.ndarray:
        pass

    @abc.abstractmethod
    def parameters(self) -> Dict:
        pass

    def evaluate(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dimension:
            raise ArgumentError(f"norm: dimension mismatch ({v.shape[-1]} != {self.dimension})")
        return self._evaluate(v)

    __call__ = evaluate

    def describe(self) -> Dict:
        return {
            "family": self.family,
            "label": self.label,
            "dimension": self.dimension,
            "parameters": self.parameters(),
            "singular_directions": [d.tolist() for d in self._singular],
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(label={self.label!r}, dimension={self.dimension})"


class EuclideanNorm(SingularNorm):
    family = "euclidean"

    def _evaluate(self, v):
        return np.linalg.norm(v, axis=-1)

    def parameters(self):
        return {}


class PNorm(SingularNorm):
    family = "p-norm"

    def __init__(self, dimension: int, p: float, **kwargs):
        # p = 1 and p = inf give polytopes, which are not strictly convex
        if not (1.0 < float(p) < np.inf):
            raise ArgumentError(f"p-norm: p must lie in (1, inf), got {p}")
        self.p = float(p)
        super().__init__(dimension, **kwargs)

    def _evaluate(self, v):
        a = np.abs(v)
        scale = np.max(a, axis=-1)
        safe = np.where(scale > 0, scale, 1.0)
        ratio = a / safe[..., None]
        return np.where(scale > 0, scale * np.sum(ratio ** self.p, axis=-1) ** (1.0 / self.p), 0.0)

    def parameters(self):
        return {"p": self.p}


def _spd(form, dimension: int, name: str) -> np.ndarray:
    q = np.asarray(form, dtype=float)
    if q.shape != (dimension, dimension):
        raise ArgumentError(f"{name}: quadratic form must be {dimension}x{dimension}, got shape {q.shape}")
    if not np.allclose(q, q.T, atol=1e-14):
        raise ArgumentError(f"{name}: quadratic form is not symmetric")
    if np.min(np.linalg.eigvalsh(q)) <= 0:
        raise ArgumentError(f"{name}: quadratic form is not positive definite")
    q = q.copy()
    q.setflags(write=False)
    return q


class SqrtQuadraticPlusAbsNorm(SingularNorm):
    """||v|| = sqrt(v^T Q v) + w |v_i|; the abs term creates corners along the hyperplane v_i = 0"""

    family = "sqrt-quadratic-plus-abs"

    def __init__(self, dimension: int, quadratic_form, abs_index: int, abs_weight: float = 1.0, **kwargs):
        self.quadratic_form = _spd(quadratic_form, dimension, self.family)
        if not 0 <= int(abs_index) < dimension:
            raise ArgumentError(f"{self.family}: abs_index {abs_index} out of range")
        if abs_weight < 0:
            raise ArgumentError(f"{self.family}: abs_weight must be nonnegative")
        self.abs_index = int(abs_index)
        self.abs_weight = float(abs_weight)
        super().__init__(dimension, **kwargs)

    def _evaluate(self, v):
        quad = np.einsum("...i,ij,...j->...", v, self.quadratic_form, v)
        return np.sqrt(np.maximum(quad, 0.0)) + self.abs_weight * np.abs(v[..., self.abs_index])

    def parameters(self):
        return {
            "quadratic_form": self.quadratic_form.tolist(),
            "abs_index": self.abs_index,
            "abs_weight": self.abs_weight,
        }


class EllipsoidIntersectionNorm(SingularNorm):
    """Gauge of K = intersection of {x : (x - c)^T Q (x - c) <= 1}; K must be centrally symmetric"""

    family = "intersection-of-ellipsoids"

    def __init__(self, dimension: int, ellipsoids: Sequence[Tuple], **kwargs):
        if not ellipsoids:
            raise ArgumentError(f"{self.family}: at least one ellipsoid required")
        parsed = []
        for form, center in ellipsoids:
            q = _spd(form, dimension, self.family)
            c = np.asarray(center, dtype=float)
            if c.shape != (dimension,):
                raise ArgumentError(f"{self.family}: center {center} has wrong dimension")
            if float(c @ q @ c) >= 1.0:
                raise ArgumentError(f"{self.family}: origin must be interior to every ellipsoid")
            parsed.append((q, c))
        for q, c in parsed:
            if not any(np.allclose(q, q2) and np.allclose(-c, c2) for q2, c2 in parsed):
                raise ArgumentError(f"{self.family}: ellipsoid family is not centrally symmetric")
        self.ellipsoids = tuple(parsed)
        super().__init__(dimension, **kwargs)

    def _evaluate(self, v):
        gauges = []
        for q, c in self.ellipsoids:
            a = np.einsum("...i,ij,...j->...", v, q, v)
            b = v @ (q @ c)
            slack = 1.0 - float(c @ q @ c)
            root = np.sqrt(b * b + a * slack)
            # two algebraically equal forms; pick the one without cancellation
            with np.errstate(divide="ignore", invalid="ignore"):
                positive = a / (b + root)
            negative = (root - b) / slack
            gauge = np.where(b >= 0, positive, negative)
            gauges.append(np.where(a > 0, gauge, 0.0))
        return np.max(np.stack(gauges), axis=0)

    def parameters(self):
        return {"ellipsoids": [{"form": q.tolist(), "center": c.tolist()} for q, c in self.ellipsoids]}


class FormulaNorm(SingularNorm):
    """Custom gauge from a sympy expression in y1..yn"""

    family = "custom-formula"

    def __init__(self, dimension: int, formula: str, **kwargs):
        self.symbols = sympy.symbols(" ".join(f"y{i + 1}" for i in range(int(dimension))))
        if int(dimension) == 1:
            self.symbols = (self.symbols,)
        try:
            expr = sympy.sympify(formula, locals={s.name: s for s in self.symbols})
        except (sympy.SympifyError, SyntaxError, TypeError) as e:
            raise ArgumentError(f"{self.family}: cannot parse formula {formula!r}: {e}")
        unknown = expr.free_symbols - set(self.symbols)
        if unknown:
            raise ArgumentError(f"{self.family}: unknown symbols {sorted(s.name for s in unknown)}")
        self.formula = str(formula)
        self.expression = expr
        self._func = sympy.lambdify(self.symbols, expr, modules="numpy")
        super().__init__(dimension, **kwargs)

    def _evaluate(self, v):
        out = self._func(*[v[..., i] for i in range(self.dimension)])
        return np.broadcast_to(np.asarray(out, dtype=float), v.shape[:-1]).copy()

    def parameters(self):
        return {"formula": self.formula}


def two_disk_norm() -> SqrtQuadraticPlusAbsNorm:
    """||(y1, y2)|| = sqrt(y1^2 + 2 y2^2) + |y2|; unit ball is the intersection of two disks of radius sqrt(2)"""
    return SqrtQuadraticPlusAbsNorm(
        2, [[1.0, 0.0], [0.0, 2.0]], abs_index=1,
        singular_directions=[(1.0, 0.0), (-1.0, 0.0)], label="two-disk",
    )


def two_disk_norm_as_ellipsoids() -> EllipsoidIntersectionNorm:
    """The same unit ball written as the intersection of the disks centered (0, +-1)"""
    half = [[0.5, 0.0], [0.0, 0.5]]
    return EllipsoidIntersectionNorm(
        2, [(half, (0.0, 1.0)), (half, (0.0, -1.0))],
        singular_directions=[(1.0, 0.0), (-1.0, 0.0)], label="two-disk-ellipsoids",
    )


def two_disk_norm_3d() -> SqrtQuadraticPlusAbsNorm:
    """Three-dimensional analogue with a singular circle in the plane y2 = 0"""
    return SqrtQuadraticPlusAbsNorm(3, np.diag([1.0, 2.0, 1.0]), abs_index=1, label="two-disk-3d")


def built_in_norms(dimension: int = 2) -> List[SingularNorm]:
    if dimension == 2:
        return [EuclideanNorm(2), PNorm(2, 4.0), two_disk_norm(), two_disk_norm_as_ellipsoids()]
    return [EuclideanNorm(dimension), PNorm(dimension, 4.0), two_disk_norm_3d() if dimension == 3 else
            SqrtQuadraticPlusAbsNorm(dimension, np.eye(dimension), abs_index=1, label=f"sqrt-abs-{dimension}d")]
