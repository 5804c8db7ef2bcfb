import numpy as np
import sympy
from dataclasses import dataclass, field
from scipy.linalg import null_space
from scipy.special import logsumexp
from typing import Callable, Optional, Sequence, Tuple

from errors import ArgumentError
from models.vectors import as_point, as_vector, euclidean_angle

K = sympy.Symbol("k", positive=True)
GRAM_TOL = 1e-10
FLAG_ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class Term:
    """c * k^a (kind "power", a = 0 is a constant) or c * exp(b k) (kind "exp")"""

    kind: str
    coefficient: float
    exponent: float

    def evaluate(self, k: np.ndarray) -> np.ndarray:
        if self.kind == "power":
            return self.coefficient * k ** self.exponent
        with np.errstate(over="ignore"):
            return self.coefficient * np.exp(self.exponent * k)

    def log_abs(self, k: np.ndarray) -> np.ndarray:
        base = np.log(abs(self.coefficient))
        if self.kind == "power":
            return base + self.exponent * np.log(k)
        return base + self.exponent * k

    def diverges(self) -> bool:
        return self.coefficient != 0 and self.exponent > 0

    def order(self) -> Tuple[int, float]:
        # exponentials dominate every power
        return (1 if self.kind == "exp" and self.exponent > 0 else 0, self.exponent)


def _classify(term) -> Term:
    coefficient, rest = term.as_coeff_Mul()
    coefficient = float(coefficient)
    if rest == 1:
        return Term("power", coefficient, 0.0)
    if rest == K:
        return Term("power", coefficient, 1.0)
    if rest.is_Pow and rest.base == K and not rest.exp.free_symbols:
        return Term("power", coefficient, float(rest.exp))
    if rest.func == sympy.exp:
        rate = sympy.simplify(rest.args[0] / K)
        if not rate.free_symbols:
            return Term("exp", coefficient, float(rate))
    raise ArgumentError(f"descriptor term {term} is outside the grammar c | c*k^a | c*exp(b*k) | d/k")


@dataclass(frozen=True)
class CoordinateFunction:
    """Scalar function of the index k: a signed sum of grammar terms"""

    text: str
    terms: Tuple[Term, ...]

    @classmethod
    def parse(cls, descriptor) -> "CoordinateFunction":
        if isinstance(descriptor, (int, float)):
            return cls(str(descriptor), (Term("power", float(descriptor), 0.0),))
        try:
            expr = sympy.expand(sympy.sympify(str(descriptor), locals={"k": K}))
        except (sympy.SympifyError, SyntaxError, TypeError) as e:
            raise ArgumentError(f"cannot parse descriptor {descriptor!r}: {e}")
        if expr.free_symbols - {K}:
            raise ArgumentError(f"descriptor {descriptor!r} may only depend on k")
        terms = tuple(_classify(t) for t in sympy.Add.make_args(expr) if t != 0)
        return cls(str(descriptor), terms or (Term("power", 0.0, 0.0),))

    @classmethod
    def constant(cls, value: float) -> "CoordinateFunction":
        return cls(repr(float(value)), (Term("power", float(value), 0.0),))

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return sum((t.evaluate(k) for t in self.terms), np.zeros_like(k))

    def log_abs(self, k) -> Tuple[np.ndarray, np.ndarray]:
        """log |f(k)| and sign, overflow-free"""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        live = [t for t in self.terms if t.coefficient != 0]
        if not live:
            return np.full(k.shape, -np.inf), np.zeros(k.shape)
        logs = np.stack([t.log_abs(k) for t in live])
        signs = np.array([np.sign(t.coefficient) for t in live])[:, None] * np.ones_like(logs)
        return logsumexp(logs, axis=0, b=signs, return_sign=True)

    def dominant(self) -> Term:
        live = [t for t in self.terms if t.coefficient != 0] or list(self.terms)
        return max(live, key=lambda t: t.order())

    def limit(self) -> float:
        """Analytic limit as k -> infinity (+-inf when the dominant term diverges)"""
        lead = self.dominant()
        if lead.diverges():
            return float(np.sign(lead.coefficient) * np.inf)
        return float(sum(t.coefficient for t in self.terms if t.kind == "power" and t.exponent == 0) +
                     sum(t.coefficient for t in self.terms if t.kind == "exp" and t.exponent == 0))

    def exponential_rate(self) -> float:
        rates = [t.exponent for t in self.terms if t.kind == "exp" and t.diverges()]
        return max(rates) if rates else 0.0


@dataclass(frozen=True, eq=False)
class Flag:
    """Base point plus nested half-plane directions u_1..u_p, stored Euclidean-normalized"""

    base: np.ndarray
    directions: Tuple[np.ndarray, ...]

    @classmethod
    def of(cls, base, directions) -> "Flag":
        base = as_point(base, name="flag base")
        n = base.size
        dirs = [as_vector(d, n, "flag direction") for d in directions]
        if not 1 <= len(dirs) <= n:
            raise ArgumentError(f"flag: level {len(dirs)} outside [1, {n}]")
        unit = np.stack([d / np.linalg.norm(d) for d in dirs])
        if np.linalg.det(unit @ unit.T) <= GRAM_TOL:
            raise ArgumentError("flag: directions are not linearly independent")
        frozen = []
        for d in unit:
            d = d.copy()
            d.setflags(write=False)
            frozen.append(d)
        return cls(base, tuple(frozen))

    @property
    def level(self) -> int:
        return len(self.directions)

    @property
    def dimension(self) -> int:
        return self.base.size

    def orthonormal(self) -> np.ndarray:
        """Gram-Schmidt frame; row i is the inward unit normal of alpha_{i-1} inside alpha_i"""
        rows = []
        for d in self.directions:
            w = d - sum((d @ r) * r for r in rows) if rows else d.copy()
            rows.append(w / np.linalg.norm(w))
        return np.stack(rows)

    def complement(self) -> np.ndarray:
        """Euclidean orthogonal complement of the span, as rows"""
        return null_space(np.stack(self.directions)).T

    def equals(self, other: "Flag", angle_tol: float = FLAG_ANGLE_TOL, base_tol: float = 1e-9) -> bool:
        if self.level != other.level or self.dimension != other.dimension:
            return False
        if np.linalg.norm(self.base - other.base) > base_tol:
            return False
        mine, theirs = self.orthonormal(), other.orthonormal()
        return all(euclidean_angle(a, b) <= angle_tol for a, b in zip(mine, theirs))

    def describe(self) -> dict:
        return {"base": self.base.tolist(), "directions": [d.tolist() for d in self.directions]}


@dataclass(frozen=True, eq=False)
class AsymptoticPlane:
    through: np.ndarray
    directions: Tuple[np.ndarray, ...]

    def contains(self, point, tol: float = 1e-6) -> bool:
        span = np.stack(self.directions).T
        diff = np.asarray(point, dtype=float) - self.through
        coeffs, *_ = np.linalg.lstsq(span, diff, rcond=None)
        return float(np.linalg.norm(diff - span @ coeffs)) <= tol

    def equals(self, other: "AsymptoticPlane", tol: float = 1e-6, angle_tol: float = FLAG_ANGLE_TOL) -> bool:
        if len(self.directions) != len(other.directions):
            return False
        mine, theirs = np.stack(self.directions), np.stack(other.directions)
        # same span: the principal angles all vanish
        q1, _ = np.linalg.qr(mine.T)
        q2, _ = np.linalg.qr(theirs.T)
        s = np.linalg.svd(q1.T @ q2, compute_uv=False)
        if np.any(np.arccos(np.clip(s, -1.0, 1.0)) > max(angle_tol, 1e-7)):
            return False
        return self.contains(other.through, tol)


class PointSequence:
    """Generator form: points x_k for arbitrarily large (real) k and the schedule index of step j"""

    dimension: int
    base: np.ndarray
    label: str

    def point(self, k) -> np.ndarray:
        raise NotImplementedError

    def index(self, j: int) -> float:
        return float(2.0 ** j)


class GeneratorSequence(PointSequence):
    def __init__(self, func: Callable[[float], Sequence[float]], dimension: int, label: str = "generator",
                 base=None):
        self.func = func
        self.dimension = int(dimension)
        self.label = label
        self.base = np.zeros(self.dimension) if base is None else as_point(base, self.dimension, "base")

    def point(self, k) -> np.ndarray:
        return np.asarray(self.func(float(k)), dtype=float)


class FlagDirectedSequence(PointSequence):
    """x_k = x0 + frame @ (f_1(k), .., f_p(k), g_1(k), ..) in an affine frame adapted to the flag.

    Built either canonically (growth, offsets, flag) or from ambient
    coordinates, in which case the flag is implied and estimated on demand.
    """

    def __init__(self, coordinates: Sequence[CoordinateFunction], frame: np.ndarray, base, level: Optional[int] = None,
                 flag: Optional[Flag] = None, label: str = "sequence"):
        self.coordinates = tuple(coordinates)
        self.dimension = len(self.coordinates)
        self.frame = np.array(frame, dtype=float)
        if self.frame.shape != (self.dimension, self.dimension) or abs(np.linalg.det(self.frame)) < 1e-12:
            raise ArgumentError(f"sequence {label}: frame must be an invertible {self.dimension}x{self.dimension} matrix")
        self.frame.setflags(write=False)
        self.base = as_point(base, self.dimension, "sequence base")
        if level is not None and not 1 <= level <= self.dimension:
            raise ArgumentError(f"sequence {label}: level {level} outside [1, {self.dimension}]")
        self.level = level
        self.flag = flag
        self.label = label
        rate = max(c.exponential_rate() for c in self.coordinates)
        self._step = np.log(2.0) / rate if rate > 0 else None

    @classmethod
    def canonical(cls, growth: Sequence, offsets: Sequence = (), directions=None, base=None,
                  label: str = "sequence") -> "FlagDirectedSequence":
        growth = [g if isinstance(g, CoordinateFunction) else CoordinateFunction.parse(g) for g in growth]
        offsets = [g if isinstance(g, CoordinateFunction) else CoordinateFunction.parse(g) for g in offsets]
        n = len(growth) + len(offsets)
        base = np.zeros(n) if base is None else base
        p = len(growth)
        if directions is None:
            directions = np.eye(n)[:p]
        flag = Flag.of(base, directions)
        frame = np.vstack([np.stack(flag.directions), flag.complement()]).T if p < n else np.stack(flag.directions).T
        return cls(growth + offsets, frame, base, level=p, flag=flag, label=label)

    @classmethod
    def from_coordinates(cls, coordinates: Sequence, base=None, level: Optional[int] = None,
                         label: str = "sequence") -> "FlagDirectedSequence":
        coords = [c if isinstance(c, CoordinateFunction) else CoordinateFunction.parse(c) for c in coordinates]
        n = len(coords)
        return cls(coords, np.eye(n), np.zeros(n) if base is None else base, level=level, label=label)

    @property
    def growth(self) -> Tuple[CoordinateFunction, ...]:
        return self.coordinates[: self.level] if self.flag is not None else ()

    @property
    def offsets(self) -> Tuple[CoordinateFunction, ...]:
        return self.coordinates[self.level:] if self.flag is not None else ()

    def local(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        return np.stack([c(k) for c in self.coordinates], axis=1)

    def point(self, k) -> np.ndarray:
        return self.base + self.frame @ self.local(k)[0]

    def points(self, ks) -> np.ndarray:
        return self.base + self.local(ks) @ self.frame.T

    def index(self, j: int) -> float:
        if self._step is not None:
            return float((j + 1) * self._step)
        return float(2.0 ** j)

    def shifted(self, shift: Sequence, label: Optional[str] = None) -> "FlagDirectedSequence":
        """Add an ambient shift (n descriptors) to every point; frame coordinates are recomputed"""
        shift = [s if isinstance(s, CoordinateFunction) else CoordinateFunction.parse(s) for s in shift]
        if len(shift) != self.dimension:
            raise ArgumentError(f"shift has {len(shift)} coordinates, expected {self.dimension}")
        inverse = np.linalg.inv(self.frame)
        terms = []
        for i, coordinate in enumerate(self.coordinates):
            extra = []
            for j, s in enumerate(shift):
                weight = float(inverse[i, j])
                if weight != 0.0:
                    extra.extend(Term(t.kind, weight * t.coefficient, t.exponent) for t in s.terms)
            text = coordinate.text if not extra else f"{coordinate.text} + shift"
            terms.append(CoordinateFunction(text, coordinate.terms + tuple(extra)))
        return FlagDirectedSequence(terms, self.frame, self.base, self.level, self.flag,
                                    label or f"{self.label}+shift")

    def describe(self) -> dict:
        return {
            "label": self.label,
            "coordinates": [c.text for c in self.coordinates],
            "frame": self.frame.tolist(),
            "base": self.base.tolist(),
            "level": self.level,
            "flag": self.flag.describe() if self.flag is not None else None,
        }
