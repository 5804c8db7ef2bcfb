import logging
import numpy as np
from collections import defaultdict
from dataclasses import dataclass, field
from scipy.linalg import null_space
from typing import Dict, List, Optional, Sequence, Tuple

from errors import ArgumentError, PreconditionError
from models.horofunction import Horofunction
from models.norms import SingularNorm
from models.sequences import (AsymptoticPlane, CoordinateFunction, Flag, FlagDirectedSequence, PointSequence, Term)
from models.vectors import as_point, as_points, euclidean_angle
from schemas.reports import FlagValidationReport, LevelCheck
from services.horofunctions import equivalent_up_to_constant, horofunction_limit
from services.limits import LimitSchedule, richardson

logger = logging.getLogger("mh.flags")

GROWTH_SAMPLES = (1e2, 1e3, 1e4)
OFFSET_TAIL = (1e6, 1e7)
RATIO_BOUND = 1e-2
DIRECTION_BOUND = 1e-2
PLANE_TOL = 1e-6
SPAN_TOL = 1e-10
MIN_PREFIX = 32
PREFIX_LENGTH = 1024
ESCAPE_RATIO = 2.0 ** 0.25
MAX_RICHARDSON_LEVELS = 5
FIRST_RICHARDSON_INDEX = 16

FLAG_DIRECTED = "flag-directed"
CONVERGING = "converging"
NOT_FLAG_DIRECTED = "not-flag-directed"


@dataclass
class AsymptoticStructure:
    """Directing flag, level and asymptotic plane of a sequence; `coordinates` are in the basis rows"""

    level: int
    flag: Optional[Flag]
    plane: Optional[AsymptoticPlane]
    basis: np.ndarray
    coordinates: Tuple[CoordinateFunction, ...] = ()
    limit: Optional[np.ndarray] = None

    @property
    def directions(self) -> np.ndarray:
        return self.basis[: self.level]

    @property
    def verdict(self) -> str:
        return CONVERGING if self.level == 0 else FLAG_DIRECTED


@dataclass
class FlagEstimate:
    flag: Optional[Flag]
    level: int
    plane: Optional[AsymptoticPlane]
    verdict: str
    limit: Optional[np.ndarray] = None
    findings: List[str] = field(default_factory=list)


def _order(key: Tuple[str, float]) -> Tuple[int, float]:
    kind, exponent = key
    if kind == "exp":
        return (1, exponent) if exponent > 0 else (-1, exponent)
    return (0, exponent)


def _diverges(key: Tuple[str, float]) -> bool:
    return key[1] > 0


def ambient_groups(seq: FlagDirectedSequence) -> Dict[Tuple[str, float], np.ndarray]:
    """Displacement x_k - x0 as a sum of vector-valued terms, keyed by (kind, exponent)"""
    groups: Dict[Tuple[str, float], np.ndarray] = defaultdict(lambda: np.zeros(seq.dimension))
    for i, coordinate in enumerate(seq.coordinates):
        for term in coordinate.terms:
            key = ("power", 0.0) if term.exponent == 0 else (term.kind, float(term.exponent))
            groups[key] = groups[key] + seq.frame[:, i] * term.coefficient
    return {k: v for k, v in groups.items() if np.any(v != 0.0)}


def _in_basis(groups: Dict, row: np.ndarray) -> CoordinateFunction:
    terms = [Term(kind, float(row @ v), exponent) for (kind, exponent), v in groups.items()]
    scale = max([abs(t.coefficient) for t in terms] + [1.0])
    kept = tuple(t for t in terms if abs(t.coefficient) > 1e-14 * scale) or (Term("power", 0.0, 0.0),)
    text = " + ".join(f"{t.coefficient:.6g}*{'k^' if t.kind == 'power' else 'exp'}({t.exponent:g})" for t in kept)
    return CoordinateFunction(text, kept)


def analytic_structure(seq: FlagDirectedSequence) -> AsymptoticStructure:
    """Exact flag of a descriptor sequence: Gram-Schmidt over the divergent term vectors, fastest first"""
    groups = ambient_groups(seq)
    rows: List[np.ndarray] = []
    for key in sorted((k for k in groups if _diverges(k)), key=_order, reverse=True):
        v = groups[key]
        w = v - sum(((v @ r) * r for r in rows), np.zeros_like(v))
        if np.linalg.norm(w) > SPAN_TOL * max(1.0, float(np.linalg.norm(v))):
            rows.append(w / np.linalg.norm(w))
    n = seq.dimension
    constant = groups.get(("power", 0.0), np.zeros(n))
    if not rows:
        return AsymptoticStructure(0, None, None, np.eye(n), limit=seq.base + constant)
    directions = np.stack(rows)
    complement = null_space(directions).T if len(rows) < n else np.empty((0, n))
    basis = np.vstack([directions, complement])
    through = seq.base + constant - directions.T @ (directions @ constant)
    flag = Flag.of(seq.base, rows)
    plane = AsymptoticPlane(through, flag.directions)
    coordinates = tuple(_in_basis(groups, b) for b in basis)
    return AsymptoticStructure(len(rows), flag, plane, basis, coordinates)


def _richardson_indices(count: int) -> List[int]:
    top = 2 ** int(np.floor(np.log2(count)))
    levels = max(2, min(MAX_RICHARDSON_LEVELS, int(np.log2(top / FIRST_RICHARDSON_INDEX)) + 1))
    return [top // 2 ** (levels - 1 - i) for i in range(levels)]


def estimate_directing_flag(nm: SingularNorm, prefix, base) -> FlagEstimate:
    """Best-effort flag of a finite prefix x_1..x_K.

    Unit directions of the transversal components are extrapolated by
    Richardson in 1/k over dyadic indices ending at the largest power of two
    not above K; a level escapes while its component keeps growing.
    """
    pts = as_points(prefix, nm.dimension, "prefix")
    if len(pts) < MIN_PREFIX:
        raise ArgumentError(f"flag estimation: prefix needs at least {MIN_PREFIX} points, got {len(pts)}")
    base = as_point(base, nm.dimension, "base")
    n = nm.dimension
    ks = _richardson_indices(len(pts))
    X = pts[[k - 1 for k in ks]] - base
    dist = nm.evaluate(pts - base)
    tail = nm.evaluate(X)
    unbounded = float(np.max(dist)) > 1e3 * max(float(np.min(dist)), 1e-300) or tail[-1] >= np.sqrt(2.0) * tail[-2]
    if not unbounded:
        limit = base + richardson(X)
        logger.info(f"flag estimation: bounded prefix, limit {np.array2string(limit, precision=8)}")
        return FlagEstimate(None, 0, None, CONVERGING, limit)
    rows: List[np.ndarray] = []
    projector = np.eye(n)
    for _ in range(n):
        Y = X @ projector.T
        sizes = np.linalg.norm(Y, axis=1)
        if not (sizes[-1] >= ESCAPE_RATIO * sizes[-2] and sizes[-1] > 1e-9 * max(1.0, float(tail[-1]))):
            break
        d = projector @ richardson(Y / sizes[:, None])
        d = d - sum(((d @ r) * r for r in rows), np.zeros(n))
        rows.append(d / np.linalg.norm(d))
        U = np.stack(rows)
        projector = np.eye(n) - U.T @ U
    through = base + richardson(X @ projector.T)
    flag = Flag.of(base, rows)
    logger.info(f"flag estimation: level {len(rows)}, directions "
                f"{[np.round(r, 6).tolist() for r in rows]}, through {np.round(through, 6).tolist()}")
    return FlagEstimate(flag, len(rows), AsymptoticPlane(through, flag.directions), FLAG_DIRECTED)


def _sample_indices(seq: PointSequence) -> List[float]:
    if isinstance(seq, FlagDirectedSequence) and seq._step is not None:
        return [seq.index(j) for j in (8, 11, 14)]
    return [256.0, 2048.0, 16384.0]


def _projector(previous: np.ndarray, n: int, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Projection onto a transversal of span(previous) along that span; Euclidean complement by default"""
    p = len(previous)
    if p == 0:
        return np.eye(n)
    if rng is None:
        return np.eye(n) - previous.T @ previous
    W = rng.standard_normal((n, n - p))
    basis = np.hstack([previous.T, W])
    # coefficients in [previous | W]; keep the W part
    return W @ np.linalg.solve(basis, np.eye(n))[p:]


def _sampled_levels(nm: SingularNorm, seq: PointSequence, directions: np.ndarray,
                    coordinates: Sequence[CoordinateFunction], rng) -> List[LevelCheck]:
    ks = _sample_indices(seq)
    X = np.stack([seq.point(k) for k in ks]) - seq.base
    n = seq.dimension
    checks = []
    for i, u in enumerate(directions):
        projector = _projector(directions[:i], n, rng)
        Y = X @ projector.T
        target = projector @ u
        angles = [euclidean_angle(y, target) if np.linalg.norm(y) > 0 else np.pi for y in Y]
        escape = nm.evaluate(Y).tolist()
        along = np.outer(X @ u, u)
        rest = X @ (np.eye(n) - directions[: i + 1].T @ directions[: i + 1]).T
        ratios = (nm.evaluate(rest) / np.maximum(nm.evaluate(along), 1e-300)).tolist()
        analytic = bool(coordinates)
        direction_ok = all(b <= a + 1e-12 for a, b in zip(angles, angles[1:])) and (analytic or angles[-1] < DIRECTION_BOUND)
        escapes = all(b > a for a, b in zip(escape, escape[1:]))
        ratio_ok = all(b <= a + 1e-15 for a, b in zip(ratios, ratios[1:])) and ratios[-1] < RATIO_BOUND
        growth_diverges = growth_dominates = None
        if analytic:
            growth_diverges = _growth_diverges(coordinates[i])
            growth_dominates = i + 1 >= len(directions) or _dominates(coordinates[i], coordinates[i + 1])
            ratio_ok = ratio_ok or growth_dominates
        checks.append(LevelCheck(level=i + 1, direction=u.tolist(), direction_angles=angles, escape_distances=escape,
                                 ratios=ratios, direction_converges=direction_ok, escapes=escapes,
                                 ratio_vanishes=ratio_ok, growth_diverges=growth_diverges,
                                 growth_dominates=growth_dominates))
    return checks


def _growth_diverges(f: CoordinateFunction) -> bool:
    lead = f.dominant()
    if not (lead.diverges() and lead.coefficient > 0):
        return False
    logs, signs = f.log_abs(np.array((1.0,) + GROWTH_SAMPLES))
    if np.any(signs[1:] <= 0):
        return False
    first = logs[0] if signs[0] != 0 else -np.inf
    return bool(logs[1] < logs[2] < logs[3] and logs[3] >= np.log(10.0) + max(0.0, first))


def _dominates(f: CoordinateFunction, g: CoordinateFunction) -> bool:
    return _order_of(g) < _order_of(f)


def _order_of(f: CoordinateFunction) -> Tuple[int, float]:
    lead = f.dominant()
    return _order((lead.kind, lead.exponent)) if lead.exponent != 0 else (0, 0.0)


def _offsets(coordinates: Sequence[CoordinateFunction], level: int) -> Tuple[bool, List[float], List[float]]:
    limits, tails, ok = [], [], True
    for g in coordinates[level:]:
        limit = g.limit()
        ok = ok and bool(np.isfinite(limit))
        a, b = g(np.array(OFFSET_TAIL))
        limits.append(limit)
        tails.append(float(abs(b - a)))
    return ok, limits, tails


def _structure(nm: SingularNorm, seq: PointSequence) -> AsymptoticStructure:
    if isinstance(seq, FlagDirectedSequence):
        return analytic_structure(seq)
    prefix = np.stack([seq.point(float(k)) for k in range(1, PREFIX_LENGTH + 1)])
    estimate = estimate_directing_flag(nm, prefix, seq.base)
    if estimate.level == 0:
        return AsymptoticStructure(0, None, None, np.eye(seq.dimension), limit=estimate.limit)
    directions = np.stack(estimate.flag.orthonormal())
    complement = null_space(directions).T if estimate.level < seq.dimension else np.empty((0, seq.dimension))
    return AsymptoticStructure(estimate.level, estimate.flag, estimate.plane, np.vstack([directions, complement]))


def validate_flag_directed(nm: SingularNorm, seq: PointSequence, transversal_seed: Optional[int] = None
                           ) -> FlagValidationReport:
    """Level-by-level check of the flag-directed conditions; failures are reported, never raised"""
    structure = _structure(nm, seq)
    declared = getattr(seq, "level", None)
    findings: List[str] = []
    if structure.level == 0:
        limit = None if structure.limit is None else structure.limit.tolist()
        findings.append("bounded: the sequence converges" + (f" to {np.round(limit, 9).tolist()}" if limit else ""))
        return FlagValidationReport(declared_level=declared or 0, detected_level=0, levels=[], offsets_converge=True,
                                    asymptotic_through=limit, verdict=CONVERGING, valid=False, findings=findings)
    rng = np.random.default_rng(transversal_seed) if transversal_seed is not None else None
    levels = _sampled_levels(nm, seq, structure.directions, structure.coordinates, rng)
    if structure.coordinates:
        offsets_ok, offset_limits, tails = _offsets(structure.coordinates, structure.level)
    else:
        offsets_ok, offset_limits, tails = True, [], []
    for check in levels:
        if not check.passed:
            findings.append(f"level {check.level} fails: " + ", ".join(
                name for name, ok in (("direction", check.direction_converges), ("escape", check.escapes),
                                      ("ratio", check.ratio_vanishes), ("growth", check.growth_diverges),
                                      ("dominance", check.growth_dominates)) if ok is False))
    if not offsets_ok:
        findings.append("offsets do not converge")
    if declared is not None and declared != structure.level:
        findings.append(f"declared level {declared}, detected {structure.level}")
    declared_flag = getattr(seq, "flag", None)
    if declared_flag is not None and not declared_flag.equals(structure.flag):
        findings.append("declared flag differs from the detected flag")
    valid = not findings
    report = FlagValidationReport(
        declared_level=declared if declared is not None else structure.level,
        detected_level=structure.level,
        detected_directions=[d.tolist() for d in structure.directions],
        levels=levels, offsets_converge=offsets_ok, offset_limits=offset_limits,
        asymptotic_through=structure.plane.through.tolist(),
        verdict=FLAG_DIRECTED if valid else NOT_FLAG_DIRECTED, valid=valid, findings=findings,
    )
    if tails:
        logger.debug(f"sequence {seq.label}: offset tail differences {tails}")
    logger.info(f"Sequence {seq.label}: {report.verdict}, level {structure.level}"
                + (f" ({'; '.join(findings)})" if findings else ""))
    return report


def project_to_horofunction(nm: SingularNorm, seq: PointSequence, probe=None,
                            schedule: Optional[LimitSchedule] = None) -> Horofunction:
    """pr: limit horofunction of a validated flag-directed sequence, tagged with its flag and level"""
    report = validate_flag_directed(nm, seq)
    if report.verdict == CONVERGING:
        raise PreconditionError(f"sequence {seq.label}: not flag-directed: bounded")
    if not report.valid:
        raise PreconditionError(f"sequence {seq.label}: not flag-directed: {'; '.join(report.findings)}")
    metadata = {
        "level": report.detected_level,
        "flag": {"base": seq.base.tolist(), "directions": report.detected_directions},
        "asymptotic_through": report.asymptotic_through,
        "level_minimality": "unverified",
    }
    return horofunction_limit(nm, seq, probe, schedule, label=seq.label, metadata=metadata)


def _same_flag(nm: SingularNorm, s1: PointSequence, s2: PointSequence) -> None:
    a, b = _structure(nm, s1), _structure(nm, s2)
    if a.level == 0 or b.level == 0:
        raise PreconditionError("same-flag check: both sequences must escape")
    if not a.flag.equals(b.flag):
        raise PreconditionError(f"flags differ: {s1.label} has {np.round(a.directions, 9).tolist()}, "
                                f"{s2.label} has {np.round(b.directions, 9).tolist()}")
    if not a.plane.equals(b.plane, tol=PLANE_TOL):
        raise PreconditionError(f"asymptotic planes differ: through {np.round(a.plane.through, 9).tolist()} "
                                f"and {np.round(b.plane.through, 9).tolist()}")


def same_horofunction_same_flag_check(nm: SingularNorm, s1: PointSequence, s2: PointSequence, grid,
                                      tol: float = 1e-4, schedule: Optional[LimitSchedule] = None) -> bool:
    """Sequences with one flag and one asymptotic plane give equivalent horofunctions"""
    _same_flag(nm, s1, s2)
    f1 = project_to_horofunction(nm, s1, schedule=schedule)
    f2 = project_to_horofunction(nm, s2, schedule=schedule)
    return equivalent_up_to_constant(f1, f2, grid, tol)


def _shift_function(shift, dimension: int) -> List[CoordinateFunction]:
    values = list(shift)
    if len(values) != dimension:
        raise ArgumentError(f"shift has {len(values)} coordinates, expected {dimension}")
    return [v if isinstance(v, CoordinateFunction) else CoordinateFunction.parse(v) for v in values]


def _assert_parallel(directions: np.ndarray, shift: List[CoordinateFunction]) -> None:
    probe = FlagDirectedSequence(shift, np.eye(len(shift)), np.zeros(len(shift)))
    for key, v in ambient_groups(probe).items():
        residual = float(np.linalg.norm(v - directions.T @ (directions @ v)))
        if residual > SPAN_TOL * max(1.0, float(np.linalg.norm(v))):
            raise PreconditionError(f"shift term {key} leaves the top plane of the flag (residual {residual:.3g})")


def rigid_shift_check(nm: SingularNorm, s1: FlagDirectedSequence, shifts: Sequence, grid, tol: float = 1e-4,
                      schedule: Optional[LimitSchedule] = None) -> bool:
    """Shifting a sequence inside the top plane of its flag keeps its horofunction"""
    structure = analytic_structure(s1)
    if structure.level == 0:
        raise PreconditionError(f"sequence {s1.label}: not flag-directed: bounded")
    reference = project_to_horofunction(nm, s1, schedule=schedule)
    for n, shift in enumerate(shifts):
        functions = _shift_function(shift, s1.dimension)
        _assert_parallel(structure.directions, functions)
        moved = s1.shifted(functions, label=f"{s1.label}+shift{n}")
        if not equivalent_up_to_constant(reference, project_to_horofunction(nm, moved, schedule=schedule), grid, tol):
            logger.info(f"{moved.label}: horofunction moved")
            return False
    return True
