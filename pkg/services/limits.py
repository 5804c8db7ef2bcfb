import logging
import numpy as np
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from errors import ArgumentError, ComputationError, LimitError
from services import metrics

logger = logging.getLogger("mh.limits")

EPS = np.finfo(float).eps
METHODS = ("aitken", "richardson")


@dataclass(frozen=True)
class LimitSchedule:
    """Geometric schedule t = 2^j (j = 0..max_steps) with extrapolation of the tail"""

    max_steps: int = 40
    tolerance: float = 1e-8
    method: str = "aitken"
    richardson_order: int = 4
    roundoff_factor: float = 8.0
    max_roundoff: float = 1e-5
    start_factor: float = 4.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ArgumentError(f"schedule: unknown method {self.method!r}, expected one of {METHODS}")
        if self.tolerance <= 0 or self.max_steps < 4:
            raise ArgumentError("schedule: tolerance must be positive and max_steps at least 4")
        if self.richardson_order < 2:
            raise ArgumentError("schedule: richardson_order must be at least 2")

    @property
    def window(self) -> int:
        return 3 if self.method == "aitken" else self.richardson_order


def aitken(s0, s1, s2, floor=0.0):
    """Aitken delta-squared on three consecutive iterates; falls back to s2 when the second difference is noise"""
    s0, s1, s2 = (np.asarray(s, dtype=float) for s in (s0, s1, s2))
    d1 = s2 - s1
    d2 = d1 - (s1 - s0)
    safe = np.abs(d2) > np.maximum(floor, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        accelerated = s2 - d1 * d1 / np.where(safe, d2, 1.0)
    return np.where(safe, accelerated, s2)


def richardson(values, ratio: float = 2.0):
    """Neville tableau for an error expansion in powers of h, h shrinking by `ratio` per level.

    `values` has the coarsest level first; extra axes are carried along.
    """
    table = [np.asarray(v, dtype=float) for v in values]
    if len(table) < 2:
        raise ArgumentError("richardson: need at least two levels")
    for k in range(1, len(table)):
        factor = ratio ** k - 1.0
        table = [table[i] + (table[i] - table[i - 1]) / factor for i in range(1, len(table))]
    return table[-1]


@dataclass
class LimitResult:
    values: np.ndarray
    steps: np.ndarray
    last_iterates: np.ndarray = field(default=None)


def extrapolate_limit(raw: Callable[[int], np.ndarray], scale: Callable[[int], float], reference_radius: float,
                      schedule: LimitSchedule, points: Optional[np.ndarray] = None, monotone: bool = False,
                      provenance: str = "limit") -> LimitResult:
    """Drive raw(j) along the schedule until every entry of the batch converges.

    raw(j) returns the raw iterates (one per batch entry) at schedule step j and
    scale(j) the magnitude of the quantities being subtracted, which sets the
    roundoff floor. Steps whose scale is below start_factor * reference_radius
    are skipped. Convergence needs two consecutive extrapolated differences
    within tolerance + floor.
    """
    history: List[np.ndarray] = []
    extrapolated: List[np.ndarray] = []
    floors: List[float] = []
    result = None
    steps = None
    done = None
    start = None
    for j in range(schedule.max_steps + 1):
        magnitude = float(scale(j))
        if not np.isfinite(magnitude):
            break
        if start is None:
            if magnitude < schedule.start_factor * reference_radius and j < schedule.max_steps - 6:
                continue
            start = j
            logger.debug(f"{provenance}: schedule starts at step {j} (scale {magnitude:.3g})")
        floor = schedule.roundoff_factor * EPS * max(magnitude, 1.0)
        values = np.asarray(raw(j), dtype=float)
        metrics.SCHEDULE_STEPS.inc()
        if result is None:
            result = np.full(values.shape, np.nan)
            steps = np.full(values.shape, -1, dtype=int)
            done = np.zeros(values.shape, dtype=bool)
        if monotone and history:
            rising = values > history[-1] + floor
            if np.any(rising):
                idx = int(np.flatnonzero(rising)[0])
                raise ComputationError(
                    f"{provenance}: raw sequence increased at step {j} for entry {idx}",
                    best_iterate=(float(history[-1][idx]), float(values[idx])),
                )
        history.append(values)
        floors.append(floor)
        if len(history) >= schedule.window:
            if schedule.method == "aitken":
                estimate = aitken(history[-3], history[-2], history[-1], floor)
            else:
                estimate = richardson(history[-schedule.window:])
            extrapolated.append(estimate)
        if len(extrapolated) >= 3:
            slack_now = schedule.tolerance + floor
            slack_before = schedule.tolerance + floors[-2]
            converged = (np.abs(extrapolated[-1] - extrapolated[-2]) <= slack_now) & \
                        (np.abs(extrapolated[-2] - extrapolated[-3]) <= slack_before)
            fresh = converged & ~done
            result[fresh] = extrapolated[-1][fresh]
            steps[fresh] = j
            done |= converged
            if np.all(done):
                metrics.LIMIT_EVALUATIONS.labels(provenance=provenance).inc(values.size)
                metrics.LIMIT_STEPS.observe(j - start + 1)
                return LimitResult(result, steps, np.stack(extrapolated[-2:]))
        if floor > schedule.max_roundoff:
            logger.warning(f"{provenance}: roundoff floor {floor:.3g} exceeds {schedule.max_roundoff:.3g} at step {j}")
            break
    _raise_unconverged(done, extrapolated, history, points, provenance, schedule)


def _raise_unconverged(done, extrapolated, history, points, provenance, schedule):
    if done is None:
        raise LimitError(f"{provenance}: schedule produced no admissible steps")
    idx = int(np.flatnonzero(~done)[0])
    source = extrapolated if len(extrapolated) >= 2 else history
    last = [float(source[-2][idx]), float(source[-1][idx])] if len(source) >= 2 else [float(source[-1][idx])]
    point = None if points is None else np.asarray(points)[idx]
    where = "" if point is None else f" at probe point {np.array2string(point, precision=6)}"
    metrics.DOMAIN_ERRORS.labels(error="LimitError").inc()
    raise LimitError(
        f"{provenance}: no convergence within {schedule.max_steps} steps{where} "
        f"(last iterates {last}, tolerance {schedule.tolerance:g})",
        last_iterates=last,
        point=point,
    )
