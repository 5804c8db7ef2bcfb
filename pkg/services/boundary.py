import logging
import numpy as np
from dataclasses import dataclass
from scipy.spatial import cKDTree
from typing import Callable, List, Optional, Sequence, Union

from errors import GeometryError, LimitError, MinkowskiError, NotAHorofunctionError
from models.gauss import REGULAR, SINGULAR
from models.horofunction import CoarsePoint, Horofunction, WeakPoint
from models.norms import SingularNorm
from models.vectors import Direction, Ray, euclidean_angle
from schemas.reports import ContinuityReport, FiberRecord, FiberReport, RegularityReport
from services import metrics
from services.gauss_map import REGULAR_TOL, angular_width, mean_normal, planar_sweep
from services.horofunctions import (BUSEMANN_MATCH_TOL, difference_spread, grid_points, is_busemann_function,
                                    sphere_minimum)
from services.limits import LimitSchedule
from services.optimize import SphereMinimum, circle_points, sphere_directions
from services.parallel import chunked, parallel_map, worker_count

logger = logging.getLogger("mh.boundary")

DEFAULT_RADII = (1.0, 2.0, 5.0, 10.0)
MIN_TOL = 1e-6
DRIFT_TOL = 1e-4
FIBER_ANGLE_TOL = 1e-6
CONTINUITY_TOL = 1e-3
JUMP_FACTOR = 10.0
CORNER_BISECTION = 1e-9
CORNER_DEDUPE = 1e-6
SWEEP_TANGENTS = 16
SWEEP_NEIGHBOURS = 6
MAX_LOCALIZED = 64

Candidate = Union[CoarsePoint, Horofunction]


def _representative(phi: Candidate) -> Horofunction:
    return phi.representative if isinstance(phi, CoarsePoint) else phi


def _label(phi: Candidate) -> str:
    return phi.id if isinstance(phi, CoarsePoint) else phi.label


@dataclass
class Projection:
    weak_point: WeakPoint
    minima: List[SphereMinimum]
    drift: float


def project_with_evidence(nm: SingularNorm, phi: Candidate, radii: Sequence[float] = DEFAULT_RADII,
                          samples: Optional[int] = None, min_tol: float = MIN_TOL, drift_tol: float = DRIFT_TOL,
                          seed: int = 0) -> Projection:
    """Pr with the per-radius sphere minima that certify it"""
    f = _representative(phi)
    radii = sorted(float(t) for t in radii)
    minima = []
    for t in radii:
        found = sphere_minimum(nm, f, t, samples, seed)
        if not found.unique:
            metrics.DOMAIN_ERRORS.labels(error="GeometryError").inc()
            raise GeometryError(f"{f.label}: minimizer on the sphere of radius {t:g} is not unique "
                                f"({found.components} components, diameter {found.diameter:.3g})")
        if abs(found.value + t) > min_tol:
            metrics.DOMAIN_ERRORS.labels(error="NotAHorofunctionError").inc()
            raise NotAHorofunctionError(f"{f.label}: minimum {found.value:.12g} on the sphere of radius {t:g} "
                                        f"is not {-t:g} (tolerance {min_tol:g})")
        logger.debug(f"{f.label}: radius {t:g} minimum {found.value:.15g} at "
                     f"{np.array2string(found.point, precision=10)}")
        minima.append(found)
    drift = euclidean_angle(minima[-1].direction, minima[-2].direction) if len(minima) > 1 else 0.0
    if drift > drift_tol:
        metrics.DOMAIN_ERRORS.labels(error="GeometryError").inc()
        raise GeometryError(f"{f.label}: minimizer direction drifts by {drift:.3g} rad between radii "
                            f"{radii[-2]:g} and {radii[-1]:g}")
    weak = WeakPoint(Direction.along(nm, minima[-1].direction))
    logger.info(f"Pr({f.label}) = {np.array2string(weak.direction.vector, precision=10)} (drift {drift:.3g})")
    return Projection(weak, minima, drift)


def project_coarse_to_weak(nm: SingularNorm, phi: Candidate, radii: Sequence[float] = DEFAULT_RADII,
                           samples: Optional[int] = None, min_tol: float = MIN_TOL, drift_tol: float = DRIFT_TOL,
                           seed: int = 0) -> WeakPoint:
    """Direction of the ray through the ball minimizers of phi"""
    return project_with_evidence(nm, phi, radii, samples, min_tol, drift_tol, seed).weak_point


def weak_point_of_ray(r: Ray) -> WeakPoint:
    return WeakPoint(r.direction)


def _weak(nm: SingularNorm, xi) -> WeakPoint:
    if isinstance(xi, WeakPoint):
        return xi
    return WeakPoint(xi if isinstance(xi, Direction) else Direction.along(nm, xi))


def explore_fiber(nm: SingularNorm, xi, candidates: Sequence[Candidate], grid, tol: float = BUSEMANN_MATCH_TOL,
                  radii: Sequence[float] = DEFAULT_RADII, samples: Optional[int] = None,
                  schedule: Optional[LimitSchedule] = None) -> FiberReport:
    """Equivalence classes and Busemann triage of the candidates lying over xi"""
    xi = _weak(nm, xi)
    records: List[FiberRecord] = []
    kept: List[tuple] = []
    for phi in candidates:
        f, name = _representative(phi), _label(phi)
        try:
            weak = project_coarse_to_weak(nm, f, radii, samples)
        except (GeometryError, LimitError) as e:
            records.append(FiberRecord(id=name, excluded=True, note=e.detail))
            logger.warning(f"Fiber: {name} excluded ({e.detail})")
            continue
        error = weak.angle_to(xi)
        record = FiberRecord(id=name, projection=weak.direction.vector.tolist(), angular_error=error)
        if error > FIBER_ANGLE_TOL:
            record.excluded = True
            record.note = f"projects to {np.array2string(weak.direction.vector, precision=10)}"
            logger.warning(f"Fiber: {name} {record.note}, not onto the fiber")
        else:
            try:
                record.busemann = is_busemann_function(nm, f, grid, schedule=schedule).verdict
            except MinkowskiError as e:
                record.busemann = "inconclusive"
                record.note = e.detail
            kept.append((record, f))
        records.append(record)

    representatives: List[Horofunction] = []
    spreads: List[float] = []
    for record, f in kept:
        distances = [difference_spread(f, g, grid) for g in representatives]
        match = next((i for i, d in enumerate(distances) if d <= tol), None)
        if match is None:
            spreads.extend(distances)
            representatives.append(f)
            match = len(representatives) - 1
        record.equivalence_class = match
    report = FiberReport(direction=xi.direction.vector.tolist(), records=records, classes=len(representatives),
                         min_spread=min(spreads) if spreads else None,
                         excluded=[r.id for r in records if r.excluded])
    logger.info(f"Fiber over {np.array2string(xi.direction.vector, precision=8)}: {report.classes} classes, "
                f"{len(report.excluded)} excluded, min spread {report.min_spread}")
    return report


def projection_continuity_probe(nm: SingularNorm, phi_seq: Sequence[Candidate], phi: Candidate, grid,
                                radii: Sequence[float] = DEFAULT_RADII,
                                samples: Optional[int] = None) -> ContinuityReport:
    """Angular distance of Pr(phi_k) to Pr(phi) alongside the sup distance of phi_k to phi modulo constants"""
    target = project_coarse_to_weak(nm, phi, radii, samples)
    f = _representative(phi)
    pts = grid_points(grid)
    reference = f.values(pts)
    projections, angles, sups = [], [], []
    for item in phi_seq:
        g = _representative(item)
        diff = g.values(pts) - reference
        sups.append(0.5 * float(np.max(diff) - np.min(diff)))
        weak = project_coarse_to_weak(nm, g, radii, samples)
        projections.append(weak.direction.vector.tolist())
        angles.append(weak.angle_to(target))
    converges = bool(angles) and angles[-1] < CONTINUITY_TOL and angles[-1] <= angles[0]
    logger.info(f"Continuity probe: angular distances {['%.3g' % a for a in angles]} -> "
                f"{'converges' if converges else 'no convergence'}")
    return ContinuityReport(target=target.direction.vector.tolist(), projections=projections,
                            angular_distances=angles, sup_distances=sups, converges=converges)


# regularity sweep

def _jump(a: np.ndarray, b: np.ndarray) -> float:
    return float(euclidean_angle(a, b))


def _bisect_corner(point_at: Callable[[float], np.ndarray], normal_at: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Shrink [0, 1] toward the half carrying the larger normal jump"""
    a, b = 0.0, 1.0
    na, nb = normal_at(point_at(a)), normal_at(point_at(b))
    while b - a > CORNER_BISECTION:
        c = 0.5 * (a + b)
        nc = normal_at(point_at(c))
        if _jump(na, nc) >= _jump(nc, nb):
            b, nb = c, nc
        else:
            a, na = c, nc
    return point_at(0.5 * (a + b))


def _dedupe(directions: List[np.ndarray]) -> List[np.ndarray]:
    kept: List[np.ndarray] = []
    for d in directions:
        if all(euclidean_angle(d, k) > CORNER_DEDUPE for k in kept):
            kept.append(d)
    return kept


def _sweep_plane(nm: SingularNorm, resolution: int, tol: float, structure):
    angles = 2.0 * np.pi * np.arange(resolution) / resolution
    points, widths, normals = planar_sweep(nm, angles, structure)
    singular = widths >= tol
    found = [points[i] for i in np.flatnonzero(singular)]
    following = np.roll(normals, -1, axis=0)
    jumps = np.abs(np.arctan2(normals[:, 0] * following[:, 1] - normals[:, 1] * following[:, 0],
                              np.sum(normals * following, axis=1)))
    threshold = JUMP_FACTOR * max(float(np.median(jumps)), 1e-15)
    suspects = np.flatnonzero((jumps > threshold) & ~singular & ~np.roll(singular, -1))
    localized = 0
    step = 2.0 * np.pi / resolution
    for i in suspects[:MAX_LOCALIZED]:
        corner = _bisect_corner(lambda s: circle_points(nm, np.array([angles[i] + s * step]))[0],
                                lambda p: planar_sweep(nm, np.array([np.arctan2(p[1], p[0])]), structure)[2][0])
        if angular_width(nm, corner, structure) >= tol:
            found.append(corner)
            localized += 1
    max_regular = float(np.max(widths[~singular])) if np.any(~singular) else 0.0
    return found, max_regular, localized


def _sweep_sampled(nm: SingularNorm, resolution: int, tol: float, structure, seed: int):
    dirs = sphere_directions(nm.dimension, resolution, seed)
    points = dirs / nm.evaluate(dirs)[:, None]

    def widths_of(chunk):
        return [angular_width(nm, p, structure, tangents=SWEEP_TANGENTS) for p in chunk]

    widths = np.concatenate([np.asarray(w) for w in parallel_map(widths_of, chunked(points, 4 * worker_count()))])
    singular = widths >= tol
    found = [points[i] for i in np.flatnonzero(singular)]
    normals = np.stack([mean_normal(nm, p) for p in points])
    _, neighbours = cKDTree(dirs).query(dirs, k=SWEEP_NEIGHBOURS + 1)
    pairs = {(min(i, j), max(i, j)) for i, row in enumerate(neighbours) for j in row[1:]}
    pairs = sorted(pairs)
    jumps = np.array([_jump(normals[i], normals[j]) for i, j in pairs])
    threshold = JUMP_FACTOR * max(float(np.median(jumps)), 1e-15)
    order = np.argsort(-jumps)
    suspects = [pairs[k] for k in order if jumps[k] > threshold
                and not singular[pairs[k][0]] and not singular[pairs[k][1]]][:MAX_LOCALIZED]
    localized = 0
    for i, j in suspects:
        a, b = points[i], points[j]

        def point_at(s, a=a, b=b):
            p = (1.0 - s) * a + s * b
            return p / float(nm.evaluate(p))

        corner = _bisect_corner(point_at, lambda p: mean_normal(nm, p))
        if angular_width(nm, corner, structure, tangents=SWEEP_TANGENTS) >= tol:
            found.append(corner)
            localized += 1
    max_regular = float(np.max(widths[~singular])) if np.any(~singular) else 0.0
    return found, max_regular, localized


def classify_space_regularity(nm: SingularNorm, angular_resolution: int = 3600, tol: float = REGULAR_TOL,
                              structure=None, seed: int = 0) -> RegularityReport:
    """Sweep unit directions; the space is regular iff no direction has a nontrivial normal cone"""
    if nm.dimension == 2:
        found, max_regular, localized = _sweep_plane(nm, angular_resolution, tol, structure)
    else:
        found, max_regular, localized = _sweep_sampled(nm, angular_resolution, tol, structure, seed)
    singular = _dedupe(found)
    # declared directions are width-checked on their own and never merged into the sweep
    declared = [(np.asarray(d), angular_width(nm, d, structure)) for d in nm.declared_singular_directions]
    confirmed = [d for d, width in declared if width >= tol]
    unconfirmed = [d for d, width in declared if width < tol]
    verdict = SINGULAR if singular or confirmed else REGULAR
    logger.info(f"Regularity sweep of {nm.label} at resolution {angular_resolution}: {verdict}, "
                f"{len(singular)} singular directions ({localized} localized between samples)")
    return RegularityReport(verdict=verdict, resolution=angular_resolution, tolerance=tol,
                            singular_directions=[np.asarray(d, dtype=float).tolist() for d in singular],
                            max_regular_width=max_regular, localized_corners=localized,
                            declared_confirmed=[d.tolist() for d in confirmed],
                            declared_unconfirmed=[d.tolist() for d in unconfirmed])
