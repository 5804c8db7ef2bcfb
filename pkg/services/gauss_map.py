import logging
import numpy as np
from scipy.linalg import cholesky, solve_triangular
from typing import Optional, Tuple

from errors import ArgumentError, ComputationError, ConditioningError, DomainError, StrictConvexityError
from models.gauss import REGULAR, SINGULAR, GaussImage
from models.norms import SingularNorm
from models.vectors import Direction, EuclideanUnitNormal, as_vector, euclidean_angle
from services import metrics
from services.limits import richardson
from services.optimize import circle_points, maximize_on_sphere, sphere_directions

logger = logging.getLogger("mh.gauss")

DERIVATIVE_STEP = 1e-4
REGULAR_TOL = 1e-6
FLAT_PROBE = 1e-2
FLAT_DROP = 1e-13
SAMPLED_TANGENTS = 64
CONDITIONING_TOL = 1e-12


def _vec(x, dimension: Optional[int] = None) -> np.ndarray:
    if isinstance(x, (Direction, EuclideanUnitNormal)):
        return x.vector
    return as_vector(x, dimension)


def _normal(nm: SingularNorm, nu) -> np.ndarray:
    if isinstance(nu, EuclideanUnitNormal):
        if nu.dimension != nm.dimension:
            raise ArgumentError(f"normal: dimension mismatch ({nu.dimension} != {nm.dimension})")
        return nu.vector
    return EuclideanUnitNormal.of(nu, nm.dimension).vector


def _support(nm: SingularNorm, nu) -> Tuple[np.ndarray, float]:
    nu = _normal(nm, nu)
    found = maximize_on_sphere(nm, lambda p: p @ nu)
    metrics.SUPPORT_MAXIMIZATIONS.inc()
    if not np.isfinite(found.value) or found.value <= 0:
        raise ComputationError(f"support: maximization of <nu, x> failed for nu={nu.tolist()}",
                               best_iterate=found.point.tolist())
    _assert_unique_support(nm, nu, found.point, found.value)
    return found.point, float(found.value)


def _assert_unique_support(nm: SingularNorm, nu: np.ndarray, point: np.ndarray, value: float) -> None:
    """A flat face shows up as a sphere point a fixed step away attaining the same support value"""
    if nm.dimension == 2:
        phi = np.arctan2(point[1], point[0])
        probes = circle_points(nm, np.array([phi - FLAT_PROBE, phi + FLAT_PROBE]))
    else:
        tangents = _tangents(point, 2 * (nm.dimension - 1))
        tangents = np.vstack([tangents, -tangents])
        raw = point + FLAT_PROBE * np.linalg.norm(point) * tangents
        probes = raw / nm.evaluate(raw)[:, None]
    drops = value - probes @ nu
    if np.any(drops <= FLAT_DROP * max(1.0, abs(value))):
        far = probes[int(np.argmin(drops))]
        metrics.DOMAIN_ERRORS.labels(error="StrictConvexityError").inc()
        raise StrictConvexityError(
            f"support of nu={nu.tolist()} attained at {point.tolist()} and {far.tolist()} "
            f"(distance {np.linalg.norm(far - point):.3g}); unit sphere has a flat face")


def support_value(nm: SingularNorm, nu) -> float:
    """h(nu) = max of <nu, x> over the unit sphere"""
    return _support(nm, nu)[1]


def inverse_gauss(nm: SingularNorm, nu) -> Direction:
    """The unique point of the unit sphere whose support hyperplane has outward normal nu"""
    point, value = _support(nm, nu)
    logger.debug(f"inverse Gauss of {np.array2string(_normal(nm, nu), precision=6)}: "
                 f"{np.array2string(point, precision=10)} (h = {value:.15g})")
    return Direction.unit(nm, point)


def one_sided_derivative(nm: SingularNorm, v: np.ndarray, d: np.ndarray, h: float = DERIVATIVE_STEP) -> float:
    """||.||'(v; d) from forward differences at h, h/2, h/4 with Richardson extrapolation"""
    base = float(nm.evaluate(v))
    steps = h * np.array([1.0, 0.5, 0.25])
    quotients = (nm.evaluate(v[None, :] + steps[:, None] * d[None, :]) - base) / steps
    return float(richardson(quotients))


def _tangents(v: np.ndarray, count: int, seed: int = 0) -> np.ndarray:
    """Euclidean unit vectors orthogonal to v"""
    n = v.size
    if n == 2:
        # one tangent suffices: extreme subgradients use both t and -t
        return (np.array([-v[1], v[0]]) / np.linalg.norm(v))[None, :]
    d = sphere_directions(n, max(count, 2), seed)
    u = v / np.linalg.norm(v)
    d = d - np.outer(d @ u, u)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _extreme_subgradients(nm: SingularNorm, v: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Subgradients g with <g, v> = 1 extremal along tangent t: <g, t> = D+(t) and -D+(-t)"""
    center = v / float(v @ v)
    upper = one_sided_derivative(nm, v, t)
    lower = -one_sided_derivative(nm, v, -t)
    return center + upper * t, center + lower * t


def _structure_factor(structure, dimension: int) -> Optional[np.ndarray]:
    if structure is None:
        return None
    g = np.asarray(structure, dtype=float)
    if g.shape != (dimension, dimension) or not np.allclose(g, g.T):
        raise ArgumentError("euclidean structure must be a symmetric matrix of the ambient dimension")
    try:
        return cholesky(g, lower=True)
    except np.linalg.LinAlgError:
        raise ArgumentError("euclidean structure must be positive definite")


def _structured_angle(factor: Optional[np.ndarray], g1: np.ndarray, g2: np.ndarray) -> float:
    # normals are G^-1 g; their G-angle equals the Euclidean angle of L^-1 g
    if factor is None:
        return euclidean_angle(g1, g2)
    return euclidean_angle(solve_triangular(factor, g1, lower=True), solve_triangular(factor, g2, lower=True))


def angular_width(nm: SingularNorm, v, structure=None, tangents: int = SAMPLED_TANGENTS) -> float:
    """Angular width of the normal cone at v (exact in the plane, sampled maximum above)"""
    v = _vec(v, nm.dimension)
    factor = _structure_factor(structure, nm.dimension)
    width = 0.0
    for t in _tangents(v, tangents):
        upper, lower = _extreme_subgradients(nm, v, t)
        width = max(width, _structured_angle(factor, upper, lower))
    return width


def planar_sweep(nm: SingularNorm, angles, structure=None,
                 h: float = DERIVATIVE_STEP) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit-circle points at the given polar angles with their normal-cone widths and mean normals; batched"""
    if nm.dimension != 2:
        raise ArgumentError("planar sweep needs a two-dimensional norm")
    factor = _structure_factor(structure, 2)
    points = circle_points(nm, angles)
    t = np.stack([-points[:, 1], points[:, 0]], axis=1)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    steps = h * np.array([1.0, 0.5, 0.25])
    base = nm.evaluate(points)

    def derivative(d):
        shifted = points[None, :, :] + steps[:, None, None] * d[None, :, :]
        return richardson((nm.evaluate(shifted) - base[None, :]) / steps[:, None])

    center = points / np.sum(points * points, axis=1, keepdims=True)
    upper = center + derivative(t)[:, None] * t
    lower = center - derivative(-t)[:, None] * t
    if factor is not None:
        upper = solve_triangular(factor, upper.T, lower=True).T
        lower = solve_triangular(factor, lower.T, lower=True).T
    widths = np.abs(np.arctan2(upper[:, 0] * lower[:, 1] - upper[:, 1] * lower[:, 0], np.sum(upper * lower, axis=1)))
    normals = upper / np.linalg.norm(upper, axis=1, keepdims=True) + lower / np.linalg.norm(lower, axis=1,
                                                                                             keepdims=True)
    return points, widths, normals / np.linalg.norm(normals, axis=1, keepdims=True)


def _gradient(nm: SingularNorm, x: np.ndarray, delta: float) -> np.ndarray:
    eye = np.eye(x.size) * delta
    return (nm.evaluate(x[None, :] + eye) - nm.evaluate(x[None, :] - eye)) / (2.0 * delta)


def mean_normal(nm: SingularNorm, v, delta: float = 1e-7) -> np.ndarray:
    """Euclidean unit normal from a central-difference gradient; averages the cone at a corner"""
    g = _gradient(nm, _vec(v, nm.dimension), delta)
    return g / np.linalg.norm(g)


def gauss_image(nm: SingularNorm, v: Direction, tol: float = REGULAR_TOL) -> GaussImage:
    """Normal cone of the unit ball at v, intersected with the Euclidean unit sphere"""
    if not isinstance(v, Direction):
        v = Direction.unit(nm, v)
    vec = v.vector
    if nm.dimension == 2:
        upper, lower = _extreme_subgradients(nm, vec, _tangents(vec, 1)[0])
        width = euclidean_angle(upper, lower)
        if width < tol:
            normal = EuclideanUnitNormal.of(0.5 * (upper + lower))
            return GaussImage(v, (normal,), "singleton", width)
        return GaussImage(v, (EuclideanUnitNormal.of(lower), EuclideanUnitNormal.of(upper)), "arc", width)
    width = angular_width(nm, vec)
    if width < tol:
        return GaussImage(v, (EuclideanUnitNormal.of(_gradient(nm, vec, 1e-6)),), "singleton", width)
    # limiting gradients at nearby smooth points approximate the extreme normals
    sampled = []
    for t in _tangents(vec, SAMPLED_TANGENTS):
        sampled.append(EuclideanUnitNormal.of(_gradient(nm, vec + 1e-6 * t, 1e-9)))
    return GaussImage(v, tuple(sampled), "sampled", width)


def classify_direction(nm: SingularNorm, v, tol: float = REGULAR_TOL, structure=None) -> str:
    """regular iff the Gauss image has angular width below tol"""
    if not isinstance(v, Direction):
        v = Direction.unit(nm, v)
    width = angular_width(nm, v.vector, structure)
    verdict = REGULAR if width < tol else SINGULAR
    logger.debug(f"direction {np.array2string(v.vector, precision=8)}: width {width:.3g} -> {verdict}")
    return verdict


def _positive_pair(nu: np.ndarray, *vectors: np.ndarray) -> None:
    for x in vectors:
        if float(nu @ x) <= 0:
            raise DomainError(f"<nu, v> must be positive; got {float(nu @ x):.6g} for v={x.tolist()}")


def theta(nu0, v, w) -> float:
    """theta(v, w) = <nu0, v> / <nu0, w>, the unique scalar with (v - theta w) orthogonal to nu0"""
    nu0, v, w = _vec(nu0), _vec(v), _vec(w)
    _positive_pair(nu0, v, w)
    return float(nu0 @ v) / float(nu0 @ w)


def big_theta(nm: SingularNorm, nu0, v, w) -> float:
    """Theta(v, w) = (1 - theta) / ||v - theta w||, and 0 at v = w"""
    nu0, v, w = _vec(nu0, nm.dimension), _vec(v, nm.dimension), _vec(w, nm.dimension)
    _positive_pair(nu0, v, w)
    if np.array_equal(v, w):
        return 0.0
    th = theta(nu0, v, w)
    return (1.0 - th) / float(nm.evaluate(v - th * w))


def cosine_identity_check(nm: SingularNorm, nu0, v1, v2) -> float:
    """|(1 - theta)|v2| / |v2 - v1| - cos(nu, v2 - v1) / cos(nu, v2)| with Euclidean lengths and angles"""
    nu0, v1, v2 = _vec(nu0, nm.dimension), _vec(v1, nm.dimension), _vec(v2, nm.dimension)
    _positive_pair(nu0, v1, v2)
    chord = v2 - v1
    chord_length = float(np.linalg.norm(chord))
    if chord_length < CONDITIONING_TOL * float(np.linalg.norm(v2)):
        raise ConditioningError(f"cosine identity: v1 and v2 coincide to {chord_length:.3g}")
    cos_denominator = float(nu0 @ v2) / (np.linalg.norm(nu0) * np.linalg.norm(v2))
    if cos_denominator < CONDITIONING_TOL:
        raise ConditioningError(f"cosine identity: cos(nu, v2) = {cos_denominator:.3g} below {CONDITIONING_TOL}")
    th = theta(nu0, v1, v2)
    left = (1.0 - th) * float(np.linalg.norm(v2)) / chord_length
    right = (float(nu0 @ chord) / (np.linalg.norm(nu0) * chord_length)) / cos_denominator
    return abs(left - right)


def lam(nm: SingularNorm, nu, v, touching: Optional[np.ndarray] = None) -> float:
    """lambda(nu, v) = <nu, mu^-1(nu)> / <nu, v> >= 1"""
    nu_vec, v = _normal(nm, nu), _vec(v, nm.dimension)
    if float(nu_vec @ v) <= 0:
        raise DomainError(f"lambda: <nu, v> = {float(nu_vec @ v):.6g} is not positive")
    if touching is None:
        touching = inverse_gauss(nm, nu).vector
    return float(nu_vec @ touching) / float(nu_vec @ v)


def big_lambda(nm: SingularNorm, nu, v, touching: Optional[np.ndarray] = None) -> float:
    """Lambda(nu, v) = (lambda - 1) / ||mu^-1(nu) - v||, and 0 at the touching point"""
    v = _vec(v, nm.dimension)
    if touching is None:
        touching = inverse_gauss(nm, nu).vector
    if np.array_equal(touching, v):
        _positive_pair(_normal(nm, nu), v)
        return 0.0
    return (lam(nm, nu, v, touching) - 1.0) / float(nm.evaluate(touching - v))


def big_l(nm: SingularNorm, v0, nu) -> float:
    """L_{v0}(nu) = Lambda(nu, v0)"""
    return big_lambda(nm, nu, v0)
