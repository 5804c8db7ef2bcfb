import logging
import numpy as np
from dataclasses import dataclass
from scipy import stats
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist
from typing import Callable, Optional, Tuple

from errors import ArgumentError

logger = logging.getLogger("mh.optimize")

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
DEFAULT_SAMPLES = {2: 4096, 3: 8192, 4: 16384}
REFINE_GAIN = 1e-14

Objective = Callable[[np.ndarray], np.ndarray]


def golden_section(fun: Callable[[float], float], a: float, b: float, tol: float = 1e-13,
                   max_iter: int = 200) -> Tuple[float, float]:
    """Minimize a unimodal scalar function on [a, b]"""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def parabola_refine(fun_many: Objective, x0: float, f0: float, width: float,
                    samples: int = 21) -> Tuple[float, float]:
    """Least-squares parabola through a symmetric stencil; kept only when the bracket is quadratic"""
    offsets = width * np.linspace(-1.0, 1.0, samples)
    values = fun_many(x0 + offsets)
    c2, c1, c0 = np.polyfit(offsets, values, 2)
    if c2 <= 0:
        return x0, f0
    residual = values - np.polyval((c2, c1, c0), offsets)
    if np.sqrt(np.mean(residual ** 2)) > 0.05 * c2 * width ** 2:
        return x0, f0
    vertex = -c1 / (2.0 * c2)
    if abs(vertex) > width:
        return x0, f0
    fv = float(fun_many(np.array([x0 + vertex]))[0])
    return x0 + vertex, fv


def circle_points(nm, angles: np.ndarray, radius: float = 1.0, center=None) -> np.ndarray:
    """Points of the Minkowski circle of given radius at the given Euclidean polar angles"""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    rays = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    unit = rays / nm.evaluate(rays)[:, None]
    points = radius * unit
    return points if center is None else points + np.asarray(center, dtype=float)


def sphere_directions(dimension: int, count: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy Euclidean unit directions: scrambled Sobol mapped through the normal quantile"""
    sampler = stats.qmc.Sobol(d=dimension, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2))))
    u = sampler.random_base2(m)[:count]
    gauss = stats.norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    return gauss / np.linalg.norm(gauss, axis=1, keepdims=True)


def sphere_points(nm, count: int, radius: float = 1.0, center=None, seed: int = 0) -> np.ndarray:
    """Sampled Minkowski sphere; exact angular grid in the plane"""
    if nm.dimension == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return circle_points(nm, angles, radius, center)
    d = sphere_directions(nm.dimension, count, seed)
    points = radius * d / nm.evaluate(d)[:, None]
    return points if center is None else points + np.asarray(center, dtype=float)


@dataclass
class SphereMinimum:
    point: np.ndarray
    direction: np.ndarray
    value: float
    radius: float
    grid_value: float
    components: int
    diameter: float
    samples: int

    @property
    def unique(self) -> bool:
        return self.components == 1


def _circular_runs(mask: np.ndarray) -> int:
    if mask.all():
        return 1
    if not mask.any():
        return 0
    starts = mask & ~np.roll(mask, 1)
    return int(np.count_nonzero(starts))


def _graph_components(points: np.ndarray, mask: np.ndarray) -> int:
    selected = points[mask]
    if len(selected) <= 1:
        return len(selected)
    tree = cKDTree(points)
    spacing, _ = tree.query(points, k=2)
    radius = 3.0 * float(np.median(spacing[:, 1]))
    sub = cKDTree(selected)
    pairs = sub.query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return len(selected)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(selected),) * 2)
    count, _ = connected_components(graph, directed=False)
    return int(count)


def _diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if len(points) > 4000:
        points = points[np.linspace(0, len(points) - 1, 4000).astype(int)]
    return float(np.max(pdist(points)))


def minimize_on_sphere(nm, objective: Objective, radius: float = 1.0, center=None, samples: Optional[int] = None,
                       band: Optional[float] = None, seed: int = 0, refine: bool = True) -> SphereMinimum:
    """Minimize objective over the Minkowski sphere S(center, radius).

    Dense sampling first (angular grid in the plane, Sobol directions above),
    then golden-section refinement in angle (n = 2) or coordinate search with
    random frames (n >= 3). The sampled sublevel set {value <= min + band}
    must be connected for the minimizer to count as unique.
    """
    if radius <= 0:
        raise ArgumentError(f"sphere: radius must be positive, got {radius}")
    n = nm.dimension
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    samples = samples or DEFAULT_SAMPLES[n]
    band = 1e-4 * max(1.0, radius) if band is None else band
    points = sphere_points(nm, samples, radius, center, seed)
    values = np.asarray(objective(points), dtype=float)
    best = int(np.argmin(values))
    grid_value = float(values[best])
    mask = values <= grid_value + band
    components = _circular_runs(mask) if n == 2 else _graph_components(points, mask)
    diameter = _diameter(points[mask])
    if not refine:
        point = points[best]
        return SphereMinimum(point, (point - center) / radius, grid_value, radius, grid_value,
                             components, diameter, samples)
    if n == 2:
        point, value = _refine_circle(nm, objective, center, radius, best, samples, grid_value)
    else:
        point, value = _refine_sphere(nm, objective, center, radius, points, values, seed)
    # refinement must beat the sampled minimum by more than roundoff; corners stay exact
    if value > grid_value - REFINE_GAIN * max(1.0, abs(grid_value)):
        point, value = points[best], grid_value
    return SphereMinimum(point, (point - center) / radius, float(value), radius, grid_value,
                         components, diameter, samples)


def _refine_circle(nm, objective, center, radius, best, samples, grid_value):
    step = 2.0 * np.pi / samples
    phi0 = 2.0 * np.pi * best / samples

    def along(angles):
        return np.asarray(objective(circle_points(nm, angles, radius, center)), dtype=float)

    phi, value = golden_section(lambda a: float(along(np.array([a]))[0]), phi0 - step, phi0 + step)
    phi, value = parabola_refine(along, phi, value, width=min(1e-3, step / 2))
    return circle_points(nm, np.array([phi]), radius, center)[0], value


def _refine_sphere(nm, objective, center, radius, points, values, seed, starts: int = 4, sweeps: int = 60):
    rng = np.random.default_rng(seed)
    n = nm.dimension

    def on_sphere(d):
        return center + radius * d / float(nm.evaluate(d))

    def g(d):
        return float(objective(on_sphere(d)[None, :])[0])

    best_point, best_value = None, np.inf
    for idx in np.argsort(values)[:starts]:
        d = (points[idx] - center) / radius
        d = d / np.linalg.norm(d)
        current = g(d)
        step = 4.0 * (4.0 / len(points)) ** (1.0 / (n - 1))
        for _ in range(sweeps):
            frame, _ = np.linalg.qr(rng.standard_normal((n, n)))
            improved = False
            for e in frame.T:
                s, val = golden_section(lambda s: g(d + s * e), -step, step, tol=1e-14)
                if val < current:
                    d = d + s * e
                    d = d / np.linalg.norm(d)
                    improved = improved or current - val > 1e-15
                    current = val
            if not improved:
                step *= 0.5
            if step < 1e-12:
                break
        if current < best_value:
            best_point, best_value = on_sphere(d), current
    return best_point, best_value


def maximize_on_sphere(nm, objective: Objective, **kwargs) -> SphereMinimum:
    """Maximization by negation; the returned value is the maximum"""
    found = minimize_on_sphere(nm, lambda p: -np.asarray(objective(p)), **kwargs)
    found.value = -found.value
    found.grid_value = -found.grid_value
    return found
