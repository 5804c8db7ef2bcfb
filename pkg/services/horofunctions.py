import logging
import numpy as np
import sympy
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from errors import ArgumentError, GeometryError, LimitError, PreconditionError
from models.horofunction import BUSEMANN, CLOSED_FORM, SEQUENCE, HoroballSample, Horofunction
from models.norms import SingularNorm
from models.sequences import PointSequence
from models.vectors import BoundingBox, PointGrid, Ray, as_point, as_points
from services import metrics
from services.contour import edge_crossings, marching_squares
from services.limits import LimitResult, LimitSchedule, extrapolate_limit
from services.norm_core import lipschitz_defect
from services.optimize import GOLDEN, SphereMinimum, minimize_on_sphere

logger = logging.getLogger("mh.horofunctions")

DEFAULT_SCHEDULE = LimitSchedule()
EQUIVALENCE_TOL = 1e-6
BUSEMANN_MATCH_TOL = 1e-4
TRIAGE_RADIUS = 10.0
LEVEL_RESIDUAL_TOL = 1e-6
MIN_RESOLUTION = 8

BUSEMANN_VERDICT = "busemann"
NOT_BUSEMANN = "not-busemann"
INCONCLUSIVE = "inconclusive"


def _schedule(schedule: Optional[LimitSchedule]) -> LimitSchedule:
    return schedule or DEFAULT_SCHEDULE


def grid_points(grid) -> np.ndarray:
    """Probe points from a PointGrid or an explicit (m, n) array"""
    pts = grid.points() if isinstance(grid, PointGrid) else np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.size == 0:
        raise ArgumentError("grid: no probe points")
    return pts


# Busemann functions of rays

def _busemann_limit(nm: SingularNorm, r: Ray, points: np.ndarray, schedule: LimitSchedule,
                    base: np.ndarray) -> LimitResult:
    # the base row rides along so the monotonicity assertion sees raw values
    batch = np.vstack([base[None, :], points])
    reference = float(np.max(nm.evaluate(batch - r.origin)))

    def raw(j):
        t = 2.0 ** j
        return nm.evaluate(batch - r.at(t)) - t

    return extrapolate_limit(raw, lambda j: 2.0 ** j, reference, schedule, points=batch, monotone=True,
                             provenance=BUSEMANN)


def busemann_eval(nm: SingularNorm, r: Ray, y, schedule: Optional[LimitSchedule] = None, base=None):
    """beta(y) = lim ||y - c(t)|| - t, normalized to vanish at `base` (the ray origin by default)"""
    single = np.ndim(y) == 1
    pts = as_points(y, nm.dimension, "y")
    base = r.origin if base is None else as_point(base, nm.dimension, "base")
    result = _busemann_limit(nm, r, pts, _schedule(schedule), base)
    values = result.values[1:] - result.values[0]
    return float(values[0]) if single else values


def busemann_horofunction(nm: SingularNorm, r: Ray, schedule: Optional[LimitSchedule] = None, base=None,
                          label: Optional[str] = None) -> Horofunction:
    base = r.origin if base is None else as_point(base, nm.dimension, "base")
    schedule = _schedule(schedule)

    def evaluator(points):
        return busemann_eval(nm, r, np.atleast_2d(points), schedule, base)

    label = label or f"busemann{np.array2string(r.direction.vector, precision=6, separator=',')}"
    return Horofunction.of(evaluator, base, BUSEMANN, source=r, label=label, normalized=True,
                           metadata={"origin": r.origin.tolist(), "direction": r.direction.vector.tolist()})


# limits of distance functions along sequences

def _ensure_escapes(nm: SingularNorm, seq: PointSequence, schedule: LimitSchedule) -> None:
    middle = schedule.max_steps // 2
    near = float(nm.evaluate(seq.point(seq.index(middle // 2)) - seq.base))
    far = float(nm.evaluate(seq.point(seq.index(middle)) - seq.base))
    if not (far >= 2.0 * near or far > 1e6):
        raise PreconditionError(f"sequence {seq.label}: not flag-directed: bounded "
                                f"(distance {near:.6g} at step {middle // 2}, {far:.6g} at step {middle})")


def _sequence_limit(nm: SingularNorm, seq: PointSequence, points: np.ndarray,
                    schedule: LimitSchedule) -> LimitResult:
    base = seq.base
    cache: Dict[int, np.ndarray] = {}

    def term(j):
        if j not in cache:
            cache[j] = np.asarray(seq.point(seq.index(j)), dtype=float)
        return cache[j]

    def raw(j):
        xk = term(j)
        return nm.evaluate(points - xk) - nm.evaluate(base - xk)

    def scale(j):
        return float(nm.evaluate(term(j) - base))

    reference = float(np.max(nm.evaluate(points - base)))
    return extrapolate_limit(raw, scale, reference, schedule, points=points, provenance=SEQUENCE)


def horofunction_limit(nm: SingularNorm, seq: PointSequence, probe=None, schedule: Optional[LimitSchedule] = None,
                       label: Optional[str] = None, metadata: Optional[Dict] = None) -> Horofunction:
    """Pointwise limit of d_{x_k}, certified on the probe grid"""
    schedule = _schedule(schedule)
    if seq.dimension != nm.dimension:
        raise ArgumentError(f"sequence {seq.label}: dimension {seq.dimension} != norm dimension {nm.dimension}")
    _ensure_escapes(nm, seq, schedule)

    def evaluator(points):
        return _sequence_limit(nm, seq, np.atleast_2d(np.asarray(points, dtype=float)), schedule).values

    meta = dict(metadata or {})
    if probe is not None:
        pts = grid_points(probe)
        certificate = _sequence_limit(nm, seq, pts, schedule)
        spread = np.abs(certificate.last_iterates[-1] - certificate.last_iterates[-2])
        meta["certificate"] = {"probe_points": int(len(pts)), "max_last_difference": float(np.max(spread)),
                               "max_step": int(np.max(certificate.steps))}
        logger.info(f"Sequence {seq.label}: limit certified on {len(pts)} probe points "
                    f"(last difference {float(np.max(spread)):.3g})")
    return Horofunction.of(evaluator, seq.base, SEQUENCE, source=seq.label, label=label or seq.label,
                           normalized=True, metadata=meta)


# comparison, level sets

def difference_spread(f: Horofunction, g: Horofunction, grid) -> float:
    """max - min of f - g over the grid"""
    if f.dimension != g.dimension:
        raise ArgumentError(f"horofunctions live in different dimensions ({f.dimension}, {g.dimension})")
    pts = grid_points(grid)
    diff = f.values(pts) - g.values(pts)
    return float(np.max(diff) - np.min(diff))


def equivalent_up_to_constant(f: Horofunction, g: Horofunction, grid, tol: float = EQUIVALENCE_TOL) -> bool:
    spread = difference_spread(f, g, grid)
    logger.debug(f"{f.label} vs {g.label}: spread {spread:.3g} (tol {tol:g})")
    return spread <= tol


def lipschitz_check(nm: SingularNorm, f: Horofunction, grid, pairs: int = 1000, seed: int = 0) -> float:
    """Worst |f(x) - f(y)| - ||x - y|| on sampled grid pairs"""
    return lipschitz_defect(nm, f.values, grid_points(grid), seed=seed, pairs=pairs)


def horosphere_sample(nm: SingularNorm, f: Horofunction, level: float, box: BoundingBox,
                      resolution: int = 64) -> HoroballSample:
    """Level set {f = level} inside the box: marching squares in the plane, edge bisection above"""
    if resolution < MIN_RESOLUTION:
        raise ArgumentError(f"horosphere: resolution must be at least {MIN_RESOLUTION}, got {resolution}")
    if box.dimension != nm.dimension or f.dimension != nm.dimension:
        raise ArgumentError("horosphere: box, horofunction and norm dimensions differ")
    axes = tuple(np.linspace(lo, hi, resolution + 1) for lo, hi in zip(box.low, box.high))
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)
    values = f.values(grid).reshape(mesh[0].shape)
    if nm.dimension == 2:
        points, polylines, residual = marching_squares(f.values, axes[0], axes[1], values, level)
    else:
        points, residual = edge_crossings(f.values, axes, values, level)
        polylines = []
    diagnostic = None
    if len(points) == 0:
        diagnostic = (f"level {level:g} misses the box: {f.label} ranges over "
                      f"[{float(values.min()):.6g}, {float(values.max()):.6g}] there")
        logger.warning(f"Horosphere of {f.label}: {diagnostic}")
    elif residual > LEVEL_RESIDUAL_TOL:
        diagnostic = f"worst level residual {residual:.3g} exceeds {LEVEL_RESIDUAL_TOL:g}"
        logger.warning(f"Horosphere of {f.label}: {diagnostic}")
    else:
        logger.info(f"Horosphere of {f.label} at level {level:g}: {len(points)} points, {len(polylines)} polylines")
    return HoroballSample(f, float(level), points, polylines, grid, (values <= level).ravel(), residual, diagnostic)


def horoball_contains(f: Horofunction, x, level: float = 0.0):
    """Membership in the closed sublevel set {f <= level}"""
    if np.ndim(x) == 1:
        return bool(f(x) <= level)
    return f.values(x) <= level


def rebase(f: Horofunction, new_base) -> Horofunction:
    """Same coarse point, normalized at a new base"""
    new_base = as_point(new_base, f.dimension, "base")
    shift = float(f.values(new_base)[0])
    metadata = dict(f.metadata)
    metadata["rebased_from"] = f.base.tolist()
    return Horofunction(f.values, new_base, f.provenance, f.source, f.label, shift, metadata)


# ball minimization and Busemann triage

def sphere_minimum(nm: SingularNorm, f: Horofunction, radius: float, samples: Optional[int] = None,
                   seed: int = 0) -> SphereMinimum:
    """Minimum of f over the sphere of given radius around its base"""
    metrics.SPHERE_MINIMIZATIONS.inc()
    return minimize_on_sphere(nm, f.values, radius=radius, center=f.base, samples=samples, seed=seed)


@dataclass
class BusemannVerdict:
    verdict: str
    ray: Optional[Ray] = None
    spread: Optional[float] = None
    detail: str = ""

    def describe(self) -> Dict:
        ray = None
        if self.ray is not None:
            ray = {"origin": self.ray.origin.tolist(), "direction": self.ray.direction.vector.tolist()}
        return {"verdict": self.verdict, "ray": ray, "spread": self.spread, "detail": self.detail}


def is_busemann_function(nm: SingularNorm, f: Horofunction, grid=None, tol: float = BUSEMANN_MATCH_TOL,
                         schedule: Optional[LimitSchedule] = None, radius: float = TRIAGE_RADIUS,
                         samples: Optional[int] = None) -> BusemannVerdict:
    """Compare f with the Busemann function of the ray through its ball minimizers"""
    grid = grid if grid is not None else PointGrid.cube(dimension=nm.dimension)
    try:
        found = sphere_minimum(nm, f, radius, samples)
        if not found.unique:
            metrics.DOMAIN_ERRORS.labels(error="GeometryError").inc()
            raise GeometryError(f"{f.label}: minimizer on the sphere of radius {radius:g} is not unique "
                                f"({found.components} components, diameter {found.diameter:.3g})")
        ray = Ray.of(nm, f.base, found.point - f.base)
        candidate = busemann_horofunction(nm, ray, schedule, base=f.base)
        spread = difference_spread(f, candidate, grid)
    except LimitError as e:
        logger.warning(f"{f.label}: Busemann triage inconclusive ({e.detail})")
        return BusemannVerdict(INCONCLUSIVE, detail=e.detail)
    verdict = BUSEMANN_VERDICT if spread <= tol else NOT_BUSEMANN
    logger.info(f"{f.label}: {verdict} (spread {spread:.3g} against the ray in direction "
                f"{np.array2string(ray.direction.vector, precision=8)})")
    return BusemannVerdict(verdict, ray, spread)


# closed forms

def _closed(fun, base, label: str, normalized: bool = True, **metadata) -> Horofunction:
    def evaluator(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return fun(pts[:, 0], pts[:, 1]) if pts.shape[1] == 2 else fun(pts)

    return Horofunction.of(evaluator, base, CLOSED_FORM, source=label, label=label, normalized=normalized,
                           metadata=metadata)


def beta0() -> Horofunction:
    """|x2| - x1, the Busemann function of the ray (t, 0)"""
    return _closed(lambda x1, x2: np.abs(x2) - x1, (0.0, 0.0), "beta0")


def beta0_shifted(a: float) -> Horofunction:
    """|x2 - a| - x1, based at (0, a)"""
    return _closed(lambda x1, x2: np.abs(x2 - a) - x1, (0.0, float(a)), f"beta0_shifted(a={a:g})", a=float(a))


def phi_plus() -> Horofunction:
    return _closed(lambda x1, x2: x2 - x1, (0.0, 0.0), "phi_plus")


def phi_minus() -> Horofunction:
    return _closed(lambda x1, x2: -x2 - x1, (0.0, 0.0), "phi_minus")


def _coex_parameters(lam: float, mu: float, eps1: int, eps2: int) -> None:
    if eps1 not in (-1, 1) or eps2 not in (-1, 1):
        raise ArgumentError(f"coex family: eps1, eps2 must be +-1, got {eps1}, {eps2}")
    if abs(lam ** 2 + (mu + eps2) ** 2 - 2.0) > 1e-9:
        raise ArgumentError(f"coex family: lam^2 + (mu + eps2)^2 must equal 2, got "
                            f"{lam ** 2 + (mu + eps2) ** 2:.12g}")
    if eps2 * mu < -1e-12:
        raise ArgumentError(f"coex family: (lam, mu) = ({lam:g}, {mu:g}) is off the arc of the unit sphere")


def coex_family(lam: float, mu: float, eps1: int = -1, eps2: int = 1) -> Horofunction:
    """eps1 (lam x1 + (mu + eps2) x2) / (1 - eps2 mu): Busemann function of the direction -eps1 (lam, mu)"""
    _coex_parameters(lam, mu, eps1, eps2)
    scale = 1.0 - eps2 * mu
    return _closed(lambda x1, x2: eps1 * (lam * x1 + (mu + eps2) * x2) / scale, (0.0, 0.0),
                   f"coex(lam={lam:.6g},mu={mu:.6g},eps1={eps1},eps2={eps2})",
                   lam=lam, mu=mu, eps1=eps1, eps2=eps2, direction=[-eps1 * lam, -eps1 * mu])


def coex_family_raw(lam: float, mu: float, eps1: int = -1, eps2: int = 1) -> Horofunction:
    """Un-normalized family eps1 (lam x1 + (mu + eps2) x2); not 1-Lipschitz"""
    _coex_parameters(lam, mu, eps1, eps2)
    return _closed(lambda x1, x2: eps1 * (lam * x1 + (mu + eps2) * x2), (0.0, 0.0),
                   f"coex_raw(lam={lam:.6g},mu={mu:.6g},eps1={eps1},eps2={eps2})")


def coex_point(s: float, eps2: int = 1) -> Tuple[float, float]:
    """(lam, mu) = (sqrt2 cos(pi/4 + s), eps2 (sqrt2 sin(pi/4 + s) - 1)); s = 0 is the corner (1, 0)"""
    if not 0.0 <= s <= np.pi / 2:
        raise ArgumentError(f"coex point: s must lie in [0, pi/2], got {s}")
    return float(np.sqrt(2.0) * np.cos(np.pi / 4 + s)), float(eps2 * (np.sqrt(2.0) * np.sin(np.pi / 4 + s) - 1.0))


def euclidean_linear(u: Sequence[float], base=None) -> Horofunction:
    """-<y - x0, u> with u normalized to Euclidean length one"""
    u = as_point(u, name="direction")
    u = u / np.linalg.norm(u)
    base = np.zeros(u.size) if base is None else as_point(base, u.size, "base")
    return Horofunction.of(lambda pts: -(np.atleast_2d(pts) - base) @ u, base, CLOSED_FORM,
                           source="euclidean_linear", label=f"euclidean_linear{np.round(u, 6).tolist()}",
                           normalized=True, metadata={"direction": u.tolist()})


def formula_horofunction(formula: str, dimension: int, base=None) -> Horofunction:
    """Closed form given as a sympy expression in x1..xn"""
    symbols = sympy.symbols(" ".join(f"x{i + 1}" for i in range(dimension)))
    try:
        expr = sympy.sympify(formula, locals={str(s): s for s in symbols})
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise ArgumentError(f"closed form {formula!r}: cannot parse ({e})")
    if expr.free_symbols - set(symbols):
        raise ArgumentError(f"closed form {formula!r}: unknown symbols {sorted(map(str, expr.free_symbols))}")
    fun = sympy.lambdify(symbols, expr, modules="numpy")
    base = np.zeros(dimension) if base is None else as_point(base, dimension, "base")

    def evaluator(pts):
        pts = np.atleast_2d(pts)
        out = fun(*pts.T)
        return np.broadcast_to(np.asarray(out, dtype=float), (len(pts),)).copy()

    return Horofunction.of(evaluator, base, CLOSED_FORM, source=formula, label=formula)


CATALOGUE = {
    "beta0": lambda **p: beta0(),
    "beta0_shifted": lambda a=0.0, **p: beta0_shifted(a),
    "phi_plus": lambda **p: phi_plus(),
    "phi_minus": lambda **p: phi_minus(),
    "coex_family": lambda lam=None, mu=None, eps1=-1, eps2=1, **p: coex_family(lam, mu, eps1, eps2),
    "coex_family_raw": lambda lam=None, mu=None, eps1=-1, eps2=1, **p: coex_family_raw(lam, mu, eps1, eps2),
    "euclidean_linear": lambda direction=None, base=None, **p: euclidean_linear(direction, base),
}


def closed_form(name: str, dimension: int = 2, **params) -> Horofunction:
    """Catalogue entry by name, otherwise a sympy formula in x1..xn"""
    if name in CATALOGUE:
        if name.startswith("coex") and (params.get("lam") is None or params.get("mu") is None):
            raise ArgumentError(f"closed form {name} requires 'lam' and 'mu'")
        if name == "euclidean_linear" and params.get("direction") is None:
            raise ArgumentError("closed form euclidean_linear requires 'direction'")
        f = CATALOGUE[name](**params)
        if f.dimension != dimension:
            raise ArgumentError(f"closed form {name} is {f.dimension}-dimensional, norm is {dimension}-dimensional")
        return f
    return formula_horofunction(name, dimension, params.get("base"))


# asymptotic rays

def _distance_to_segment(nm: SingularNorm, points: np.ndarray, r: Ray, horizon: float) -> np.ndarray:
    # t -> ||p - c(t)|| is convex; batched golden section on [0, horizon]
    a = np.zeros(len(points))
    b = np.full(len(points), float(horizon))
    for _ in range(120):
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc = nm.evaluate(points - r.at(c))
        fd = nm.evaluate(points - r.at(d))
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    t = 0.5 * (a + b)
    return np.minimum.reduce([nm.evaluate(points - r.at(t)), nm.evaluate(points - r.origin),
                              nm.evaluate(points - r.at(np.full(len(points), float(horizon))))])


def _hausdorff(nm: SingularNorm, r1: Ray, r2: Ray, horizon: float, samples: int) -> float:
    ts = np.linspace(0.0, horizon, samples)
    return float(max(np.max(_distance_to_segment(nm, r1.at(ts), r2, horizon)),
                     np.max(_distance_to_segment(nm, r2.at(ts), r1, horizon))))


def rays_asymptotic(nm: SingularNorm, r1: Ray, r2: Ray, horizon: float = 100.0,
                    samples: int = 257) -> Tuple[bool, float]:
    """Sampled Hausdorff distance of the two ray images; asymptotic when it stops growing with the horizon"""
    if horizon <= 0:
        raise ArgumentError(f"rays: horizon must be positive, got {horizon}")
    near = _hausdorff(nm, r1, r2, horizon, samples)
    far = _hausdorff(nm, r1, r2, 2.0 * horizon, samples)
    asymptotic = far - near <= 1e-6 * horizon
    logger.debug(f"rays: hausdorff {near:.6g} -> {far:.6g} over horizons {horizon:g}, {2 * horizon:g}")
    return asymptotic, far
