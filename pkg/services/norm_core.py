import logging
import numpy as np
from typing import Dict, List, Optional

from errors import ArgumentError, NormValidationError
from models.norms import (EllipsoidIntersectionNorm, EuclideanNorm, FormulaNorm, PNorm, SingularNorm,
                          SqrtQuadraticPlusAbsNorm, two_disk_norm)
from models.vectors import DistanceFunction, Ray, as_point, as_points, as_vector
from schemas.reports import InvariantFinding, NormValidationReport
from services import metrics

logger = logging.getLogger("mh.norm_core")

DEFAULT_VALIDATION_SAMPLES = 10000
INVARIANT_TOL = 1e-12
CONVEXITY_SLACK = 1e-9


def norm(nm: SingularNorm, v) -> float:
    """Minkowski norm of a single vector"""
    v = as_vector(v, nm.dimension)
    return float(nm.evaluate(v))


def distance(nm: SingularNorm, x, y) -> float:
    x = as_point(x, nm.dimension, "x")
    y = as_point(y, nm.dimension, "y")
    return float(nm.evaluate(y - x))


def distance_function_eval(df: DistanceFunction, nm: SingularNorm, x) -> np.ndarray:
    """d_y(x) = |x - y| - |x0 - y|; accepts one point or an (m, n) batch"""
    if df.center.size != nm.dimension:
        raise ArgumentError(f"distance function: dimension mismatch ({df.center.size} != {nm.dimension})")
    single = np.ndim(x) == 1
    pts = as_points(x, nm.dimension, "x")
    values = nm.evaluate(pts - df.center) - nm.evaluate(df.base - df.center)
    return float(values[0]) if single else values


def build_norm(section) -> SingularNorm:
    """Construct a norm from a validated config section (schemas.config.NormSection)"""
    family = section.family
    extra = {"singular_directions": section.singular_directions or (), "label": section.label}
    if family == "two-disk":
        return two_disk_norm()
    if family == "euclidean":
        return EuclideanNorm(section.dimension, **extra)
    if family == "p-norm":
        return PNorm(section.dimension, section.p, **extra)
    if family == "sqrt-quadratic-plus-abs":
        return SqrtQuadraticPlusAbsNorm(section.dimension, section.quadratic_form, section.abs_index,
                                        section.abs_weight, **extra)
    if family == "intersection-of-ellipsoids":
        return EllipsoidIntersectionNorm(section.dimension, [(e.form, e.center) for e in section.ellipsoids], **extra)
    if family == "custom-formula":
        return FormulaNorm(section.dimension, section.formula, **extra)
    raise ArgumentError(f"norm: unknown family {family!r}")


def load_norm(section, samples: int = DEFAULT_VALIDATION_SAMPLES, seed: int = 0, validate: bool = True) -> SingularNorm:
    """Build and, unless disabled, fail fast on the sampled invariant battery"""
    nm = build_norm(section)
    if validate:
        ensure_valid(nm, samples=samples, seed=seed)
    return nm


def _random_vectors(rng, count: int, dimension: int) -> np.ndarray:
    # mix of scales so homogeneity and triangle checks see large and small magnitudes
    v = rng.standard_normal((count, dimension))
    return v * np.exp(rng.uniform(-3.0, 3.0, size=(count, 1)))


def _unit(nm, v: np.ndarray) -> np.ndarray:
    return v / nm.evaluate(v)[:, None]


def strict_convexity_margins(nm: SingularNorm, count: int, seed: int = 0) -> np.ndarray:
    """1 - ||(u + v)/2|| for random non-parallel unit pairs"""
    rng = np.random.default_rng(seed)
    u = _unit(nm, rng.standard_normal((count, nm.dimension)))
    v = _unit(nm, rng.standard_normal((count, nm.dimension)))
    cos = np.abs(np.sum(u * v, axis=1)) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
    keep = cos < 1.0 - 1e-12
    return 1.0 - nm.evaluate(0.5 * (u[keep] + v[keep]))


def validate_norm(nm: SingularNorm, samples: int = DEFAULT_VALIDATION_SAMPLES, seed: int = 0) -> NormValidationReport:
    """Sampled invariant battery: symmetry, homogeneity, triangle inequality, strict convexity"""
    rng = np.random.default_rng(seed)
    findings: List[InvariantFinding] = []
    v = _random_vectors(rng, samples, nm.dimension)
    w = _random_vectors(rng, samples, nm.dimension)
    nv, nw = nm.evaluate(v), nm.evaluate(w)

    positive = bool(np.all(nv > 0) and np.all(np.isfinite(nv)) and float(nm.evaluate(np.zeros(nm.dimension))) == 0.0)
    findings.append(InvariantFinding(name="positivity", passed=positive,
                                     statistic=float(np.min(nv)) if nv.size else 0.0, tolerance=0.0))

    sym = float(np.max(np.abs(nm.evaluate(-v) - nv) / np.maximum(nv, 1e-300)))
    findings.append(InvariantFinding(name="symmetry", passed=sym <= INVARIANT_TOL, statistic=sym, tolerance=INVARIANT_TOL))

    t = rng.uniform(-10.0, 10.0, size=samples)
    hom = float(np.max(np.abs(nm.evaluate(t[:, None] * v) - np.abs(t) * nv) / np.maximum(np.abs(t) * nv, 1e-300)))
    findings.append(InvariantFinding(name="homogeneity", passed=hom <= INVARIANT_TOL, statistic=hom,
                                     tolerance=INVARIANT_TOL))

    excess = (nm.evaluate(v + w) - nv - nw) / (nv + nw)
    tri = float(np.max(excess))
    findings.append(InvariantFinding(name="triangle", passed=tri <= INVARIANT_TOL, statistic=tri,
                                     tolerance=INVARIANT_TOL))

    margins = strict_convexity_margins(nm, samples, seed + 1)
    margin = float(np.min(margins)) if margins.size else 0.0
    findings.append(InvariantFinding(name="strict-convexity", passed=margin > 0.0, statistic=margin, tolerance=0.0))

    report = NormValidationReport(norm=nm.describe(), samples=samples, seed=seed, findings=findings,
                                  passed=all(f.passed for f in findings))
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Norm {nm.label}: validation {'passed' if report.passed else 'failed'} "
                      f"({', '.join(f.name for f in findings if not f.passed) or 'all invariants hold'})")
    return report


def ensure_valid(nm: SingularNorm, samples: int = DEFAULT_VALIDATION_SAMPLES, seed: int = 0) -> NormValidationReport:
    report = validate_norm(nm, samples, seed)
    if not report.passed:
        failed = ", ".join(f.name for f in report.findings if not f.passed)
        metrics.DOMAIN_ERRORS.labels(error="NormValidationError").inc()
        raise NormValidationError(f"norm {nm.label} violates: {failed}", report=report)
    return report


def segment(a: np.ndarray, b: np.ndarray, t) -> np.ndarray:
    """Affine segment gamma(t) = a + t (b - a), proportional to arc length in any norm"""
    t = np.asarray(t, dtype=float)
    return a + t[..., None] * (b - a)


def busemann_convexity_check(nm: SingularNorm, a1, b1, a2, b2, samples: int = 5, details: Optional[Dict] = None) -> bool:
    """Convexity of t -> d(g1(t), g2(t)) along two segments, plus the shared-origin inequality.

    With a1 == a2 the check is |g1(t) g2(t)| <= t |g1(1) g2(1)|; it always
    includes midpoint convexity of the distance profile on the sample grid.
    """
    if samples < 3:
        raise ArgumentError(f"busemann convexity: samples must be at least 3, got {samples}")
    a1, b1, a2, b2 = (as_point(p, nm.dimension, name) for p, name in ((a1, "a1"), (b1, "b1"), (a2, "a2"), (b2, "b2")))
    t = np.linspace(0.0, 1.0, samples + 2)
    profile = nm.evaluate(segment(a1, b1, t) - segment(a2, b2, t))
    chord = (1.0 - t) * profile[0] + t * profile[-1]
    worst = float(np.max(profile - chord))
    # discrete convexity: second differences nonnegative
    second = profile[:-2] - 2.0 * profile[1:-1] + profile[2:]
    worst = max(worst, float(np.max(-second)) if second.size else 0.0)
    if np.array_equal(a1, a2):
        worst = max(worst, float(np.max(profile - t * profile[-1])))
    if details is not None:
        details["worst_violation"] = worst
    return worst <= CONVEXITY_SLACK


def busemann_convexity_battery(nm: SingularNorm, pairs: int = 1000, seed: int = 0, shared_origin: bool = True) -> Dict:
    """Random segment pairs; returns the pass count and the worst violation seen"""
    rng = np.random.default_rng(seed)
    worst, passed = -np.inf, 0
    for _ in range(pairs):
        a1 = rng.uniform(-5, 5, nm.dimension)
        a2 = a1 if shared_origin else rng.uniform(-5, 5, nm.dimension)
        info: Dict = {}
        if busemann_convexity_check(nm, a1, rng.uniform(-5, 5, nm.dimension), a2,
                                    rng.uniform(-5, 5, nm.dimension), samples=7, details=info):
            passed += 1
        worst = max(worst, info["worst_violation"])
    return {"pairs": pairs, "passed": passed, "worst_violation": worst}


def ray_isometry_defect(nm: SingularNorm, r: Ray, times=(0.0, 0.5, 1.0, 3.0, 10.0)) -> float:
    """max |d(c(s), c(t)) - |s - t|| over sampled parameters"""
    times = np.asarray(times, dtype=float)
    pts = r.at(times)
    s, t = np.meshgrid(times, times, indexing="ij")
    d = nm.evaluate(pts[:, None, :] - pts[None, :, :])
    return float(np.max(np.abs(d - np.abs(s - t))))


def lipschitz_defect(nm: SingularNorm, fun, points: np.ndarray, seed: int = 0, pairs: int = 1000) -> float:
    """max over sampled pairs of |f(x) - f(y)| - ||x - y||; nonpositive for 1-Lipschitz f"""
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(points), pairs)
    j = rng.integers(0, len(points), pairs)
    values = np.asarray(fun(points))
    return float(np.max(np.abs(values[i] - values[j]) - nm.evaluate(points[i] - points[j])))
