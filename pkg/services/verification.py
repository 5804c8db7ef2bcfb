import logging
import time
import numpy as np
from colorama import Fore, Style
from functools import wraps
from typing import Callable, Dict, List, Optional, Sequence

from errors import ConditioningError, MinkowskiError
from models.horofunction import CoarsePoint, Horofunction
from models.norms import EuclideanNorm, FormulaNorm, PNorm, SingularNorm, built_in_norms
from models.sequences import FlagDirectedSequence
from models.vectors import PointGrid, Ray, euclidean_angle
from schemas.reports import CriterionRecord
from services.boundary import (DEFAULT_RADII, classify_space_regularity, explore_fiber, project_with_evidence,
                               projection_continuity_probe)
from services.flag_sequences import project_to_horofunction, rigid_shift_check, same_horofunction_same_flag_check
from services.gauss_map import big_lambda, big_theta, cosine_identity_check, inverse_gauss, mean_normal
from services.horofunctions import (BUSEMANN_VERDICT, NOT_BUSEMANN, beta0, beta0_shifted, busemann_horofunction,
                                    coex_family, coex_point, grid_points, is_busemann_function, phi_minus, phi_plus)
from services.limits import LimitSchedule
from services.norm_core import busemann_convexity_battery, busemann_convexity_check
from services.optimize import sphere_directions

logger = logging.getLogger("mh.verification")

OK = "OK"
ERROR = "ERROR"
NOT_APPLICABLE = "N/A"

CONCAVE_GAUGE = "(sqrt(Abs(y1))+sqrt(Abs(y2)))**2"
CORNER_THETA_BOUND = 0.7
APPROACH_DELTAS = tuple(sign * d for d in (0.3, 0.6, 0.9, 1.2, 1.5) for sign in (1.0, -1.0))
TAIL_KS = (1e2, 1e3, 1e4)
CORNER_KS = np.geomspace(1e2, 1e4, 9)
COEX_STEPS = 11
WELL_CONDITIONED = 1e-3
SMOOTH_FAMILIES = ("euclidean", "p-norm")


class CriterionResult:
    """Outcome of one acceptance criterion"""

    def __init__(self, criterion: str):
        self.criterion = criterion
        self.start_time = time.time()
        self.status = ERROR
        self.error_message = None
        self.duration_ms = 0
        self.data = {}

    def _close(self, status: str, error_message: Optional[str], data: Dict) -> CriterionRecord:
        self.status = status
        self.error_message = error_message
        self.duration_ms = int((time.time() - self.start_time) * 1000)
        self.data.update(data)
        return self.as_record()

    def success(self, **kwargs) -> CriterionRecord:
        return self._close(OK, None, kwargs)

    def fail(self, error_message: str, **kwargs) -> CriterionRecord:
        return self._close(ERROR, error_message, kwargs)

    def not_applicable(self, reason: str, **kwargs) -> CriterionRecord:
        return self._close(NOT_APPLICABLE, reason, kwargs)

    def check(self, failures: List[str], **kwargs) -> CriterionRecord:
        if failures:
            return self.fail("; ".join(failures), **kwargs)
        return self.success(**kwargs)

    def as_record(self) -> CriterionRecord:
        return CriterionRecord(criterion=self.criterion, status=self.status, error_message=self.error_message,
                               duration_ms=self.duration_ms, data=_plain(self.data))


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def criterion(title: str) -> Callable:
    """Wrap a criterion so that any domain error becomes a failed record"""
    def decorate(method):
        @wraps(method)
        def wrapped(self, *args, **kwargs) -> CriterionRecord:
            result = CriterionResult(title)
            try:
                return method(self, result, *args, **kwargs)
            except MinkowskiError as e:
                logger.warning(f"{title}: {type(e).__name__}: {e.detail}")
                return result.fail(f"{type(e).__name__}: {e.detail}")
        wrapped.title = title
        return wrapped
    return decorate


def random_flag(rng: np.random.Generator, dimension: int, level: int) -> np.ndarray:
    """Random independent flag directions, kept away from degeneracy"""
    while True:
        directions = rng.standard_normal((level, dimension))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        if np.linalg.det(directions @ directions.T) > 0.1:
            return directions


def _growth(rng: np.random.Generator, level: int) -> List[str]:
    exponents = [2, 1] if level == 2 else [int(rng.integers(1, 3))]
    return [f"{rng.uniform(0.5, 2.0):.4f}*k^{e}" for e in exponents]


def _offset_constants(rng: np.random.Generator, count: int) -> np.ndarray:
    # bounded away from zero so the transversal angle shrinks monotonically
    return rng.choice([-1.0, 1.0], count) * rng.uniform(0.5, 2.0, count)


def random_same_flag_pair(rng: np.random.Generator, dimension: int):
    """Two canonical sequences sharing the flag and the asymptotic plane but not the growth rates"""
    level = int(rng.integers(1, min(2, dimension) + 1))
    directions = random_flag(rng, dimension, level)
    constants = _offset_constants(rng, dimension - level)
    offsets1 = [f"{c:.4f}" for c in constants]
    offsets2 = [f"{c:.4f} + {rng.uniform(-1.0, 1.0):.4f}/k" for c in constants]
    s1 = FlagDirectedSequence.canonical(_growth(rng, level), offsets1, directions, label="pair-a")
    s2 = FlagDirectedSequence.canonical(_growth(rng, level), offsets2, directions, label="pair-b")
    return s1, s2


def random_shift_battery(rng: np.random.Generator, dimension: int, shifts: int = 3):
    """A canonical sequence with constant shifts inside the top plane of its flag"""
    level = int(rng.integers(1, min(2, dimension) + 1))
    directions = random_flag(rng, dimension, level)
    offsets = [f"{c:.4f}" for c in _offset_constants(rng, dimension - level)]
    seq = FlagDirectedSequence.canonical(_growth(rng, level), offsets, directions, label="shifted")
    moves = [(rng.uniform(-3.0, 3.0, level) @ directions).tolist() for _ in range(shifts)]
    return seq, moves


def cosine_battery(nm: SingularNorm, pairs: int = 1000, seed: int = 0) -> Dict:
    """Worst residual of the cosine identity over random valid (nu, v1, v2)"""
    rng = np.random.default_rng(seed)
    worst, used, skipped = 0.0, 0, 0
    while used < pairs:
        nu = rng.standard_normal(nm.dimension)
        nu /= np.linalg.norm(nu)
        raw = rng.standard_normal((2, nm.dimension))
        raw[:, :] = np.where((raw @ nu)[:, None] > 0, raw, -raw)
        v1, v2 = raw / nm.evaluate(raw)[:, None]
        # valid pairs: both conditioning ratios at least WELL_CONDITIONED
        if float(nu @ v2) < WELL_CONDITIONED * np.linalg.norm(v2) or \
                np.linalg.norm(v2 - v1) < WELL_CONDITIONED * np.linalg.norm(v2):
            skipped += 1
            continue
        try:
            worst = max(worst, cosine_identity_check(nm, nu, v1, v2))
            used += 1
        except ConditioningError:
            skipped += 1
    return {"pairs": used, "skipped": skipped, "worst_residual": worst}


def _plane_point(nm: SingularNorm, angle: float) -> np.ndarray:
    raw = np.zeros(nm.dimension)
    raw[:2] = np.cos(angle), np.sin(angle)
    return raw / float(nm.evaluate(raw))


class VerificationSuite:
    """The acceptance battery; every criterion returns a CriterionRecord"""

    def __init__(self, nm: SingularNorm, grid: Optional[PointGrid] = None, schedule: Optional[LimitSchedule] = None,
                 tol: float = 1e-6, seed: int = 0, radii: Sequence[float] = DEFAULT_RADII,
                 angular_samples: Optional[int] = None, resolution: int = 3600, two_disk: Optional[bool] = None,
                 quick: bool = False):
        self.nm = nm
        self.grid = grid or PointGrid.cube(dimension=nm.dimension)
        self.schedule = schedule or LimitSchedule()
        self.tol = tol
        self.seed = seed
        self.radii = tuple(radii)
        self.samples = angular_samples
        self.resolution = resolution
        self.two_disk = nm.label == "two-disk" if two_disk is None else two_disk
        self.quick = quick
        self.cache: Dict[str, Horofunction] = {}

    def tolerance(self, base: float) -> float:
        """Criterion tolerances scale with the run tolerance; 1e-6 leaves them as stated"""
        return base * self.tol / 1e-6

    def tolerances(self) -> Dict[str, float]:
        return {
            "busemann_closed_form": self.tolerance(1e-6),
            "sequence_closed_form": self.tolerance(1e-4),
            "fiber_angle": self.tolerance(1e-6),
            "fiber_spread": 0.5,
            "regular_width": self.tolerance(1e-6),
            "theta_lambda_tail": self.tolerance(1e-3),
            "cosine_residual": self.tolerance(1e-9),
            "ball_minimum": self.tolerance(1e-6),
            "convexity_slack": self.tolerance(1e-9),
            "flag_equivalence": self.tolerance(1e-4),
            "round_trip_angle": self.tolerance(1e-6),
        }

    def _count(self, full: int, reduced: int) -> int:
        return reduced if self.quick else full

    def _horofunction(self, key: str, build: Callable[[], Horofunction]) -> Horofunction:
        if key not in self.cache:
            self.cache[key] = build()
        return self.cache[key]

    def _max_difference(self, f: Horofunction, g: Horofunction) -> float:
        pts = grid_points(self.grid)
        return float(np.max(np.abs(f.values(pts) - g.values(pts))))

    def _ray_busemann(self) -> Horofunction:
        ray = Ray.of(self.nm, np.zeros(2), (1.0, 0.0))
        return self._horofunction("busemann(1,0)", lambda: busemann_horofunction(self.nm, ray, self.schedule))

    def _sequence(self, key: str, coordinates: List[str]) -> Horofunction:
        seq = FlagDirectedSequence.from_coordinates(coordinates, label=key)
        return self._horofunction(key, lambda: project_to_horofunction(self.nm, seq, schedule=self.schedule))

    @criterion("1 busemann closed form")
    def busemann_closed_form(self, result: CriterionResult) -> CriterionRecord:
        if not self.two_disk:
            return result.not_applicable("closed form beta0 belongs to the two-disk norm")
        f = self._ray_busemann()
        error = self._max_difference(f, beta0())
        limit = self.tolerance(1e-6)
        failures = [] if error <= limit else [f"max |beta - beta0| = {error:.3g} exceeds {limit:.3g}"]
        return result.check(failures, max_error=error)

    @criterion("2 non-busemann horofunctions")
    def non_busemann(self, result: CriterionResult) -> CriterionRecord:
        if not self.two_disk:
            return result.not_applicable("phi_plus and phi_minus belong to the two-disk norm")
        limit = self.tolerance(1e-4)
        failures, data = [], {}
        for key, coordinates, closed in (("(k^2,-k)", ["k^2", "-k"], phi_plus()),
                                         ("(k^2,k)", ["k^2", "k"], phi_minus())):
            f = self._sequence(key, coordinates)
            error = self._max_difference(f, closed)
            verdict = is_busemann_function(self.nm, f, self.grid, schedule=self.schedule).verdict
            data[key] = {"max_error": error, "busemann": verdict}
            if error > limit:
                failures.append(f"{key}: max error {error:.3g} against {closed.label} exceeds {limit:.3g}")
            if verdict != NOT_BUSEMANN:
                failures.append(f"{key}: triage says {verdict}, expected {NOT_BUSEMANN}")
        verdict = is_busemann_function(self.nm, beta0(), self.grid, schedule=self.schedule).verdict
        data["beta0"] = {"busemann": verdict}
        if verdict != BUSEMANN_VERDICT:
            failures.append(f"beta0: triage says {verdict}, expected {BUSEMANN_VERDICT}")
        return result.check(failures, **data)

    def _fiber_candidates(self) -> List[CoarsePoint]:
        return [CoarsePoint.of(f) for f in (beta0(), beta0_shifted(1.0), beta0_shifted(-2.0), phi_plus(),
                                             phi_minus())]

    @criterion("3 fiber over the singular direction")
    def fiber_structure(self, result: CriterionResult) -> CriterionRecord:
        if not self.two_disk:
            return result.not_applicable("the fiber candidates belong to the two-disk norm")
        candidates = self._fiber_candidates()
        report = explore_fiber(self.nm, (1.0, 0.0), candidates, self.grid, radii=self.radii, samples=self.samples,
                               schedule=self.schedule)
        failures = []
        worst = max((r.angular_error or 0.0) for r in report.records)
        if report.excluded:
            failures.append(f"excluded candidates: {report.excluded}")
        if worst > self.tolerance(1e-6):
            failures.append(f"worst projection error {worst:.3g}")
        if report.classes != 5:
            failures.append(f"{report.classes} equivalence classes, expected 5")
        if report.min_spread is None or report.min_spread < 0.5:
            failures.append(f"minimum spread {report.min_spread} below 0.5")
        expected = [BUSEMANN_VERDICT] * 3 + [NOT_BUSEMANN] * 2
        verdicts = [r.busemann for r in report.records]
        if verdicts != expected:
            failures.append(f"triage verdicts {verdicts}, expected {expected}")
        return result.check(failures, classes=report.classes, min_spread=report.min_spread, verdicts=verdicts)

    @criterion("4 regularity sweep")
    def regularity(self, result: CriterionResult) -> CriterionRecord:
        failures, data = [], {}
        report = classify_space_regularity(self.nm, self.resolution, self.tolerance(1e-6), seed=self.seed)
        data[self.nm.label] = report.singular_directions
        found = [np.asarray(d) for d in report.singular_directions]
        expected = [np.asarray(d) for d in self.nm.declared_singular_directions]
        if self.nm.dimension == 2:
            # the planar sweep itself has to hit every declared corner
            missing = [d.tolist() for d in expected
                       if min((euclidean_angle(d, e) for e in found), default=np.pi) >= 1e-6]
        else:
            missing = report.declared_unconfirmed
        if missing:
            failures.append(f"{self.nm.label}: declared singular directions {missing} not found")
        # exact singular set known only for the two-disk norm and the smooth families
        exact = self.two_disk or self.nm.family in SMOOTH_FAMILIES
        if exact and len(found) != len(expected):
            failures.append(f"{self.nm.label}: singular set {report.singular_directions}, "
                            f"expected {[d.tolist() for d in expected]}")
        if self.nm.dimension == 2:
            for smooth in (EuclideanNorm(2), PNorm(2, 4.0)):
                other = classify_space_regularity(smooth, self.resolution, self.tolerance(1e-6))
                data[smooth.label] = other.singular_directions
                if other.singular_directions:
                    failures.append(f"{smooth.label}: unexpected singular directions {other.singular_directions}")
        return result.check(failures, **data)

    def _approach_tails(self) -> Dict[str, float]:
        phi0 = np.pi / 2
        nu0 = mean_normal(self.nm, _plane_point(self.nm, phi0))
        theta_tail, lambda_tail = 0.0, 0.0
        for delta in APPROACH_DELTAS:
            thetas, lambdas = [], []
            for k in TAIL_KS:
                v = _plane_point(self.nm, phi0 + delta / k)
                w = _plane_point(self.nm, phi0 - 0.5 * delta / k)
                nu_w = mean_normal(self.nm, w)
                thetas.append(big_theta(self.nm, nu0, v, w))
                lambdas.append(big_lambda(self.nm, nu_w, v, touching=w))
            theta_tail = max(theta_tail, thetas[-1])
            lambda_tail = max(lambda_tail, lambdas[-1])
        return {"theta_tail": theta_tail, "lambda_tail": lambda_tail}

    def _corner_minima(self) -> Dict[str, float]:
        v0 = np.array([1.0, 0.0])
        nu_theta = np.array([1.0, 1.0]) / np.sqrt(2.0)
        nu_lambda = np.array([1.0, -1.0]) / np.sqrt(2.0)
        touching_lower = inverse_gauss(self.nm, nu_theta).vector
        touching_upper = inverse_gauss(self.nm, nu_lambda).vector
        thetas, lower, upper = [], [], []
        for k in CORNER_KS:
            s = 1.0 / k
            v_lower = np.array([np.sqrt(2.0) * np.cos(np.pi / 4 + s), 1.0 - np.sqrt(2.0) * np.sin(np.pi / 4 + s)])
            v_upper = np.array([np.sqrt(2.0) * np.cos(np.pi / 4 + s), -1.0 + np.sqrt(2.0) * np.sin(np.pi / 4 + s)])
            thetas.append(big_theta(self.nm, nu_theta, v_lower, v0))
            lower.append(big_lambda(self.nm, nu_theta, v_lower, touching=touching_lower))
            upper.append(big_lambda(self.nm, nu_lambda, v_upper, touching=touching_upper))
        return {"theta_min": min(thetas), "lambda_lower_min": min(lower), "lambda_upper_min": min(upper),
                "lambda_min": min(lower + upper)}

    @criterion("5 theta and lambda limits")
    def theta_lambda(self, result: CriterionResult) -> CriterionRecord:
        limit = self.tolerance(1e-3)
        data = self._approach_tails()
        failures = [f"{name} {value:.3g} above {limit:.3g} at k = 1e4" for name, value in data.items() if value > limit]
        if self.two_disk:
            corner = self._corner_minima()
            data.update(corner)
            failures += [f"{name} {value:.6g} not above {CORNER_THETA_BOUND}" for name, value in corner.items()
                         if value <= CORNER_THETA_BOUND]
        else:
            data["corner"] = NOT_APPLICABLE
        return result.check(failures, **data)

    @criterion("6 cosine identity")
    def cosine_identity(self, result: CriterionResult) -> CriterionRecord:
        limit = self.tolerance(1e-9)
        pairs = self._count(1000, 100)
        failures, data = [], {}
        norms = built_in_norms(self.nm.dimension)
        if all(n.label != self.nm.label for n in norms):
            norms.append(self.nm)
        for nm in norms:
            battery = cosine_battery(nm, pairs, self.seed)
            data[nm.label] = battery
            if battery["worst_residual"] > limit:
                failures.append(f"{nm.label}: residual {battery['worst_residual']:.3g} exceeds {limit:.3g}")
        return result.check(failures, **data)

    def _produced(self) -> List[Horofunction]:
        if self.two_disk:
            return [self._ray_busemann(), self._sequence("(k^2,-k)", ["k^2", "-k"]),
                    self._sequence("(k^2,k)", ["k^2", "k"])] + [c.representative for c in self._fiber_candidates()]
        rng = np.random.default_rng(self.seed)
        directions = sphere_directions(self.nm.dimension, 3, self.seed)
        origins = rng.uniform(-2.0, 2.0, (3, self.nm.dimension))
        return [busemann_horofunction(self.nm, Ray.of(self.nm, o, d), self.schedule)
                for o, d in zip(origins, directions)]

    @criterion("7 ball-minimum law")
    def ball_minimum(self, result: CriterionResult) -> CriterionRecord:
        limit = self.tolerance(1e-6)
        failures, data = [], {}
        for f in self._produced():
            evidence = project_with_evidence(self.nm, f, self.radii, self.samples, min_tol=limit)
            data[f.label] = [float(m.value) for m in evidence.minima]
        return result.check(failures, minima=data)

    @criterion("8 busemann convexity")
    def convexity(self, result: CriterionResult) -> CriterionRecord:
        pairs = self._count(1000, 100)
        failures, data = [], {}
        norms = built_in_norms(self.nm.dimension)
        if all(n.label != self.nm.label for n in norms):
            norms.append(self.nm)
        for nm in norms:
            battery = busemann_convexity_battery(nm, pairs, self.seed)
            data[nm.label] = battery
            if battery["worst_violation"] > self.tolerance(1e-9):
                failures.append(f"{nm.label}: worst violation {battery['worst_violation']:.3g}")
        concave = FormulaNorm(2, CONCAVE_GAUGE, label="concave-gauge")
        rejected = not busemann_convexity_check(concave, (0, 0), (1, 1), (0, 1), (2, 1))
        data["concave_gauge_rejected"] = rejected
        if not rejected:
            failures.append("the concave gauge passed the convexity check")
        return result.check(failures, **data)

    @criterion("9 same-flag and rigid-shift invariance")
    def flag_invariance(self, result: CriterionResult) -> CriterionRecord:
        rng = np.random.default_rng(self.seed)
        limit = self.tolerance(1e-4)
        count = self._count(20, 3)
        failures = []
        for n in range(count):
            s1, s2 = random_same_flag_pair(rng, self.nm.dimension)
            if not same_horofunction_same_flag_check(self.nm, s1, s2, self.grid, limit, self.schedule):
                failures.append(f"same-flag pair {n} ({s1.describe()['coordinates']}, "
                                f"{s2.describe()['coordinates']}) not equivalent")
        for n in range(count):
            seq, moves = random_shift_battery(rng, self.nm.dimension)
            if not rigid_shift_check(self.nm, seq, [tuple(m) for m in moves], self.grid, limit, self.schedule):
                failures.append(f"shift battery {n} ({seq.describe()['coordinates']}) moved the horofunction")
        return result.check(failures, pairs=count, batteries=count)

    @criterion("10 round trip and continuity")
    def round_trip(self, result: CriterionResult) -> CriterionRecord:
        limit = self.tolerance(1e-6)
        count = self._count(100, 5)
        failures, data = [], {}
        worst = 0.0
        for u in sphere_directions(self.nm.dimension, count, self.seed):
            ray = Ray.of(self.nm, np.zeros(self.nm.dimension), u)
            f = busemann_horofunction(self.nm, ray, self.schedule)
            weak = project_with_evidence(self.nm, f, self.radii, self.samples).weak_point
            worst = max(worst, weak.direction.angle_to(ray.direction))
        data["worst_round_trip_angle"] = worst
        if worst > limit:
            failures.append(f"round trip error {worst:.3g} exceeds {limit:.3g}")
        if self.two_disk:
            steps = 0.4 * 0.5 ** np.arange(COEX_STEPS)
            # eps2 = -1: directions (lam, mu) run along the lower arc and the family tends to phi_plus
            family = [coex_family(*coex_point(s, -1), eps1=-1, eps2=-1) for s in steps]
            probe = projection_continuity_probe(self.nm, family, phi_plus(), self.grid, self.radii, self.samples)
            data["coex_angles"] = probe.angular_distances
            data["coex_sup_distances"] = probe.sup_distances
            if not probe.converges:
                failures.append(f"coex projections do not converge to (1, 0): {probe.angular_distances}")
        else:
            data["coex"] = NOT_APPLICABLE
        return result.check(failures, **data)

    def criteria(self) -> List[Callable[[], CriterionRecord]]:
        return [self.busemann_closed_form, self.non_busemann, self.fiber_structure, self.regularity,
                self.theta_lambda, self.cosine_identity, self.ball_minimum, self.convexity, self.flag_invariance,
                self.round_trip]

    def run(self, only: Optional[Sequence[int]] = None) -> List[CriterionRecord]:
        records = []
        for number, method in enumerate(self.criteria(), start=1):
            if only and number not in only:
                continue
            logger.info(f"Criterion {method.title}: running")
            records.append(method())
        return records


def passed(records: Sequence[CriterionRecord]) -> bool:
    return all(r.status != ERROR for r in records)


def log_result(record: CriterionRecord) -> None:
    """One colored line per criterion"""
    color = {OK: Fore.GREEN, NOT_APPLICABLE: Fore.YELLOW}.get(record.status, Fore.RED)
    print(f"{record.criterion} - {color}{record.status}{Style.RESET_ALL} ({record.duration_ms}ms)")
    if record.error_message and record.status == ERROR:
        print(f"  {Fore.YELLOW}Error: {record.error_message}{Style.RESET_ALL}")


def print_summary(records: Sequence[CriterionRecord]) -> None:
    ok = sum(r.status == OK for r in records)
    skipped = sum(r.status == NOT_APPLICABLE for r in records)
    failed = len(records) - ok - skipped
    print(f"\n{Fore.CYAN}=== Verification Summary ==={Style.RESET_ALL}")
    print(f"Total criteria: {len(records)}")
    print(f"Passed: {Fore.GREEN}{ok}{Style.RESET_ALL}")
    print(f"Not applicable: {Fore.YELLOW}{skipped}{Style.RESET_ALL}")
    print(f"Failed: {Fore.RED if failed > 0 else ''}{failed}{Style.RESET_ALL}")
