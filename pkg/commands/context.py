import logging
import numpy as np
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from errors import ArgumentError, MinkowskiError
from models.horofunction import Horofunction
from models.norms import SingularNorm
from models.sequences import FlagDirectedSequence
from models.vectors import PointGrid, Ray
from schemas.config import RunConfig
from schemas.reports import ReportEnvelope
from services.flag_sequences import project_to_horofunction
from services.horofunctions import busemann_horofunction, closed_form
from services.limits import LimitSchedule
from services.norm_core import build_norm, load_norm

logger = logging.getLogger("mh.commands")


@dataclass
class CommandOutcome:
    status: int
    payload: Dict[str, Any] = field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None


class RunContext:
    """Validated config plus the objects every subcommand derives from it"""

    def __init__(self, config: RunConfig, out: Optional[str] = None, fmt: Optional[str] = None):
        self.config = config
        self.out = out if out is not None else config.output.directory
        self.format = fmt or config.output.format
        self._norm: Optional[SingularNorm] = None

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def tol(self) -> float:
        return self.config.equivalence_tol

    @property
    def norm(self) -> SingularNorm:
        """Fail-fast norm; the validation battery runs once per context"""
        if self._norm is None:
            v = self.config.validation
            self._norm = load_norm(self.config.norm, v.samples, v.seed, v.validate_on_load)
        return self._norm

    def raw_norm(self) -> SingularNorm:
        return build_norm(self.config.norm)

    @property
    def grid(self) -> PointGrid:
        g = self.config.grid
        return PointGrid.cube(g.low, g.high, g.step, self.config.norm.dimension)

    @property
    def schedule(self) -> LimitSchedule:
        s = self.config.schedule
        return LimitSchedule(max_steps=s.max_steps, tolerance=s.tolerance, method=s.method,
                             richardson_order=s.richardson_order, roundoff_factor=s.roundoff_factor,
                             max_roundoff=s.max_roundoff)

    def tolerances(self) -> Dict[str, float]:
        p, r = self.config.projection, self.config.regularity
        return {
            "equivalence": self.tol,
            "schedule": self.config.schedule.tolerance,
            "max_roundoff": self.config.schedule.max_roundoff,
            "projection_min": p.min_tol,
            "projection_drift": p.drift_tol,
            "regularity": r.tolerance,
        }

    def sequence(self, name: str) -> FlagDirectedSequence:
        if name not in self.config.sequences:
            raise ArgumentError(f"unknown sequence {name!r}; configured: {sorted(self.config.sequences)}")
        s = self.config.sequences[name]
        if s.coordinates is not None:
            return FlagDirectedSequence.from_coordinates(s.coordinates, base=s.base, level=s.level, label=name)
        return FlagDirectedSequence.canonical(s.growth, s.offsets or [], directions=s.flag, base=s.base, label=name)

    def horofunction(self, name: str) -> Horofunction:
        """Build the configured horofunction; sequences go through flag-directed validation"""
        if name not in self.config.horofunctions:
            raise ArgumentError(f"unknown horofunction {name!r}; configured: {sorted(self.config.horofunctions)}")
        h = self.config.horofunctions[name]
        n = self.config.norm.dimension
        if h.kind == "busemann":
            origin = np.zeros(n) if h.origin is None else h.origin
            return busemann_horofunction(self.norm, Ray.of(self.norm, origin, h.direction), self.schedule,
                                         base=h.base)
        if h.kind == "sequence":
            return project_to_horofunction(self.norm, self.sequence(h.sequence), schedule=self.schedule)
        params = {"a": h.a, "lam": h.lam, "mu": h.mu, "eps1": h.eps1, "eps2": h.eps2, "direction": h.direction,
                  "base": h.base}
        return closed_form(h.formula, n, **params)

    def envelope(self, command: str, outcome: CommandOutcome) -> ReportEnvelope:
        return ReportEnvelope(command=command, status=outcome.status, config_hash=self.config.config_hash(),
                              seed=self.seed, tolerances=self.tolerances(), payload=outcome.payload,
                              error=outcome.error)


def failure(e: MinkowskiError, **payload) -> CommandOutcome:
    return CommandOutcome(e.exit_code, payload, e.as_dict())
