import numpy as np
from dataclasses import dataclass
from typing import Tuple

from models.vectors import Direction, EuclideanUnitNormal

REGULAR = "regular"
SINGULAR = "singular"


@dataclass(frozen=True, eq=False)
class GaussImage:
    """Outward unit normals of the support hyperplanes at `base`.

    kind is "singleton" for regular points, "arc" for a planar corner
    (normals = (nu_min, nu_max), counterclockwise) and "sampled" for
    corners in dimension three and up.
    """

    base: Direction
    normals: Tuple[EuclideanUnitNormal, ...]
    kind: str
    width: float

    @property
    def regular(self) -> bool:
        return self.kind == "singleton"

    def arc_samples(self, count: int = 16) -> np.ndarray:
        """Normals spread over the arc; the singleton or sampled set otherwise"""
        if self.kind != "arc":
            return np.stack([n.vector for n in self.normals])
        start = np.arctan2(self.normals[0].vector[1], self.normals[0].vector[0])
        angles = start + self.width * np.linspace(0.0, 1.0, count)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
