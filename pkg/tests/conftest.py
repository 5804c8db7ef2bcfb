import os
import pytest

from models.norms import EuclideanNorm, PNorm, two_disk_norm, two_disk_norm_3d, two_disk_norm_as_ellipsoids
from models.vectors import PointGrid
from services.horofunctions import beta0, phi_minus, phi_plus
from services.limits import LimitSchedule

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def two_disk():
    return two_disk_norm()


@pytest.fixture
def ellipsoids():
    return two_disk_norm_as_ellipsoids()


@pytest.fixture
def two_disk_3d():
    return two_disk_norm_3d()


@pytest.fixture
def euclidean():
    return EuclideanNorm(2)


@pytest.fixture
def p4():
    return PNorm(2, 4.0)


@pytest.fixture
def grid():
    """[-5, 5]^2 with step 0.5"""
    return PointGrid.cube()


@pytest.fixture
def coarse_grid():
    return PointGrid.cube(-3.0, 3.0, 1.0)


@pytest.fixture
def schedule():
    return LimitSchedule()


@pytest.fixture
def closed_forms():
    return {"beta0": beta0(), "phi_plus": phi_plus(), "phi_minus": phi_minus()}


@pytest.fixture
def preset():
    def path(name: str) -> str:
        return os.path.join(ROOT, "presets", f"{name}.yaml")
    return path


@pytest.fixture
def corner_bound():
    """Lower bound for Theta and Lambda along the two corner sequences at (1, 0); both tend to 2/(sqrt3 + 1)"""
    return 0.7
