import numpy as np
import pytest

from errors import NotAHorofunctionError
from models.gauss import REGULAR, SINGULAR
from models.horofunction import CoarsePoint
from models.norms import PNorm
from models.vectors import Ray
from services.boundary import (classify_space_regularity, explore_fiber, project_coarse_to_weak,
                               project_with_evidence, projection_continuity_probe, weak_point_of_ray)
from services.horofunctions import (BUSEMANN_VERDICT, NOT_BUSEMANN, beta0, beta0_shifted, closed_form, coex_family,
                                    coex_point, phi_minus, phi_plus, rebase)

TOP = (0.0, np.sqrt(2.0) - 1.0)


@pytest.mark.parametrize("f", [beta0(), phi_plus(), phi_minus(), beta0_shifted(1.0)], ids=lambda f: f.label)
def test_corner_horofunctions_project_to_axis(two_disk, f):
    np.testing.assert_allclose(project_coarse_to_weak(two_disk, f).direction.vector, (1.0, 0.0), atol=1e-6)


def test_projection_evidence(two_disk):
    evidence = project_with_evidence(two_disk, coex_family(*TOP, eps1=-1))
    np.testing.assert_allclose(evidence.weak_point.direction.vector, TOP, atol=1e-5)
    assert [m.radius for m in evidence.minima] == [1.0, 2.0, 5.0, 10.0]
    for m in evidence.minima:
        assert m.value == pytest.approx(-m.radius, abs=1e-6)
    assert evidence.drift < 1e-4


def test_projection_rejects_non_horofunctions(two_disk):
    with pytest.raises(NotAHorofunctionError):
        project_coarse_to_weak(two_disk, closed_form("2*x1"))


def test_ray_weak_point(two_disk):
    r = Ray.of(two_disk, (3.0, 3.0), (0.0, 2.0))
    np.testing.assert_allclose(weak_point_of_ray(r).direction.vector, TOP, atol=1e-12)


def test_fiber_over_corner(two_disk, coarse_grid):
    candidates = [CoarsePoint.of(beta0(), "beta0"), CoarsePoint.of(beta0_shifted(1.0), "beta0_up"),
                  CoarsePoint.of(phi_plus(), "phi_plus"), CoarsePoint.of(phi_minus(), "phi_minus"),
                  CoarsePoint.of(coex_family(*TOP, eps1=-1), "coex_top")]
    report = explore_fiber(two_disk, (1.0, 0.0), candidates, coarse_grid)
    assert report.excluded == ["coex_top"]
    assert report.classes == 4
    assert report.min_spread >= 0.5
    verdicts = {r.id: r.busemann for r in report.records if not r.excluded}
    assert verdicts == {"beta0": BUSEMANN_VERDICT, "beta0_up": BUSEMANN_VERDICT,
                        "phi_plus": NOT_BUSEMANN, "phi_minus": NOT_BUSEMANN}


def test_continuity_toward_the_corner(two_disk, coarse_grid):
    approach = [coex_family(*coex_point(s), eps1=-1) for s in (0.4, 0.1, 0.01, 0.0)]
    report = projection_continuity_probe(two_disk, approach, phi_minus(), coarse_grid)
    np.testing.assert_allclose(report.target, (1.0, 0.0), atol=1e-6)
    assert report.converges
    assert report.sup_distances[-1] == pytest.approx(0.0, abs=1e-9)


def test_regularity_of_planar_norms(two_disk, euclidean, p4):
    report = classify_space_regularity(two_disk, angular_resolution=720)
    assert report.verdict == SINGULAR
    found = sorted(report.singular_directions)
    np.testing.assert_allclose(found, [[-1.0, 0.0], [1.0, 0.0]], atol=1e-6)
    for nm in (euclidean, p4):
        smooth = classify_space_regularity(nm, angular_resolution=720)
        assert smooth.verdict == REGULAR
        assert smooth.singular_directions == []


@pytest.mark.slow
def test_regularity_of_three_dimensional_norm(two_disk_3d):
    report = classify_space_regularity(two_disk_3d, angular_resolution=512)
    assert report.verdict == SINGULAR
    # every corner sits on the circle y2 = 0
    assert all(abs(d[1]) < 1e-3 for d in report.singular_directions)


@pytest.mark.parametrize("f, expected", [(beta0(), (1.0, 0.0)), (phi_plus(), (1.0, 0.0)),
                                         (coex_family(*TOP, eps1=-1), TOP)], ids=["beta0", "phi_plus", "coex_top"])
def test_projection_ignores_the_base_point(two_disk, f, expected):
    moved = rebase(f, (2.0, -1.0))
    np.testing.assert_allclose(moved.base, (2.0, -1.0))
    direction = project_coarse_to_weak(two_disk, moved).direction.vector
    np.testing.assert_allclose(direction, project_coarse_to_weak(two_disk, f).direction.vector, atol=1e-6)
    np.testing.assert_allclose(direction, expected, atol=1e-5)


def test_declared_directions_stay_out_of_the_sweep(two_disk):
    report = classify_space_regularity(two_disk, angular_resolution=720)
    np.testing.assert_allclose(sorted(report.declared_confirmed), [[-1.0, 0.0], [1.0, 0.0]], atol=1e-12)
    assert report.declared_unconfirmed == []
    smooth = classify_space_regularity(PNorm(2, 4.0, singular_directions=[(0.0, 1.0)]), angular_resolution=720)
    assert smooth.verdict == REGULAR
    assert smooth.singular_directions == []
    assert smooth.declared_unconfirmed == [[0.0, 1.0]]


def test_coex_family_below_the_axis_tends_to_phi_plus(two_disk, coarse_grid):
    approach = [coex_family(*coex_point(s, -1), eps1=-1, eps2=-1) for s in (0.4, 0.1, 0.01, 0.0)]
    report = projection_continuity_probe(two_disk, approach, phi_plus(), coarse_grid)
    np.testing.assert_allclose(report.target, (1.0, 0.0), atol=1e-6)
    assert report.converges
    assert report.sup_distances == sorted(report.sup_distances, reverse=True)
    assert report.sup_distances[-1] == pytest.approx(0.0, abs=1e-9)
