import numpy as np
import pytest

from errors import ArgumentError, PreconditionError
from models.sequences import FlagDirectedSequence
from models.vectors import Ray
from services.horofunctions import (BUSEMANN_VERDICT, NOT_BUSEMANN, beta0, beta0_shifted, busemann_eval,
                                    busemann_horofunction, closed_form, coex_family, coex_point, difference_spread,
                                    equivalent_up_to_constant, grid_points, horoball_contains, horofunction_limit,
                                    is_busemann_function, lipschitz_check, phi_minus, rays_asymptotic, rebase)


def test_busemann_of_axis_ray_is_beta0(two_disk, coarse_grid, closed_forms):
    ray = Ray.of(two_disk, (0.0, 0.0), (1.0, 0.0))
    pts = grid_points(coarse_grid)
    np.testing.assert_allclose(busemann_eval(two_disk, ray, pts), closed_forms["beta0"].values(pts), atol=1e-6)
    assert busemann_eval(two_disk, ray, (0.0, 0.0)) == 0.0


def test_busemann_of_shifted_origin(two_disk, coarse_grid):
    f = busemann_horofunction(two_disk, Ray.of(two_disk, (0.0, 1.0), (1.0, 0.0)))
    assert difference_spread(f, beta0_shifted(1.0), coarse_grid) < 1e-6
    assert f((0.0, 1.0)) == 0.0


@pytest.mark.parametrize("growth, expected", [(["k^2", "-k"], "phi_plus"), (["k^2", "k"], "phi_minus")])
def test_sequence_limits_are_not_busemann(two_disk, coarse_grid, closed_forms, growth, expected):
    seq = FlagDirectedSequence.canonical(growth, label=expected)
    f = horofunction_limit(two_disk, seq, probe=coarse_grid)
    pts = grid_points(coarse_grid)
    np.testing.assert_allclose(f.values(pts), closed_forms[expected].values(pts), atol=1e-4)
    assert f.metadata["certificate"]["probe_points"] == len(pts)


def test_bounded_sequence_is_rejected(two_disk):
    seq = FlagDirectedSequence.from_coordinates(["1/k", "2"], label="bounded")
    with pytest.raises(PreconditionError, match="bounded"):
        horofunction_limit(two_disk, seq)


def test_busemann_triage(two_disk, coarse_grid, closed_forms):
    assert is_busemann_function(two_disk, closed_forms["beta0"], coarse_grid).verdict == BUSEMANN_VERDICT
    verdict = is_busemann_function(two_disk, closed_forms["phi_plus"], coarse_grid)
    assert verdict.verdict == NOT_BUSEMANN
    np.testing.assert_allclose(verdict.ray.direction.vector, (1.0, 0.0), atol=1e-3)
    assert verdict.describe()["ray"] is not None


def test_rebase_and_horoballs():
    f = rebase(beta0(), (0.0, 1.0))
    assert f((0.0, 1.0)) == 0.0
    assert f((0.0, 0.0)) == pytest.approx(-1.0)
    assert horoball_contains(beta0(), (1.0, 0.0))
    assert not horoball_contains(beta0(), (0.0, 2.0))
    inside = horoball_contains(beta0(), np.array([[1.0, 0.0], [0.0, 2.0]]), level=0.0)
    assert inside.tolist() == [True, False]


def test_closed_forms_are_one_lipschitz(two_disk, grid, closed_forms):
    for f in closed_forms.values():
        assert lipschitz_check(two_disk, f, grid, pairs=500) <= 1e-12


def test_coex_family(coarse_grid):
    lam, mu = coex_point(0.0)
    assert (lam, mu) == pytest.approx((1.0, 0.0))
    assert equivalent_up_to_constant(coex_family(lam, mu, eps1=-1), phi_minus(), coarse_grid)
    top = coex_family(0.0, np.sqrt(2.0) - 1.0, eps1=-1)
    assert top((0.0, 1.0)) == pytest.approx(-(np.sqrt(2.0) + 1.0))
    assert top.metadata["direction"] == pytest.approx([0.0, np.sqrt(2.0) - 1.0])
    with pytest.raises(ArgumentError):
        coex_family(1.0, 0.5)
    with pytest.raises(ArgumentError):
        coex_point(2.0)


def test_closed_form_catalogue():
    assert closed_form("beta0")((1.0, -2.0)) == pytest.approx(1.0)
    assert closed_form("x1 + 2*x2")((1.0, 1.0)) == pytest.approx(3.0)
    linear = closed_form("euclidean_linear", direction=[3.0, 4.0])
    assert linear((3.0, 4.0)) == pytest.approx(-5.0)
    with pytest.raises(ArgumentError):
        closed_form("coex_family", lam=1.0)
    with pytest.raises(ArgumentError):
        closed_form("beta0", dimension=3)
    with pytest.raises(ArgumentError):
        closed_form("x1 + y")


def test_rays_asymptotic(two_disk):
    parallel, gap = rays_asymptotic(two_disk, Ray.of(two_disk, (0.0, 0.0), (1.0, 0.0)),
                                    Ray.of(two_disk, (0.0, 1.0), (1.0, 0.0)), horizon=50.0)
    assert parallel
    assert gap == pytest.approx(np.sqrt(2.0) + 1.0, rel=1e-3)
    apart, _ = rays_asymptotic(two_disk, Ray.of(two_disk, (0.0, 0.0), (1.0, 0.0)),
                               Ray.of(two_disk, (0.0, 0.0), (0.0, 1.0)), horizon=50.0)
    assert not apart
