import numpy as np
import pytest

from errors import ConditioningError, DomainError
from models.gauss import REGULAR, SINGULAR
from models.vectors import Direction
from services.gauss_map import (angular_width, big_l, big_lambda, big_theta, classify_direction, cosine_identity_check,
                                gauss_image, inverse_gauss, lam, mean_normal, support_value, theta)

TOP = (0.0, np.sqrt(2.0) - 1.0)


def test_corner_has_quarter_arc(two_disk):
    assert angular_width(two_disk, (1.0, 0.0)) == pytest.approx(np.pi / 2, abs=1e-6)
    image = gauss_image(two_disk, Direction.unit(two_disk, (1.0, 0.0)))
    assert image.kind == "arc"
    assert not image.regular
    np.testing.assert_allclose(image.normals[0].vector, np.array([1.0, -1.0]) / np.sqrt(2.0), atol=1e-6)
    np.testing.assert_allclose(image.normals[1].vector, np.array([1.0, 1.0]) / np.sqrt(2.0), atol=1e-6)
    assert image.arc_samples(16).shape == (16, 2)


@pytest.mark.parametrize("v, expected", [
    ((1.0, 0.0), SINGULAR),
    ((-1.0, 0.0), SINGULAR),
    ((0.0, 1.0), REGULAR),
    ((1.0, 1.0), REGULAR),
    ((-2.0, 0.5), REGULAR),
])
def test_classify_direction(two_disk, v, expected):
    assert classify_direction(two_disk, Direction.along(two_disk, v)) == expected


def test_verdicts_survive_a_change_of_inner_product(two_disk):
    rng = np.random.default_rng(11)
    for _ in range(5):
        m = rng.uniform(-0.5, 0.5, size=(2, 2))
        structure = np.eye(2) + m @ m.T
        for v, expected in (((1.0, 0.0), SINGULAR), ((0.0, 1.0), REGULAR), ((1.0, 1.0), REGULAR)):
            direction = Direction.along(two_disk, v)
            assert classify_direction(two_disk, direction, structure=structure) == expected


def test_euclidean_has_singleton_images(euclidean):
    image = gauss_image(euclidean, Direction.along(euclidean, (0.6, 0.8)))
    assert image.regular
    np.testing.assert_allclose(image.normals[0].vector, [0.6, 0.8], atol=1e-6)


def test_inverse_gauss(two_disk, euclidean):
    np.testing.assert_allclose(inverse_gauss(two_disk, (0.0, 1.0)).vector, TOP, atol=1e-6)
    # every normal in the corner arc lands on the corner
    np.testing.assert_allclose(inverse_gauss(two_disk, (1.0, 0.3)).vector, (1.0, 0.0), atol=1e-6)
    np.testing.assert_allclose(inverse_gauss(euclidean, (0.6, 0.8)).vector, (0.6, 0.8), atol=1e-6)
    assert support_value(euclidean, (3.0, 4.0)) == pytest.approx(1.0, abs=1e-9)


def test_mean_normal_at_corner_is_axis(two_disk):
    np.testing.assert_allclose(mean_normal(two_disk, (1.0, 0.0)), (1.0, 0.0), atol=1e-6)


def test_theta_values(two_disk):
    assert theta((0.0, 1.0), (1.0, 2.0), (3.0, 4.0)) == pytest.approx(0.5)
    # v - theta w = (-0.5, 0) has two-disk norm 0.5
    assert big_theta(two_disk, (0.0, 1.0), (1.0, 2.0), (3.0, 4.0)) == pytest.approx(1.0)
    assert big_theta(two_disk, (0.0, 1.0), (1.0, 2.0), (1.0, 2.0)) == 0.0
    with pytest.raises(DomainError):
        theta((0.0, 1.0), (1.0, -1.0), (3.0, 4.0))


def test_cosine_identity(two_disk):
    rng = np.random.default_rng(11)
    for _ in range(50):
        nu = np.array([np.cos(rng.uniform(0, 2 * np.pi)), 0.0])
        nu[1] = np.sqrt(1.0 - nu[0] ** 2)
        v1, v2 = nu * 2.0 + rng.normal(size=2) * 0.3, nu * 3.0 + rng.normal(size=2) * 0.3
        assert cosine_identity_check(two_disk, nu, v1, v2) < 1e-9
    with pytest.raises(ConditioningError):
        cosine_identity_check(two_disk, (0.0, 1.0), (1.0, 2.0), (1.0, 2.0))


def test_lambda_values(euclidean):
    v = (np.cos(0.3), np.sin(0.3))
    assert lam(euclidean, (1.0, 0.0), v, touching=np.array([1.0, 0.0])) == pytest.approx(1.0 / np.cos(0.3))
    expected = (1.0 / np.cos(0.3) - 1.0) / np.hypot(1.0 - v[0], v[1])
    assert big_lambda(euclidean, (1.0, 0.0), v, touching=np.array([1.0, 0.0])) == pytest.approx(expected)
    assert big_lambda(euclidean, (1.0, 0.0), (1.0, 0.0), touching=np.array([1.0, 0.0])) == 0.0
    with pytest.raises(DomainError):
        lam(euclidean, (1.0, 0.0), (-1.0, 0.0), touching=np.array([1.0, 0.0]))


def _upper_arc(phi):
    """Point of the disk centered (0, -1) at angle phi from the top point, with its outer normal"""
    point = np.array([np.sqrt(2.0) * np.sin(phi), -1.0 + np.sqrt(2.0) * np.cos(phi)])
    return point, np.array([np.sin(phi), np.cos(phi)])


def test_theta_against_unit_diagonal(two_disk):
    assert float(two_disk.evaluate(np.array([1.0, 1.0]))) == pytest.approx(np.sqrt(3.0) + 1.0)
    w = Direction.unit(two_disk, (1.0, 1.0))
    assert theta((1.0, 0.0), (1.0, 0.0), w) == pytest.approx(np.sqrt(3.0) + 1.0)


def test_lambda_at_the_corner_normal(two_disk):
    nu = (np.sqrt(2.0) / 2.0, np.sqrt(2.0) / 2.0)
    touching = inverse_gauss(two_disk, nu).vector
    np.testing.assert_allclose(touching, (1.0, 0.0), atol=1e-6)
    assert lam(two_disk, nu, TOP, touching=touching) == pytest.approx(1.0 / (np.sqrt(2.0) - 1.0))
    expected = np.sqrt(2.0) / float(two_disk.evaluate(np.array([1.0, 1.0 - np.sqrt(2.0)])))
    assert big_lambda(two_disk, nu, TOP, touching=touching) == pytest.approx(expected, rel=1e-6)
    assert big_lambda(two_disk, nu, touching, touching=touching) == 0.0


def test_theta_and_lambda_vanish_at_a_regular_point(two_disk):
    thetas, lambdas = [], []
    for k in (1e2, 1e3, 1e4):
        v, _ = _upper_arc(0.5 / k)
        w, nu_w = _upper_arc(-0.3 / k)
        thetas.append(big_theta(two_disk, (0.0, 1.0), v, w))
        lambdas.append(big_lambda(two_disk, nu_w, v, touching=w))
    assert thetas == sorted(thetas, reverse=True) and thetas[-1] < 1e-3
    assert lambdas == sorted(lambdas, reverse=True) and lambdas[-1] < 1e-3


def test_l_is_continuous_at_a_regular_point(two_disk):
    at_limit = big_l(two_disk, TOP, (0.0, 1.0))
    assert at_limit == pytest.approx(0.0, abs=1e-6)
    gaps = [abs(big_l(two_disk, TOP, _upper_arc(phi)[1]) - at_limit) for phi in (1e-1, 1e-2, 1e-3)]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 5e-3
