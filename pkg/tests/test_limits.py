import numpy as np
import pytest

from errors import ArgumentError, ComputationError, LimitError
from services.limits import LimitSchedule, aitken, extrapolate_limit, richardson


def test_aitken_is_exact_on_geometric_tails():
    s = [1.0 + 0.5 ** j for j in range(3)]
    assert aitken(*s) == pytest.approx(1.0, abs=1e-15)
    # constant tail: the second difference is noise and the last iterate comes back
    assert aitken(2.0, 2.0, 2.0) == 2.0


def test_richardson_removes_polynomial_terms():
    values = [2.0 + 3.0 * h + h * h for h in (1.0, 0.5, 0.25)]
    assert richardson(values) == pytest.approx(2.0, abs=1e-13)
    batched = richardson([np.array([1.0, 2.0]) + h for h in (1.0, 0.5)])
    np.testing.assert_allclose(batched, [1.0, 2.0], atol=1e-14)
    with pytest.raises(ArgumentError):
        richardson([1.0])


def test_schedule_validation():
    with pytest.raises(ArgumentError):
        LimitSchedule(method="bogus")
    with pytest.raises(ArgumentError):
        LimitSchedule(max_steps=3)
    assert LimitSchedule().window == 3
    assert LimitSchedule(method="richardson", richardson_order=5).window == 5


@pytest.mark.parametrize("method", ["aitken", "richardson"])
def test_extrapolate_converges(method):
    schedule = LimitSchedule(method=method)
    result = extrapolate_limit(lambda j: np.array([1.0, -3.0]) + 2.0 ** -j, lambda j: 2.0 ** j, 1.0, schedule)
    np.testing.assert_allclose(result.values, [1.0, -3.0], atol=1e-8)
    assert np.all(result.steps >= 2)


def test_extrapolate_raises_with_last_iterates():
    with pytest.raises(LimitError) as e:
        extrapolate_limit(lambda j: np.array([float(j)]), lambda j: 2.0 ** j, 1.0, LimitSchedule(max_steps=20),
                          points=np.array([[0.5, 0.5]]))
    assert len(e.value.last_iterates) == 2
    assert e.value.exit_code == 3
    assert e.value.as_dict()["point"] == [0.5, 0.5]


def test_monotone_violation():
    with pytest.raises(ComputationError):
        extrapolate_limit(lambda j: np.array([float(j)]), lambda j: 2.0 ** j, 1.0, LimitSchedule(), monotone=True)
