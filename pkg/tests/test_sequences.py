import numpy as np
import pytest

from errors import ArgumentError
from models.sequences import AsymptoticPlane, CoordinateFunction, Flag, FlagDirectedSequence, GeneratorSequence


def test_descriptor_grammar():
    f = CoordinateFunction.parse("k^2 - 3/k + 2")
    assert f(2.0) == pytest.approx(4.5)
    assert f.limit() == np.inf
    assert f.dominant().exponent == 2.0
    assert CoordinateFunction.parse("2 - 1/k").limit() == pytest.approx(2.0)
    assert CoordinateFunction.parse(-1.5)(10.0) == -1.5
    fast = CoordinateFunction.parse("exp(k/2)")
    assert fast.exponential_rate() == pytest.approx(0.5)
    assert fast.dominant().order() > CoordinateFunction.parse("k^5").dominant().order()


@pytest.mark.parametrize("descriptor", ["sin(k)", "k*y", "log(k)", "k +"])
def test_descriptor_rejects(descriptor):
    with pytest.raises(ArgumentError):
        CoordinateFunction.parse(descriptor)


def test_log_abs_does_not_overflow():
    logs, signs = CoordinateFunction.parse("-exp(1000*k)").log_abs([10.0])
    assert logs[0] == pytest.approx(1e4)
    assert signs[0] == -1.0


def test_flag_construction():
    with pytest.raises(ArgumentError):
        Flag.of((0.0, 0.0), [(1.0, 0.0), (2.0, 0.0)])
    with pytest.raises(ArgumentError):
        Flag.of((0.0, 0.0), [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    a = Flag.of((0.0, 0.0), [(2.0, 0.0), (1.0, 1.0)])
    assert a.level == 2
    assert a.equals(Flag.of((0.0, 0.0), [(1.0, 0.0), (0.0, 3.0)]))
    assert not a.equals(Flag.of((0.0, 0.0), [(1.0, 0.0), (0.0, -1.0)]))
    assert not a.equals(Flag.of((0.0, 1.0), [(1.0, 0.0), (0.0, 1.0)]))
    np.testing.assert_allclose(Flag.of((0.0, 0.0, 0.0), [(1.0, 1.0, 0.0)]).complement() @ [1.0, 1.0, 0.0], 0.0,
                               atol=1e-12)


def test_canonical_points():
    seq = FlagDirectedSequence.canonical(["k^2", "k"])
    np.testing.assert_allclose(seq.point(3.0), [9.0, 3.0])
    np.testing.assert_allclose(seq.points([1.0, 2.0]), [[1.0, 1.0], [4.0, 2.0]])
    tilted = FlagDirectedSequence.canonical(["k"], ["1"], directions=[(1.0, 1.0)], base=(0.0, 1.0))
    u = np.array([1.0, 1.0]) / np.sqrt(2.0)
    assert (tilted.point(5.0) - tilted.base) @ u == pytest.approx(5.0)
    assert tilted.describe()["coordinates"] == ["k", "1"]


def test_shifted_adds_ambient_offset():
    seq = FlagDirectedSequence.canonical(["k"], ["1"])
    moved = seq.shifted(["3", "k^(1/2)"])
    np.testing.assert_allclose(moved.point(4.0), seq.point(4.0) + [3.0, 2.0])
    assert moved.level == seq.level
    with pytest.raises(ArgumentError):
        seq.shifted(["1"])


def test_exponential_sequences_step_linearly():
    seq = FlagDirectedSequence.from_coordinates(["exp(k)", "0"])
    assert seq.index(0) == pytest.approx(np.log(2.0))
    assert seq.index(3) == pytest.approx(4.0 * np.log(2.0))
    assert FlagDirectedSequence.from_coordinates(["k", "0"]).index(3) == 8.0


def test_generator_sequence():
    seq = GeneratorSequence(lambda k: (k, np.sqrt(k)), 2, label="sqrt")
    np.testing.assert_allclose(seq.point(4.0), [4.0, 2.0])
    np.testing.assert_allclose(seq.base, [0.0, 0.0])


def test_asymptotic_plane():
    plane = AsymptoticPlane(np.array([0.0, 1.0, 0.0]), (np.array([1.0, 0.0, 0.0]),))
    assert plane.contains([5.0, 1.0, 0.0])
    assert not plane.contains([5.0, 1.1, 0.0])
    assert plane.equals(AsymptoticPlane(np.array([3.0, 1.0, 0.0]), (np.array([-2.0, 0.0, 0.0]),)))
