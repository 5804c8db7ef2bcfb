import numpy as np
import pytest

from errors import ArgumentError, PreconditionError
from models.sequences import FlagDirectedSequence, GeneratorSequence
from services.flag_sequences import (CONVERGING, FLAG_DIRECTED, NOT_FLAG_DIRECTED, analytic_structure,
                                     estimate_directing_flag, project_to_horofunction, rigid_shift_check,
                                     same_horofunction_same_flag_check, validate_flag_directed)


def test_level_two_sequence_is_flag_directed(two_disk):
    report = validate_flag_directed(two_disk, FlagDirectedSequence.from_coordinates(["k^2", "-k"], label="below"))
    assert report.valid, report.findings
    assert report.verdict == FLAG_DIRECTED
    assert report.detected_level == 2
    np.testing.assert_allclose(report.detected_directions, [[1.0, 0.0], [0.0, -1.0]], atol=1e-12)
    assert all(check.passed for check in report.levels)


def test_level_one_sequence_with_offset(two_disk):
    seq = FlagDirectedSequence.canonical(["k"], ["2 + 1/k"], label="axis")
    report = validate_flag_directed(two_disk, seq)
    assert report.valid, report.findings
    assert report.detected_level == 1
    assert [abs(v) for v in report.offset_limits] == pytest.approx([2.0])
    assert report.asymptotic_through == pytest.approx([0.0, 2.0])


def test_failures_are_reported_not_raised(two_disk):
    # the second growth coordinate runs against its flag direction
    report = validate_flag_directed(two_disk, FlagDirectedSequence.canonical(["k^2", "-k"]))
    assert not report.valid
    assert report.verdict == NOT_FLAG_DIRECTED
    mismatch = validate_flag_directed(two_disk, FlagDirectedSequence.from_coordinates(["k", "k"], level=2))
    assert "declared level 2, detected 1" in mismatch.findings


def test_bounded_sequence(two_disk):
    seq = FlagDirectedSequence.from_coordinates(["1/k", "2"], label="bounded")
    report = validate_flag_directed(two_disk, seq)
    assert report.verdict == CONVERGING
    assert report.asymptotic_through == pytest.approx([0.0, 2.0])
    with pytest.raises(PreconditionError, match="not flag-directed: bounded"):
        project_to_horofunction(two_disk, seq)


def test_analytic_structure_orders_by_growth():
    structure = analytic_structure(FlagDirectedSequence.from_coordinates(["k + 3", "exp(k)", "1"]))
    assert structure.level == 2
    np.testing.assert_allclose(structure.directions, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], atol=1e-12)
    assert structure.plane.contains([7.0, -2.0, 1.0])


def test_estimate_flag_from_prefix(two_disk):
    prefix = np.array([[k * k, k] for k in range(1, 1025)], dtype=float)
    estimate = estimate_directing_flag(two_disk, prefix, (0.0, 0.0))
    assert estimate.verdict == FLAG_DIRECTED
    assert estimate.level == 2
    np.testing.assert_allclose(estimate.flag.directions[0], [1.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(estimate.flag.orthonormal()[1], [0.0, 1.0], atol=1e-6)


def test_estimate_converging_prefix(two_disk):
    prefix = np.array([[1.0 / k, 2.0] for k in range(1, 65)])
    estimate = estimate_directing_flag(two_disk, prefix, (0.0, 0.0))
    assert estimate.verdict == CONVERGING
    np.testing.assert_allclose(estimate.limit, [0.0, 2.0], atol=1e-6)
    with pytest.raises(ArgumentError):
        estimate_directing_flag(two_disk, prefix[:10], (0.0, 0.0))


def test_generator_sequences_validate_through_estimation(two_disk):
    report = validate_flag_directed(two_disk, GeneratorSequence(lambda k: (k * k, k), 2, label="parabola"))
    assert report.detected_level == 2


def test_same_flag_gives_same_horofunction(two_disk, coarse_grid):
    s1 = FlagDirectedSequence.from_coordinates(["k^2", "-k"])
    s2 = FlagDirectedSequence.from_coordinates(["k^2 + 3", "-k + 1/k"])
    assert same_horofunction_same_flag_check(two_disk, s1, s2, coarse_grid)
    with pytest.raises(PreconditionError, match="flags differ"):
        same_horofunction_same_flag_check(two_disk, s1, FlagDirectedSequence.from_coordinates(["k^2", "k"]),
                                          coarse_grid)


def test_rigid_shift_keeps_horofunction(two_disk, coarse_grid):
    seq = FlagDirectedSequence.canonical(["k"], ["1"], label="axis")
    assert rigid_shift_check(two_disk, seq, [["3", "0"], ["k^(1/2)", "0"]], coarse_grid)
    with pytest.raises(PreconditionError, match="leaves the top plane"):
        rigid_shift_check(two_disk, seq, [["0", "1"]], coarse_grid)
