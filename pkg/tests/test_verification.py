import numpy as np
import pytest

from errors import PreconditionError
from models.norms import PNorm
from models.vectors import PointGrid
from services.verification import (ERROR, NOT_APPLICABLE, OK, CriterionResult, VerificationSuite, cosine_battery,
                                   criterion, passed, print_summary, random_flag, random_same_flag_pair)


@pytest.fixture
def suite(two_disk):
    return VerificationSuite(two_disk, grid=PointGrid.cube(-3.0, 3.0, 1.0), resolution=720, quick=True)


def test_criterion_records():
    result = CriterionResult("demo")
    record = result.check([], value=np.float64(1.5), points=np.array([1.0, 2.0]))
    assert record.status == OK
    assert record.data == {"value": 1.5, "points": [1.0, 2.0]}
    assert CriterionResult("demo").check(["broken"]).error_message == "broken"


def test_domain_errors_become_failures():
    class Sample:
        @criterion("sample")
        def run(self, result):
            raise PreconditionError("no flag")

    record = Sample().run()
    assert record.status == ERROR
    assert "PreconditionError: no flag" in record.error_message
    assert Sample.run.title == "sample"


def test_busemann_closed_form_passes(suite):
    records = suite.run(only=[1])
    assert [r.status for r in records] == [OK]
    assert records[0].data["max_error"] <= 1e-6


def test_cosine_and_regularity_pass(suite):
    records = suite.run(only=[4, 6])
    assert [r.status for r in records] == [OK, OK]
    assert passed(records)


def test_two_disk_criteria_are_skipped_elsewhere(euclidean):
    records = VerificationSuite(euclidean, grid=PointGrid.cube(-3.0, 3.0, 1.0), quick=True).run(only=[1, 2, 3])
    assert [r.status for r in records] == [NOT_APPLICABLE] * 3
    assert passed(records)


def test_tolerance_scaling(two_disk):
    loose = VerificationSuite(two_disk, tol=1e-6).tolerances()
    tight = VerificationSuite(two_disk, tol=1e-30).tolerances()
    assert loose["busemann_closed_form"] == pytest.approx(1e-6)
    assert tight["busemann_closed_form"] == pytest.approx(1e-30)
    assert tight["fiber_spread"] == 0.5


def test_impossible_tolerance_fails(two_disk):
    suite = VerificationSuite(two_disk, grid=PointGrid.cube(-3.0, 3.0, 1.0), tol=1e-30, quick=True)
    records = suite.run(only=[1])
    assert records[0].status == ERROR
    assert not passed(records)


def test_random_batteries():
    rng = np.random.default_rng(5)
    directions = random_flag(rng, 3, 2)
    assert np.linalg.det(directions @ directions.T) > 0.1
    s1, s2 = random_same_flag_pair(rng, 2)
    assert s1.dimension == s2.dimension == 2


def test_cosine_battery(two_disk):
    battery = cosine_battery(two_disk, pairs=200, seed=2)
    assert battery["worst_residual"] < 1e-9
    assert battery["pairs"] == 200


def test_summary_output(capsys):
    records = [CriterionResult("a").success(), CriterionResult("b").not_applicable("skip")]
    print_summary(records)
    out = capsys.readouterr().out
    assert "=== Verification Summary ===" in out
    assert "Total criteria: 2" in out


@pytest.mark.slow
def test_theta_lambda_limits(suite, corner_bound):
    record = suite.run(only=[5])[0]
    assert record.status == OK
    assert record.data["theta_tail"] < 1e-3
    assert record.data["lambda_tail"] < 1e-3
    limit = 2.0 / (np.sqrt(3.0) + 1.0)
    for key in ("theta_min", "lambda_lower_min", "lambda_upper_min"):
        assert record.data[key] > corner_bound
        assert record.data[key] == pytest.approx(limit, abs=2e-2)
    assert record.data["lambda_min"] == min(record.data["lambda_lower_min"], record.data["lambda_upper_min"])


def test_convexity_criterion(suite):
    record = suite.run(only=[8])[0]
    assert record.status == OK
    assert record.data["concave_gauge_rejected"] is True


@pytest.mark.slow
@pytest.mark.parametrize("number", [7, 9, 10])
def test_quick_battery_criteria(suite, number):
    assert [r.status for r in suite.run(only=[number])] == [OK]


@pytest.mark.slow
def test_coex_family_approaches_phi_plus(suite):
    record = suite.run(only=[10])[0]
    angles, sups = record.data["coex_angles"], record.data["coex_sup_distances"]
    assert angles[-1] < 1e-3
    assert sups[-1] < sups[0]
    assert sups[-1] < 1e-2


def test_planar_sweep_has_to_find_declared_corners():
    nm = PNorm(2, 4.0, singular_directions=[(1.0, 0.0)])
    record = VerificationSuite(nm, grid=PointGrid.cube(-3.0, 3.0, 1.0), resolution=360, quick=True).run(only=[4])[0]
    assert record.status == ERROR
    assert "not found" in record.error_message
