import json
import os

from main import run


def _report(out, command):
    with open(os.path.join(out, f"{command}.json"), encoding="utf-8") as f:
        return json.load(f)


def test_validate_two_disk(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "validate", "--samples", "500"]) == 0
    report = _report(out, "validate")
    assert report["status"] == 0
    assert report["payload"]["failed"] == []
    assert len(report["config_hash"]) == 64
    assert os.path.exists(os.path.join(out, "metrics.prom"))


def test_validate_rejects_concave_gauge(tmp_path, preset):
    out = str(tmp_path)
    assert run(["--config", preset("concave"), "--out", out, "validate"]) == 1
    assert "strict-convexity" in _report(out, "validate")["payload"]["failed"]


def test_horofunction_values_file(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "--grid-step", "1.0", "horofunction", "--horofunction", "beta0"]) == 0
    lines = open(os.path.join(out, "beta0.csv"), encoding="utf-8").read().splitlines()
    rows = [line for line in lines if not line.startswith("#")]
    assert rows[0] == "x1,x2,value"
    assert len(rows) == 1 + 11 * 11
    assert _report(out, "horofunction")["payload"]["range"] == [-5.0, 10.0]


def test_bounded_sequence_exits_with_precondition(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "horofunction", "--sequence", "bounded"]) == 3
    error = _report(out, "horofunction")["error"]
    assert error["error"] == "PreconditionError"
    assert "not flag-directed: bounded" in error["detail"]


def test_empty_level_set(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "levelset", "--horofunction", "beta0", "--level", "100"]) == 4
    assert _report(out, "levelset")["error"]["error"] == "EmptyLevelSetError"


def test_level_set_svg(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "--format", "svg", "levelset", "--horofunction", "beta0", "--resolution", "16"]) == 0
    files = _report(out, "levelset")["payload"]["files"]
    assert [os.path.splitext(f)[1] for f in files] == [".csv", ".svg"]
    assert all(os.path.exists(f) for f in files)


def test_unknown_horofunction_is_an_argument_error(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "project", "--horofunction", "nope"]) == 2


def test_missing_config(tmp_path):
    assert run(["--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path), "classify"]) == 2
    assert not os.path.exists(tmp_path / "classify.json")


def test_project_two_disk_top(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "project", "--horofunction", "coex_top"]) == 0
    direction = _report(out, "project")["payload"]["direction"]
    assert abs(direction[0]) < 1e-5 and abs(direction[1] - (2.0 ** 0.5 - 1.0)) < 1e-5


def test_verify_quick_and_sabotaged(tmp_path):
    out = str(tmp_path)
    assert run(["--out", out, "--grid-step", "1.0", "verify-paper", "--only", "1", "--quick"]) == 0
    assert _report(out, "verify-paper")["payload"]["criteria"][0]["status"] == "OK"
    assert run(["--out", out, "--grid-step", "1.0", "--tol", "1e-30", "verify-paper", "--only", "1", "--quick"]) == 1


def test_fiber_over_the_corner(tmp_path):
    out = str(tmp_path)
    argv = ["--out", out, "--grid-step", "1.0", "fiber", "--direction", "1", "0",
            "--candidates", "beta0", "beta0_up", "beta0_down"]
    assert run(argv) == 0
    fiber = _report(out, "fiber")["payload"]["fiber"]
    assert fiber["classes"] == 3
    assert fiber["excluded"] == []
    rows = open(os.path.join(out, "fiber.csv"), encoding="utf-8").read().splitlines()
    assert rows[0] == "id,projection,busemann,class,note"
    assert len(rows) == 4


def test_fiber_excludes_other_directions(tmp_path):
    out = str(tmp_path)
    argv = ["--out", out, "--grid-step", "1.0", "fiber", "--direction", "1", "0",
            "--candidates", "beta0", "coex_top"]
    assert run(argv) == 3
    assert _report(out, "fiber")["payload"]["fiber"]["excluded"] == ["coex_top"]


def test_classify_two_disk_and_euclidean(tmp_path, preset):
    out = str(tmp_path)
    assert run(["--out", out, "classify", "--resolution", "720"]) == 0
    regularity = _report(out, "classify")["payload"]["regularity"]
    assert regularity["verdict"] == "singular"
    found = sorted(regularity["singular_directions"])
    assert [[round(c, 6) + 0.0 for c in d] for d in found] == [[-1.0, 0.0], [1.0, 0.0]]
    assert run(["--config", preset("euclidean"), "--out", out, "classify", "--resolution", "720"]) == 0
    regularity = _report(out, "classify")["payload"]["regularity"]
    assert regularity["verdict"] == "regular"
    assert regularity["singular_directions"] == []


def _snapshot(out):
    return {name: open(os.path.join(out, name), "rb").read() for name in sorted(os.listdir(out))
            if name != "metrics.prom"}


def test_repeated_runs_are_byte_identical(tmp_path):
    out = str(tmp_path)
    levelset = ["--out", out, "--format", "svg", "levelset", "--horofunction", "beta0", "--resolution", "16"]
    values = ["--out", out, "--grid-step", "1.0", "horofunction", "--horofunction", "beta0"]
    assert run(levelset) == 0 and run(values) == 0
    first = _snapshot(out)
    assert {os.path.splitext(name)[1] for name in first} == {".csv", ".svg", ".json"}
    assert run(levelset) == 0 and run(values) == 0
    assert _snapshot(out) == first
