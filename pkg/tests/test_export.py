import json
import numpy as np

from models.vectors import BoundingBox
from schemas.reports import ReportEnvelope
from services.export import write_report, write_rows, write_svg, write_values
from services.horofunctions import beta0, horosphere_sample


def test_csv_rows(tmp_path):
    path = write_rows(str(tmp_path / "nested" / "rows.csv"), ["id", "value"], [["a", 0.1], ["b", np.float64(2.0)]])
    assert open(path, encoding="utf-8").read() == "id,value\na,0.10000000000000001\nb,2\n"


def test_values_carry_provenance(tmp_path):
    points = np.array([[0.0, 0.0], [1.0, -1.0]])
    path = write_values(str(tmp_path / "beta0.csv"), points, beta0().values(points),
                        {"id": "beta0", "seed": 7})
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[:2] == ['# id: "beta0"', "# seed: 7"]
    assert lines[2] == "x1,x2,value"
    assert lines[4] == "1,-1,0"


def test_svg_is_deterministic(tmp_path, two_disk):
    box = BoundingBox.cube(-2.0, 2.0, 2)
    sample = horosphere_sample(two_disk, beta0(), 0.0, box, resolution=16)
    first = write_svg(str(tmp_path / "a.svg"), sample, box.low, box.high)
    second = write_svg(str(tmp_path / "b.svg"), sample, box.low, box.high)
    content = open(first, encoding="utf-8").read()
    assert content.startswith("<?xml")
    assert content == open(second, encoding="utf-8").read()


def test_report_envelope(tmp_path):
    envelope = ReportEnvelope(command="classify", status=0, config_hash="abc", seed=1, tolerances={"regularity": 1e-6},
                              payload={"verdict": "singular"})
    data = json.load(open(write_report(str(tmp_path / "classify.json"), envelope), encoding="utf-8"))
    assert data["command"] == "classify"
    assert data["payload"] == {"verdict": "singular"}
    assert data["error"] is None
