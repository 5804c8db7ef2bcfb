import numpy as np
import pytest

from commands.context import RunContext
from errors import ConfigError
from schemas.config import load_config, parse_config
from services.horofunctions import coex_family


@pytest.mark.parametrize("name", ["two-disk", "euclidean", "p4", "3d", "concave"])
def test_presets_load(preset, name):
    config = load_config(preset(name))
    assert len(config.config_hash()) == 64


def test_two_disk_preset_contents(preset):
    config = load_config(preset("two-disk"))
    assert config.norm.family == "two-disk"
    assert config.horofunctions["phi_plus"].sequence == "below"
    assert config.sequences["bounded"].coordinates == ["1/k", "2"]
    assert config.projection.radii == [1.0, 2.0, 5.0, 10.0]


def test_yaml_error_carries_position(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("norm:\n  family: two-disk\n  dimension: [2\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r"line \d+, column \d+") as e:
        load_config(str(path))
    assert e.value.exit_code == 2


def test_invalid_field_names_its_path():
    with pytest.raises(ConfigError, match="invalid field norm.family"):
        parse_config({"norm": {"family": "hexagon"}})
    with pytest.raises(ConfigError, match="grid"):
        parse_config({"norm": {"family": "two-disk"}, "grid": {"low": 1.0, "high": -1.0}})


def test_cross_references_are_checked():
    with pytest.raises(ConfigError, match="unknown sequence"):
        parse_config({"norm": {"family": "two-disk"},
                      "horofunctions": {"f": {"kind": "sequence", "sequence": "missing"}}})
    with pytest.raises(ConfigError, match="3 coordinates"):
        parse_config({"norm": {"family": "two-disk"}, "sequences": {"s": {"coordinates": ["k", "0", "1"]}}})


def test_family_parameters_required():
    with pytest.raises(ConfigError, match="requires 'p'"):
        parse_config({"norm": {"family": "p-norm"}})
    with pytest.raises(ConfigError):
        parse_config({"norm": {"family": "two-disk", "dimension": 3}})


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config("/nonexistent/run.yaml")


def test_hash_ignores_key_order():
    a = parse_config({"norm": {"family": "euclidean"}, "seed": 3})
    b = parse_config({"seed": 3, "norm": {"family": "euclidean"}})
    assert a.config_hash() == b.config_hash()


def test_coex_sign_defaults_match_the_catalogue(tmp_path):
    config = parse_config({"norm": {"family": "two-disk"},
                           "horofunctions": {"top": {"kind": "closed-form", "formula": "coex_family",
                                                     "lam": 0.0, "mu": 2.0 ** 0.5 - 1.0}}})
    assert config.horofunctions["top"].eps1 == -1
    assert config.horofunctions["top"].eps2 == 1
    points = np.array([[1.0, 2.0], [-3.0, 0.5]])
    configured = RunContext(config, str(tmp_path)).horofunction("top")
    np.testing.assert_allclose(configured.values(points), coex_family(0.0, 2.0 ** 0.5 - 1.0).values(points))
