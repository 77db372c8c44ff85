"""
Tests for services.config and services.writers
"""

import json

import numpy as np
import pandas as pd
import pytest

from services.config import RunConfig, config_schema, load_config, parse_config
from services.errors import ConfigError
from services.writers import read_table, write_table

SHELL = {"kind": "shell", "solid": "cube"}
LATTICE = {"kind": "lattice", "dim": 2, "counts": [2, 2]}


def test_shell_defaults():
    config = parse_config({"task": "plane_wave_absorption", "geometry": SHELL})
    assert config.l_max == 16
    assert config.geometry.kR == pytest.approx(0.8)
    assert config.geometry.ka == pytest.approx(np.pi)
    assert config.geometry.eps_shell_complex == 10.0
    assert config.geometry.eps_center_complex == pytest.approx((np.sqrt(10.0) + 0.1j) ** 2)
    assert config.output.format == "csv"


def test_absorption_scan_gets_default_grid():
    config = parse_config({"task": "absorption_scan", "geometry": SHELL})
    assert config.scan.axis == "ka"
    values = config.scan.values()
    assert len(values) == 141
    assert values[0] == 1.0 and values[-1] == 8.0


def test_parse_from_json_text():
    text = json.dumps({"task": "dispersion_energy", "geometry": LATTICE,
                       "scan": {"axis": "step_nm", "start": 60, "stop": 120, "nodes": 4}})
    config = parse_config(text)
    assert config.geometry.kind == "lattice"
    assert list(config.scan.values()) == [60.0, 80.0, 100.0, 120.0]


@pytest.mark.parametrize("payload", [
    {"task": "absorption_scan", "geometry": LATTICE},
    {"task": "dispersion_energy", "geometry": SHELL},
    {"task": "absorption_scan", "geometry": SHELL, "scan": {"axis": "step_nm", "start": 1, "stop": 2, "nodes": 3}},
    {"task": "absorption_modes", "geometry": SHELL, "l_max": 40},
    {"task": "absorption_modes", "geometry": {"kind": "shell", "solid": "prism"}},
    {"task": "dispersion_energy", "geometry": {"kind": "lattice", "dim": 2, "counts": [3]}},
    {"task": "absorption_scan", "geometry": SHELL, "scan": {"axis": "ka", "start": 3, "stop": 2, "nodes": 3}},
    {"task": "convergence_check", "geometry": SHELL, "convergence_l_max": [0, 8]},
    {"task": "unknown", "geometry": SHELL},
    {"schema_version": "2.0", "task": "absorption_modes", "geometry": SHELL},
])
def test_invalid_configs_raise_config_error(payload):
    with pytest.raises(ConfigError):
        parse_config(payload)


def test_convergence_orders_are_sorted():
    config = parse_config({"task": "convergence_check", "geometry": SHELL, "convergence_l_max": [12, 4, 8]})
    assert config.convergence_l_max == [4, 8, 12]


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(broken)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"task": "absorption_modes", "geometry": SHELL}), encoding="utf-8")
    assert isinstance(load_config(good), RunConfig)


def test_schema_describes_tasks():
    schema = config_schema()
    assert "task" in schema["properties"]
    assert "geometry" in schema["properties"]


def test_write_csv_and_json(tmp_path):
    table = pd.DataFrame({"ka": [1.0, 2.0], "A_max": [0.1234567890123456789, np.nan], "diagnostic": ["", "x"]})
    table.attrs["units"] = {"ka": "1"}
    csv_path = write_table(table, tmp_path / "out", "scan", metadata={"task": "absorption_scan"})
    assert csv_path.name == "scan.csv"
    round_trip = read_table(csv_path)
    assert round_trip.attrs["units"] == {"ka": "1"}
    assert round_trip.attrs["metadata"] == {"task": "absorption_scan"}
    assert csv_path.read_text(encoding="utf-8").startswith("# metadata: ")
    assert list(round_trip.columns) == ["ka", "A_max", "diagnostic"]
    assert round_trip["A_max"][0] == pytest.approx(0.1234567890123456789, rel=1e-15)
    assert np.isnan(round_trip["A_max"][1])

    json_path = write_table(table, tmp_path, "scan", "json", {"task": "absorption_scan"})
    document = json.loads(json_path.read_text(encoding="utf-8"))
    assert document["metadata"] == {"task": "absorption_scan"}
    assert document["units"] == {"ka": "1"}
    assert document["rows"][1]["A_max"] is None

    with pytest.raises(ValueError):
        write_table(table, tmp_path, "scan", "xlsx")
