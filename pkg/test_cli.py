"""
Tests for the batch command line and the HTTP API
"""

import json

import pytest
from fastapi.testclient import TestClient

import cli
from main import app
from services.writers import read_table

client = TestClient(app)

SMALL_SHELL = {"task": "absorption_modes", "geometry": {"kind": "shell", "solid": "tetrahedron"}, "l_max": 4}


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# CLI

def test_schema_command(capsys):
    assert cli.main(["schema"]) == cli.EXIT_OK
    schema = json.loads(capsys.readouterr().out)
    assert "geometry" in schema["properties"]


def test_validate_command(tmp_path, capsys):
    path = write_config(tmp_path, SMALL_SHELL)
    assert cli.main(["validate", path]) == cli.EXIT_OK
    assert "valid" in capsys.readouterr().out


def test_invalid_config_exit_code(tmp_path):
    path = write_config(tmp_path, {"task": "dispersion_energy", "geometry": {"kind": "shell", "solid": "cube"}})
    assert cli.main(["validate", path]) == cli.EXIT_CONFIG
    assert cli.main(["run", path]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_run_writes_csv(tmp_path):
    path = write_config(tmp_path, SMALL_SHELL)
    out_dir = tmp_path / "results"
    assert cli.main(["--out", str(out_dir), "--threads", "2", "run", path]) == cli.EXIT_OK
    table = read_table(out_dir / "absorption_modes.csv")
    assert table.attrs["metadata"]["task"] == "absorption_modes"
    assert table.attrs["units"]["weight"].startswith("1")
    assert set(table["mode"]) == {1, 2, 3}


def test_run_writes_json_with_stem(tmp_path):
    payload = dict(SMALL_SHELL, output={"format": "json", "stem": "modes", "path": str(tmp_path / "json")})
    assert cli.main(["run", write_config(tmp_path, payload)]) == cli.EXIT_OK
    document = json.loads((tmp_path / "json" / "modes.json").read_text(encoding="utf-8"))
    assert document["metadata"]["task"] == "absorption_modes"
    assert document["metadata"]["l_max"] == 4
    assert len(document["rows"]) == 3 * 2 * 4


def test_numerical_failure_exit_code(tmp_path):
    # ka = 1.0 puts the shell spheres on top of the absorber for kR = 0.8
    payload = {"task": "plane_wave_absorption", "geometry": {"kind": "shell", "solid": "cube", "ka": 1.0}, "l_max": 4}
    assert cli.main(["--out", str(tmp_path), "run", write_config(tmp_path, payload)]) == cli.EXIT_NUMERICAL


def test_options_after_subcommand(tmp_path):
    parser = cli.build_parser()
    args = parser.parse_args(["run", "x.json", "--threads", "4", "--out", "elsewhere", "--log-level", "DEBUG"])
    assert (args.threads, args.out, args.log_level) == (4, "elsewhere", "DEBUG")
    args = parser.parse_args(["--threads", "2", "run", "x.json"])
    assert args.threads == 2
    assert args.out is None

    path = write_config(tmp_path, SMALL_SHELL)
    assert cli.main(["run", path, "--out", str(tmp_path / "trailing"), "--threads", "2"]) == cli.EXIT_OK
    assert (tmp_path / "trailing" / "absorption_modes.csv").exists()


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("COLLECTIVE_THREADS", "3")
    parser = cli.build_parser()
    args = parser.parse_args(["run", "x.json"])
    config = cli.load_config(write_config(tmp_path, SMALL_SHELL))
    assert cli._threads(args, config) == 3
    monkeypatch.setenv("COLLECTIVE_OUT_DIR", str(tmp_path / "env_out"))
    assert cli._out_dir(args, config) == tmp_path / "env_out"


def test_missing_subcommand_exits():
    with pytest.raises(SystemExit):
        cli.main([])


# ---------------------------------------------------------------------------
# HTTP API

def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "online"


def test_schema_endpoint():
    response = client.get("/api/v1/schema")
    assert response.status_code == 200
    assert "task" in response.json()["properties"]


def test_validate_endpoint():
    response = client.post("/api/v1/validate", json=SMALL_SHELL)
    assert response.status_code == 200
    body = response.json()
    assert body["valid"] is True
    assert body["config"]["quadrature"]["nodes"] == 40

    bad = client.post("/api/v1/validate", json={"task": "absorption_modes", "geometry": {"kind": "lattice"}})
    assert bad.status_code == 422


def test_run_endpoint():
    response = client.post("/api/v1/run", json=SMALL_SHELL)
    assert response.status_code == 200
    body = response.json()
    assert body["task"] == "absorption_modes"
    assert len(body["rows"]) == 3 * 2 * 4


def test_absorption_endpoint():
    response = client.get("/api/v1/absorption/octahedron", params={"ka": 3.0, "kR": 0.8, "l_max": 4})
    assert response.status_code == 200
    row = response.json()["rows"][0]
    assert 0.0 < row["fraction_collective"] < 1.0


def test_absorption_endpoint_errors():
    overlap = client.get("/api/v1/absorption/cube", params={"ka": 1.0, "l_max": 4})
    assert overlap.status_code == 500
    assert "OverlapError" in overlap.json()["detail"]
    assert client.get("/api/v1/absorption/prism").status_code == 422
    assert client.get("/api/v1/absorption/cube", params={"l_max": 99}).status_code == 422
