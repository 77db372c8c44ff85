"""
Tests for services.study_service

Runs the study tasks end to end on small truncations; the acceptance values
for the cube and dodecahedron shells are marked slow.
"""

import numpy as np
import pandas as pd
import pytest
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import hbar as HBAR

from services.config import parse_config
from services.dispersion import phase_shift
from services.errors import ConfigError
from services.geometry import LatticeSpec, build_lattice
from services.study_service import StudyService

SHELL = {"kind": "shell", "solid": "cube", "kR": 0.8}


def shell_config(task, **extra):
    payload = {"task": task, "geometry": dict(SHELL), "l_max": 6}
    payload.update(extra)
    return parse_config(payload)


def test_absorption_scan_marks_overlapping_nodes():
    config = shell_config("absorption_scan", scan={"axis": "ka", "start": 1.0, "stop": 3.0, "nodes": 3})
    table = StudyService().run(config)
    assert list(table["ka"]) == [1.0, 2.0, 3.0]
    assert np.isnan(table["A_max"][0])
    assert table["diagnostic"][0].startswith("OverlapError")
    assert (table["A_max"][1:] > 0).all()
    assert (table["A0"][1:] > 0).all()
    assert (table["eig_1"][1:] >= table["eig_2"][1:]).all()
    assert (table["l_max"] == 6).all()
    assert table.attrs["units"]["a_nm"] == "nm"
    assert table["a_nm"][2] == pytest.approx(3.0 / 0.8 * 20.0)


def test_threaded_scan_matches_serial():
    config = shell_config("absorption_scan", scan={"axis": "ka", "start": 2.0, "stop": 4.0, "nodes": 4})
    serial = StudyService(threads=1).run(config)
    threaded = StudyService(threads=3).run(config)
    pd.testing.assert_frame_equal(serial, threaded)


def test_absorption_modes_weights():
    config = shell_config("absorption_modes")
    table = StudyService().run(config)
    assert set(table["mode"]) == {1, 2, 3}
    for _, group in table.groupby("mode"):
        assert group["weight"].sum() == pytest.approx(1.0)
        assert len(group) == 2 * 6


def test_plane_wave_absorption_row():
    table = StudyService().run(shell_config("plane_wave_absorption"))
    row = table.iloc[0]
    assert 0.0 < row["fraction_isolated"] < 1.0
    assert 0.0 < row["fraction_collective"] < 1.0
    assert row["relative_change"] == pytest.approx(row["fraction_collective"] / row["fraction_isolated"] - 1.0)
    assert "standard frame" in row["orientation"]


def test_disabled_shell_reproduces_isolated_absorber():
    geometry = dict(SHELL, shell_enabled=False)
    config = parse_config({"task": "plane_wave_absorption", "geometry": geometry, "l_max": 6})
    row = StudyService().run(config).iloc[0]
    assert row["relative_change"] == pytest.approx(0.0, abs=1e-10)
    assert row["eigenvalue_change"] == pytest.approx(0.0, abs=1e-10)


def test_dispersion_over_lattice_steps():
    config = parse_config({
        "task": "dispersion_energy",
        "geometry": {"kind": "lattice", "dim": 1, "counts": [3]},
        "scan": {"axis": "step_nm", "start": 30.0, "stop": 120.0, "nodes": 2},
        "quadrature": {"nodes": 20, "max_nodes": 80, "tolerance": 1e-6},
    })
    table = StudyService().run(config)
    assert list(table["step_nm"]) == [30.0, 120.0]
    # 30 nm is below the sphere diameter
    assert np.isnan(table["E_collective_J"][0])
    assert table["diagnostic"][0].startswith("OverlapError")
    assert table["E_collective_J"][1] < 0
    assert table["E_collective_eV"][1] == pytest.approx(table["E_collective_J"][1] / 1.602176634e-19)
    assert table["relative_deviation"][1] < 0.5
    assert "mapped-GL" in table["quadrature"][1]


def test_pairwise_compare_lists_every_pair():
    config = parse_config({
        "task": "pairwise_compare",
        "geometry": {"kind": "lattice", "dim": 2, "counts": [2, 2], "step_nm": 90.0},
        "quadrature": {"nodes": 20, "max_nodes": 80, "tolerance": 1e-6},
    })
    table = StudyService().run(config)
    pairs = table[table["i"] >= 0]
    assert len(pairs) == 6
    assert (pairs["E_pair_J"] < 0).all()
    assert sorted(np.round(pairs["distance_nm"], 6)) == [90.0] * 4 + [round(90.0 * np.sqrt(2), 6)] * 2
    total = table[table["i"] < 0].iloc[0]
    assert total["E_pair_J"] < 0


def test_convergence_check_on_shell():
    config = shell_config("convergence_check", convergence_l_max=[4, 6])
    table = StudyService().run(config)
    assert list(table["l_max"]) == [4, 6]
    assert np.isnan(table["relative_change"][0])
    assert table["relative_change"][1] >= 0
    assert (table["observable"] == "relative_change_A").all()


def test_convergence_check_on_lattice_tracks_scattering_phase():
    config = parse_config({
        "task": "convergence_check",
        "geometry": {"kind": "lattice", "dim": 1, "counts": [3], "step_nm": 100.0, "omega_ev": 2.5},
        "convergence_l_max": [1, 2, 4, 8],
    })
    table = StudyService().run(config)
    assert (table["observable"] == "phase_shift_imag").all()
    assert table.attrs["units"]["value"] == "rad"
    changes = table["relative_change"]
    assert changes[1] > changes[2] > 0.0
    assert changes[3] < 1e-8
    ensemble = build_lattice(LatticeSpec(1, (3,), 100e-9, 20e-9))
    direct = phase_shift(ensemble, 2.5 * ELEMENTARY_CHARGE / HBAR)
    assert np.exp(1j * table["value"][3]) == pytest.approx(np.exp(1j * direct.imag), abs=1e-8)


def test_close_shell_converges_at_least_as_fast_as_half_wavelength_shell():
    def changes(ka):
        geometry = {"kind": "shell", "solid": "cube", "kR": 0.2, "ka": ka}
        config = parse_config({"task": "convergence_check", "geometry": geometry, "convergence_l_max": [2, 3, 4]})
        return StudyService().run(config)["relative_change"].to_numpy()

    close, half_wave = changes(np.pi / 4), changes(np.pi)
    assert np.all(np.isfinite(close[1:])) and np.all(np.isfinite(half_wave[1:]))
    assert np.all(close[1:] < half_wave[1:])


def test_unknown_task_is_a_config_error():
    config = shell_config("absorption_modes").model_copy(update={"task": "not_a_task"})
    with pytest.raises(ConfigError):
        StudyService().run(config)


@pytest.mark.slow
def test_cube_shell_enhancement():
    geometry = {"kind": "shell", "solid": "cube", "kR": 0.8, "ka": float(np.pi)}
    config = parse_config({"task": "plane_wave_absorption", "geometry": geometry, "l_max": 16})
    row = StudyService().run(config).iloc[0]
    assert 100 * row["eigenvalue_change"] == pytest.approx(19.7, abs=2.0)
    assert 100 * row["relative_change"] == pytest.approx(37.6, abs=4.0)
    assert 100 * row["projection_change"] == pytest.approx(15.0, abs=3.0)


@pytest.mark.slow
def test_dodecahedron_peak_enhancement():
    geometry = {"kind": "shell", "solid": "dodecahedron", "kR": 0.8}
    config = parse_config({
        "task": "absorption_scan",
        "geometry": geometry,
        "l_max": 16,
        "scan": {"axis": "ka", "start": 0.8 * np.pi, "stop": 1.2 * np.pi, "nodes": 9},
    })
    table = StudyService(threads=2).run(config)
    peak = 100 * table["relative_change"].max()
    assert 45.0 <= peak <= 75.0


@pytest.mark.slow
def test_cube_shell_converged_between_orders_20_and_24():
    config = shell_config("convergence_check", convergence_l_max=[20, 24])
    table = StudyService().run(config)
    assert table["relative_change"][1] < 1e-3
