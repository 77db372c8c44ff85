"""
Tests for services.geometry
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.distance import pdist

from services.em_core import BarePolarizability, ClausiusMossotti, PlasmaModel
from services.errors import DomainError, OverlapError
from services.geometry import (
    DEFAULT_EPS_CENTER,
    VERTEX_COUNT,
    LatticeSpec,
    ShellSpec,
    Solid,
    build_lattice,
    build_shell,
    platonic_vertices,
)


@pytest.mark.parametrize("solid", list(Solid))
def test_platonic_vertices(solid):
    verts = platonic_vertices(solid)
    assert verts.shape == (VERTEX_COUNT[solid], 3)
    assert_allclose(np.linalg.norm(verts, axis=1), 1.0)
    assert_allclose(verts.mean(axis=0), 0.0, atol=1e-15)
    # every vertex has the same nearest-neighbour distance
    distances = pdist(verts)
    nearest = distances.min()
    full = np.zeros((len(verts), len(verts)))
    full[np.triu_indices(len(verts), 1)] = distances
    full = full + full.T + np.eye(len(verts)) * 10
    assert_allclose(full.min(axis=1), nearest, rtol=1e-12)


def test_octahedron_and_cube_orientation():
    assert_allclose(np.sort(np.abs(platonic_vertices("octahedron")).max(axis=1)), 1.0)
    cube = platonic_vertices(Solid.CUBE)
    assert_allclose(np.abs(cube), 1 / np.sqrt(3))


def test_shell_layout():
    spec = ShellSpec(Solid.CUBE, a=200e-9, radius=20e-9)
    ensemble = build_shell(spec)
    assert spec.n == ensemble.n == 9
    assert_allclose(ensemble.positions[0], 0.0)
    assert_allclose(np.linalg.norm(ensemble.positions[1:], axis=1), 200e-9)
    center, shell = ensemble.models[0], ensemble.models[1]
    assert isinstance(center, ClausiusMossotti)
    assert center.epsilon == pytest.approx(DEFAULT_EPS_CENTER)
    assert shell.epsilon == pytest.approx(10.0)


def test_shell_can_be_disabled():
    spec = ShellSpec("dodecahedron", a=200e-9, radius=20e-9, shell_enabled=False)
    assert build_shell(spec).n == 1 == spec.n


def test_shell_overlap_and_domain():
    with pytest.raises(OverlapError):
        ShellSpec(Solid.TETRAHEDRON, a=40e-9, radius=20e-9)
    with pytest.raises(DomainError):
        ShellSpec(Solid.TETRAHEDRON, a=40e-9, radius=-1.0)
    with pytest.raises(ValueError):
        ShellSpec("prism", a=200e-9, radius=20e-9)


@pytest.mark.parametrize("dim, counts", [(1, (5,)), (2, (3, 4)), (3, (2, 2, 3))])
def test_lattice_is_centered_with_given_step(dim, counts):
    spec = LatticeSpec(dim, counts, step=100e-9, radius=20e-9)
    ensemble = build_lattice(spec)
    assert ensemble.n == spec.n == int(np.prod(counts))
    assert_allclose(ensemble.positions.mean(axis=0), 0.0, atol=1e-20)
    assert ensemble.min_separation() == pytest.approx(100e-9)
    assert_allclose(ensemble.positions[:, dim:], 0.0)
    assert isinstance(ensemble.models[0], PlasmaModel)


def test_lattice_custom_model_and_validation():
    model = BarePolarizability(1e-22)
    ensemble = build_lattice(LatticeSpec(1, (2,), 50e-9, 10e-9, model))
    assert ensemble.models == (model, model)
    with pytest.raises(OverlapError):
        LatticeSpec(1, (2,), 30e-9, 20e-9)
    with pytest.raises(DomainError):
        LatticeSpec(2, (2,), 100e-9, 20e-9)
    with pytest.raises(DomainError):
        LatticeSpec(4, (1, 1, 1, 1), 100e-9, 20e-9)
    # a single sphere never overlaps
    assert LatticeSpec(1, (1,), 10e-9, 20e-9).n == 1
