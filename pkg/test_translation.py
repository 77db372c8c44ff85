"""
Tests for services.translation
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from services.em_core import (
    FieldKind,
    ModeIndex,
    SphericalFieldCoeffs,
    eval_field,
    f_matrix,
    green_tensor,
    plane_wave_coeffs,
)
from services.translation import (
    assemble,
    cdos_operator,
    emission_columns,
    incident_rows,
    t_a_block,
    t_b_c_blocks,
    translation_operator,
    translation_pair,
)


def low_order(l_max, l_keep):
    """Indices of both blocks with l <= l_keep."""
    index = ModeIndex(l_max)
    return np.array([i for i, (_, ell, _) in enumerate(index.labels()) if ell <= l_keep])


def test_zero_translation_is_identity():
    op = translation_operator(np.zeros(3), 1.0, 6)
    assert_allclose(op.matrix, np.eye(ModeIndex(6).n_sph), atol=1e-14)
    assert_allclose(t_a_block(np.zeros(3), 2.0, 4), np.eye(ModeIndex(4).n_half), atol=1e-14)


def test_block_structure():
    rho = np.array([0.3, -0.7, 0.4])
    t_b, t_c = t_b_c_blocks(rho, 1.1, 5)
    op = translation_operator(rho, 1.1, 5)
    n = ModeIndex(5).n_half
    assert_allclose(op.matrix, assemble(t_b, t_c))
    assert_allclose(op.matrix[:n, :n], op.matrix[n:, n:])
    assert_allclose(op.matrix[:n, n:], -op.matrix[n:, :n])
    assert_allclose(op.t_b, t_b)
    assert_allclose(op.t_c, t_c)
    assert not op.matrix.flags.writeable


def test_translation_along_z_keeps_m():
    t_b, t_c = t_b_c_blocks(np.array([0.0, 0.0, 0.9]), 1.0, 4)
    _, ms = ModeIndex(4).block_arrays()
    mismatch = ms[:, None] != ms[None, :]
    assert np.all(np.abs(t_b[mismatch]) < 1e-15)
    assert np.all(np.abs(t_c[mismatch]) < 1e-15)


def test_group_property_on_low_orders():
    k, l_max = 1.0, 14
    rho1 = np.array([0.2, 0.1, -0.25])
    rho2 = np.array([-0.1, 0.3, 0.15])
    product = translation_operator(rho1, k, l_max) @ translation_operator(rho2, k, l_max)
    direct = translation_operator(rho1 + rho2, k, l_max).matrix
    keep = low_order(l_max, 3)
    assert_allclose(product[np.ix_(keep, keep)], direct[np.ix_(keep, keep)], atol=1e-12)


def test_inverse_is_opposite_translation():
    k, l_max = 1.0, 14
    rho = np.array([0.4, -0.2, 0.3])
    product = translation_operator(rho, k, l_max) @ translation_operator(-rho, k, l_max)
    keep = low_order(l_max, 3)
    assert_allclose(product[np.ix_(keep, keep)], np.eye(len(keep)), atol=1e-12)


def test_translated_plane_wave_picks_up_phase():
    k, l_max = 1.0, 24
    rho = np.array([0.3, -0.2, 0.5])
    pw = plane_wave_coeffs(l_max).coeffs
    keep = low_order(l_max, 4)
    shifted = translation_operator(rho, k, l_max) @ pw
    assert_allclose(shifted[keep], np.exp(-1j * k * rho[2]) * pw[keep], atol=1e-10)


def test_translation_pair_directions():
    r_i = np.array([0.1, 0.2, -0.6])
    t_i0, t_0i = translation_pair(r_i, 1.0, 4)
    assert_allclose(t_i0.rho, -r_i)
    assert_allclose(t_0i.rho, r_i)


def test_incident_rows_evaluate_plane_wave_at_dipole():
    k, l_max = 1.0, 16
    pw = plane_wave_coeffs(l_max).coeffs
    for r_i in ([0.0, 0.0, 0.7], [0.5, -0.3, -0.4], [-0.8, 0.1, 0.2]):
        r_i = np.asarray(r_i)
        assert_allclose(incident_rows(r_i, k, l_max) @ pw, [np.exp(1j * k * r_i[2]), 0, 0], atol=1e-10)


def test_incident_rows_match_full_operator():
    r_i = np.array([0.3, 0.4, -0.2])
    t_i0, _ = translation_pair(r_i, 1.2, 5)
    assert_allclose(incident_rows(r_i, 1.2, 5), f_matrix(5) @ t_i0.matrix, atol=1e-14)


def test_emission_columns_reproduce_displaced_dipole_field():
    k, l_max = 1.0, 20
    r_i = np.array([0.2, -0.3, 0.25])
    p = np.array([1.0, 0.4j, -0.5])
    coeffs = SphericalFieldCoeffs(emission_columns(r_i, k, l_max) @ p, FieldKind.OUTGOING, l_max)
    for point in ([0.0, 0.0, 3.0], [2.5, 1.0, -1.5]):
        point = np.asarray(point)
        assert_allclose(eval_field(coeffs, point, k), green_tensor(point, r_i, k) @ p, rtol=1e-9, atol=1e-12)


def test_cdos_converges_to_imaginary_green_tensor():
    k = 1.0
    r_i = np.array([0.0, 0.0, np.pi / 2])
    r_j = -r_i
    target = 1j * green_tensor(r_i, r_j, k).imag
    errors = []
    for l_max in (8, 12, 16):
        errors.append(np.max(np.abs(cdos_operator(r_i, r_j, k, l_max) - target)))
    assert errors[-1] <= 1e-6
    assert errors[0] > errors[1] > errors[2] or errors[1] <= 1e-13


def test_cdos_self_term():
    r_i = np.array([0.3, -0.1, 0.5])
    assert_allclose(cdos_operator(r_i, r_i, 1.0, 10), 1j * np.eye(3) / (6 * np.pi), atol=1e-12)


@pytest.mark.parametrize("direction", [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.8, -0.5]])
def test_cdos_off_axis_separations(direction):
    k = 1.0
    direction = np.asarray(direction) / np.linalg.norm(direction)
    r_i = 0.6 * direction
    r_j = -0.4 * direction + np.array([0.0, 0.0, 0.1])
    target = 1j * green_tensor(r_i, r_j, k).imag
    assert_allclose(cdos_operator(r_i, r_j, k, 14), target, atol=1e-10)
