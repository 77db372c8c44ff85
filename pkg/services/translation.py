"""
Translation Operators
Addition-theorem blocks T^A, T^B, T^C and the assembled re-expansion operators
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Tuple

import numpy as np
from scipy.special import spherical_jn

from services.em_core import ModeIndex, f_matrix, q_matrix
from services.specfun import cg_values, ylm_table


class CouplingTable(NamedTuple):
    """Sparse list of the alpha-sum terms of T^A and T^B."""

    flat: np.ndarray      # row * n_cols + col
    ab: np.ndarray        # alpha^2 + alpha + beta
    coef: np.ndarray      # (-1)^m1 4 pi i^(l2-l1+alpha) a(alpha, beta | l1, -m1, l2, m2), real
    weight: np.ndarray    # T^B angular weight
    n_rows: int
    n_cols: int


@lru_cache(maxsize=16)
def _coupling_table(row_l_max: int, col_l_max: int) -> CouplingTable:
    """Terms for rows l1 <= row_l_max and columns l2 <= col_l_max."""
    n_rows = row_l_max * (row_l_max + 2)
    n_cols = col_l_max * (col_l_max + 2)
    flat, ab, coef, weight = [], [], [], []

    row = 0
    for l1 in range(1, row_l_max + 1):
        for m1 in range(-l1, l1 + 1):
            col = 0
            for l2 in range(1, col_l_max + 1):
                cg0 = cg_values(l1, 0, l2, 0)
                ll = l1 * (l1 + 1.0) * l2 * (l2 + 1.0)
                for m2 in range(-l2, l2 + 1):
                    beta = m2 - m1
                    cg = cg_values(l1, -m1, l2, m2)
                    alpha_lo = max(abs(l1 - l2), abs(beta))
                    if (alpha_lo + l1 + l2) % 2:
                        alpha_lo += 1
                    for alpha in range(alpha_lo, l1 + l2 + 1, 2):
                        value = cg[alpha] * cg0[alpha]
                        if value == 0.0:
                            continue
                        pref = np.sqrt((2 * l1 + 1) * (2 * l2 + 1) / (4.0 * np.pi * (2 * alpha + 1)))
                        power = l2 - l1 + alpha
                        flat.append(row * n_cols + col)
                        ab.append(alpha * alpha + alpha + beta)
                        coef.append((-1.0) ** m1 * 4.0 * np.pi * (-1.0) ** (power // 2) * pref * value)
                        weight.append((l1 * (l1 + 1) + l2 * (l2 + 1) - alpha * (alpha + 1)) / (2.0 * np.sqrt(ll)))
                    col += 1
            row += 1

    return CouplingTable(
        np.asarray(flat, dtype=np.int64),
        np.asarray(ab, dtype=np.int64),
        np.asarray(coef, dtype=float),
        np.asarray(weight, dtype=float),
        n_rows,
        n_cols,
    )


def _direction(rho: np.ndarray) -> Tuple[float, float, float]:
    r = float(np.linalg.norm(rho))
    if r == 0.0:
        return 0.0, 0.0, 0.0
    theta = float(np.arctan2(np.hypot(rho[0], rho[1]), rho[2]))
    phi = float(np.arctan2(rho[1], rho[0]))
    return r, theta, phi


def _accumulate(table: CouplingTable, terms: np.ndarray) -> np.ndarray:
    size = table.n_rows * table.n_cols
    real = np.bincount(table.flat, weights=terms.real, minlength=size)
    imag = np.bincount(table.flat, weights=terms.imag, minlength=size)
    return (real + 1j * imag).reshape(table.n_rows, table.n_cols)


def _ladder(col_l_max: int, rho: np.ndarray) -> np.ndarray:
    """rho . (L_x, L_y, L_z) acting on the column (l2, m2) labels."""
    ells, ms = ModeIndex(col_l_max).block_arrays()
    n = len(ells)
    l_plus = np.zeros((n, n))
    l_minus = np.zeros((n, n))
    for col, (ell, m) in enumerate(zip(ells, ms)):
        if m < ell:
            l_plus[col + 1, col] = np.sqrt((ell - m) * (ell + m + 1.0))
        if m > -ell:
            l_minus[col - 1, col] = np.sqrt((ell + m) * (ell - m + 1.0))
    l_x = 0.5 * (l_plus + l_minus)
    l_y = (l_plus - l_minus) / 2j
    l_z = np.diag(ms.astype(float))
    return rho[0] * l_x + rho[1] * l_y + rho[2] * l_z


def _blocks(rho, k: float, row_l_max: int, col_l_max: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rho = np.asarray(rho, dtype=float)
    table = _coupling_table(row_l_max, col_l_max)
    r, theta, phi = _direction(rho)

    alpha_max = row_l_max + col_l_max
    alphas = np.arange(alpha_max + 1)
    bessel = spherical_jn(alphas, k * r)
    ylm = ylm_table(alpha_max, theta, phi)
    alpha_of_ab = np.repeat(alphas, 2 * alphas + 1)
    u = bessel[alpha_of_ab] * ylm

    u_terms = table.coef * u[table.ab]
    t_a = _accumulate(table, u_terms)
    t_b = _accumulate(table, table.weight * u_terms)

    row_ells, _ = ModeIndex(row_l_max).block_arrays()
    col_ells, _ = ModeIndex(col_l_max).block_arrays()
    norm = np.outer(np.sqrt(row_ells * (row_ells + 1.0)), np.sqrt(col_ells * (col_ells + 1.0)))
    t_c = -1j * k * (t_a @ _ladder(col_l_max, rho)) / norm
    return t_a, t_b, t_c


def t_a_block(rho, k: float, l_max: int) -> np.ndarray:
    """Scalar translation block T^A(rho), (N_sph/2) x (N_sph/2)."""
    t_a, _, _ = _blocks(rho, k, l_max, l_max)
    return t_a


def t_b_c_blocks(rho, k: float, l_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vector translation blocks (T^B(rho), T^C(rho)) giving the coefficients of E(r - rho)."""
    _, t_b, t_c = _blocks(rho, k, l_max, l_max)
    return t_b, t_c


def assemble(t_b: np.ndarray, t_c: np.ndarray) -> np.ndarray:
    return np.block([[t_b, 1j * t_c], [-1j * t_c, t_b]])


@dataclass(frozen=True)
class TranslationOperator:
    rho: np.ndarray
    k: float
    l_max: int
    matrix: np.ndarray

    @property
    def t_b(self) -> np.ndarray:
        n = ModeIndex(self.l_max).n_half
        return self.matrix[:n, :n]

    @property
    def t_c(self) -> np.ndarray:
        n = ModeIndex(self.l_max).n_half
        return 1j * self.matrix[n:, :n]

    def __matmul__(self, other):
        if isinstance(other, TranslationOperator):
            return self.matrix @ other.matrix
        return self.matrix @ other


def translation_operator(rho, k: float, l_max: int) -> TranslationOperator:
    rho = np.asarray(rho, dtype=float)
    t_b, t_c = t_b_c_blocks(rho, k, l_max)
    matrix = assemble(t_b, t_c)
    matrix.flags.writeable = False
    return TranslationOperator(rho.copy(), k, l_max, matrix)


def translation_pair(r_i, k: float, l_max: int) -> Tuple[TranslationOperator, TranslationOperator]:
    """
    (T_i0, T_0i) for a dipole at r_i.

    T_i0 re-expands a free field about r_i, so F T_i0 phi = E(r_i); it is the
    block operator at rho = -r_i. T_0i moves a field emitted at r_i to the
    origin and uses rho = +r_i.
    """
    r_i = np.asarray(r_i, dtype=float)
    return translation_operator(-r_i, k, l_max), translation_operator(r_i, k, l_max)


def incident_rows(r_i, k: float, l_max: int) -> np.ndarray:
    """F T_i0, 3 x N_sph: exciting field at r_i from free-field coefficients."""
    r_i = np.asarray(r_i, dtype=float)
    _, t_b, t_c = _blocks(-r_i, k, 1, l_max)
    rows = np.hstack([t_b, 1j * t_c])
    return f_matrix(1)[:, :3] @ rows


def emission_columns(r_i, k: float, l_max: int) -> np.ndarray:
    """T_0i Q, N_sph x 3: outgoing coefficients of a unit dipole at r_i."""
    r_i = np.asarray(r_i, dtype=float)
    _, t_b, t_c = _blocks(r_i, k, l_max, 1)
    cols = np.vstack([t_b, -1j * t_c])
    return cols @ q_matrix(1)[:3, :]


def cdos_operator(r_i, r_j, k: float, l_max: int) -> np.ndarray:
    """F T_i0 T_0j Q, which tends to i Im[G0(r_i, r_j)/k] as l_max grows."""
    return incident_rows(r_i, k, l_max) @ emission_columns(r_j, k, l_max)
