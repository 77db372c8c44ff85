"""
Collective Scattering Service
Diffusion matrix D, scattering matrix S = I + 2D, absorption operator and its modes
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from services.cdm import (
    CoupledDipoleSolver,
    DipoleEnsemble,
    emission_columns_stack,
    incident_rows_stack,
    structure_matrix,
)
from services.em_core import BLOCK_A, BLOCK_B, ModeIndex, SphericalFieldCoeffs
from services.errors import DomainError

logger = logging.getLogger(__name__)

# Default rank threshold, relative to the largest absorption eigenvalue
RANK_TOL = 1e-10


@dataclass(frozen=True)
class CollectiveOperators:
    d: np.ndarray
    s: np.ndarray
    a: np.ndarray
    k: float
    l_max: int
    ensemble: DipoleEnsemble
    hermitian_defect: float


@dataclass(frozen=True)
class AbsorptionModes:
    """Eigenpairs of A in descending order; columns of eigenvectors are the incoming modes."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank_tol: float

    @property
    def threshold(self) -> float:
        top = self.eigenvalues[0] if self.eigenvalues.size else 0.0
        return self.rank_tol * max(top, 0.0)

    @property
    def rank(self) -> int:
        if not self.eigenvalues.size or self.eigenvalues[0] <= 0.0:
            return 0
        return int(np.count_nonzero(self.eigenvalues > self.threshold))

    @property
    def absorbing(self) -> Tuple[np.ndarray, np.ndarray]:
        r = self.rank
        return self.eigenvalues[:r], self.eigenvectors[:, :r]

    @property
    def null_space(self) -> np.ndarray:
        return self.eigenvectors[:, self.rank:]


def _dressed_k3_alpha(ensemble: DipoleEnsemble, k: float) -> np.ndarray:
    return k ** 3 * ensemble.polarizabilities(k * SPEED_OF_LIGHT, dressed=True)


def coupling_operators(ensemble: DipoleEnsemble, k: float, l_max: int):
    """R = [F T_i0] stacked (3N x N_sph) and L = [k^3 alpha_i T_0i Q] (N_sph x 3N)."""
    rows = incident_rows_stack(ensemble, k, l_max)
    cols = emission_columns_stack(ensemble, k, l_max) * np.repeat(_dressed_k3_alpha(ensemble, k), 3)
    return rows, cols


def collective_diffusion(ensemble: DipoleEnsemble, k: float, l_max: int) -> np.ndarray:
    """
    D = [k^3 alpha_i T_0i Q] [I - X]^-1 [F T_i0], N_sph x N_sph.

    One factorization of I - X serves all N_sph right-hand sides.
    """
    rows, cols = coupling_operators(ensemble, k, l_max)
    x = structure_matrix(ensemble, k * SPEED_OF_LIGHT)
    solver = CoupledDipoleSolver.for_structure(x)
    return cols @ solver.solve(rows)


def scattering_matrix(d: np.ndarray) -> np.ndarray:
    return np.eye(d.shape[0], dtype=complex) + 2.0 * d


def hermitian_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def absorption_operator(s: np.ndarray) -> np.ndarray:
    """A = I - S^dagger S, symmetrized to its Hermitian part."""
    raw = np.eye(s.shape[0], dtype=complex) - s.conj().T @ s
    defect = hermitian_defect(raw)
    if defect > 1e-12:
        logger.debug(f"[SCATTERING] absorption operator Hermitian defect {defect:.3e}")
    return 0.5 * (raw + raw.conj().T)


def unitarity_defect(s: np.ndarray) -> float:
    return float(np.max(np.abs(np.eye(s.shape[0]) - s.conj().T @ s)))


def collective_operators(ensemble: DipoleEnsemble, k: float, l_max: int) -> CollectiveOperators:
    d = collective_diffusion(ensemble, k, l_max)
    s = scattering_matrix(d)
    raw = np.eye(s.shape[0], dtype=complex) - s.conj().T @ s
    a = 0.5 * (raw + raw.conj().T)
    return CollectiveOperators(d, s, a, k, l_max, ensemble, hermitian_defect(raw))


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Make the first significant component of every column real and positive."""
    fixed = vectors.copy()
    for col in range(fixed.shape[1]):
        v = fixed[:, col]
        mags = np.abs(v)
        if mags.max() == 0.0:
            continue
        first = int(np.argmax(mags > 1e-8 * mags.max()))
        fixed[:, col] = v * (np.abs(v[first]) / v[first])
    return fixed


def absorption_modes(a: np.ndarray, rank_tol: float = RANK_TOL) -> AbsorptionModes:
    """
    Eigendecomposition of the Hermitian absorption operator.

    Args:
        a: absorption operator
        rank_tol: eigenvalues below rank_tol * largest eigenvalue form the null space

    Returns:
        AbsorptionModes sorted by descending eigenvalue
    """
    values, vectors = np.linalg.eigh(0.5 * (a + a.conj().T))
    order = np.argsort(values)[::-1]
    return AbsorptionModes(values[order], _fix_phase(vectors[:, order]), rank_tol)


def projection_weights(modes: AbsorptionModes, phi_inc: SphericalFieldCoeffs) -> np.ndarray:
    """|v_k^dagger phi|^2 of the normalized incident field on every absorbing mode."""
    unit, norm = phi_inc.normalized()
    _, vectors = modes.absorbing
    logger.debug(f"[SCATTERING] incident field normalized by {norm:.6g}")
    return np.abs(vectors.conj().T @ unit.coeffs) ** 2


def absorbed_fraction(modes: AbsorptionModes, phi_inc: SphericalFieldCoeffs) -> float:
    """sum_k lambda_k |v_k^dagger phi|^2 for the normalized incident field."""
    values, _ = modes.absorbing
    return float(np.sum(values * projection_weights(modes, phi_inc)))


def scattering_orders(ensemble: DipoleEnsemble, k: float, l_max: int, max_order: int) -> List[np.ndarray]:
    """
    Terms S_n = 2 L X^(n-1) R of S = I + S_1 + S_2 + ...

    S_n collects fields scattered n times by the dipoles.
    """
    if max_order < 1:
        raise DomainError(f"max_order must be >= 1, got {max_order}")
    rows, cols = coupling_operators(ensemble, k, l_max)
    x = structure_matrix(ensemble, k * SPEED_OF_LIGHT).entries
    orders = []
    propagated = rows
    for _ in range(max_order):
        orders.append(2.0 * cols @ propagated)
        propagated = x @ propagated
    return orders


def mode_weights_by_degree(vector: np.ndarray, l_max: int) -> Dict[Tuple[str, int], float]:
    """Sum of |coefficient|^2 per (block, l) of one mode vector."""
    index = ModeIndex(l_max)
    ells, _ = index.block_arrays()
    weights = {}
    power = np.abs(vector) ** 2
    for block, offset in ((BLOCK_A, 0), (BLOCK_B, index.n_half)):
        block_power = power[offset:offset + index.n_half]
        for ell in range(1, l_max + 1):
            weights[(block, ell)] = float(np.sum(block_power[ells == ell]))
    return weights


def isolated_absorption(ensemble: DipoleEnsemble, k: float, l_max: int, index: int = 0,
                        rank_tol: Optional[float] = None) -> AbsorptionModes:
    """Absorption modes of one dipole of the ensemble taken alone."""
    ops = collective_operators(ensemble.subset([index]), k, l_max)
    return absorption_modes(ops.a, RANK_TOL if rank_tol is None else rank_tol)
