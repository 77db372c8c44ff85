"""
Coupled Dipole Model
Dipole ensembles, structure matrices X / Y and the exciting-field solver
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.linalg import lu_factor, lu_solve
from scipy.spatial.distance import pdist

from services.em_core import (
    FieldKind,
    PolarizabilityModel,
    SphericalFieldCoeffs,
    bare_polarizability,
    dressed_polarizability,
    green_tensor,
    green_tensor_imag_freq,
)
from services.errors import CoincidenceError, DomainError, ResonanceError
from services.translation import emission_columns, incident_rows

logger = logging.getLogger(__name__)

# Relative LU pivot below which I - X is treated as singular
PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class DipoleEnsemble:
    """N point dipoles about the global origin (0, 0, 0)."""

    positions: np.ndarray
    models: Tuple[PolarizabilityModel, ...]

    def __post_init__(self):
        positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "models", tuple(self.models))
        if positions.shape[1] != 3:
            raise DomainError(f"positions must have shape (N, 3), got {positions.shape}")
        if len(positions) < 1:
            raise DomainError("an ensemble needs at least one dipole")
        if len(self.models) != len(positions):
            raise DomainError(f"{len(positions)} positions but {len(self.models)} polarizability models")
        if len(positions) > 1 and np.min(pdist(positions)) == 0.0:
            raise CoincidenceError("two dipoles share a position")

    @classmethod
    def from_dipoles(cls, dipoles: Sequence[Tuple[Sequence[float], PolarizabilityModel]]) -> "DipoleEnsemble":
        return cls(np.array([pos for pos, _ in dipoles], dtype=float), tuple(model for _, model in dipoles))

    @property
    def n(self) -> int:
        return len(self.positions)

    def min_separation(self) -> float:
        if self.n < 2:
            return np.inf
        return float(np.min(pdist(self.positions)))

    def subset(self, indices: Sequence[int]) -> "DipoleEnsemble":
        indices = list(indices)
        return DipoleEnsemble(self.positions[indices], tuple(self.models[i] for i in indices))

    def polarizabilities(self, frequency: complex, dressed: bool) -> np.ndarray:
        """
        Polarizabilities at a real (w) or imaginary (1j * xi) frequency.

        Dressing applies radiative reaction with k = frequency / c.
        """
        alphas = np.array([bare_polarizability(model, frequency) for model in self.models], dtype=complex)
        if dressed:
            k = frequency / SPEED_OF_LIGHT
            alphas = np.array([dressed_polarizability(a, k) for a in alphas])
        return alphas


@dataclass(frozen=True)
class StructureMatrix:
    entries: np.ndarray
    frequency: complex
    variant: str = "X"

    @property
    def n(self) -> int:
        return self.entries.shape[0] // 3

    def block(self, i: int, j: int) -> np.ndarray:
        return self.entries[3 * i:3 * i + 3, 3 * j:3 * j + 3]


def is_imaginary(frequency: complex) -> bool:
    frequency = complex(frequency)
    return frequency.real == 0.0 and frequency.imag > 0.0


def structure_matrix(
    ensemble: DipoleEnsemble,
    frequency: complex,
    variant: str = "X",
    dressed_imag: bool = False,
) -> StructureMatrix:
    """
    Build X (or Y) for an ensemble.

    Args:
        ensemble: the dipoles
        frequency: real angular frequency w, or 1j * xi
        variant: "X", or "Y" for the conjugated-Green form (real frequencies only)
        dressed_imag: use the dressed polarizability at imaginary frequency

    Returns:
        StructureMatrix with zero diagonal blocks
    """
    if variant not in ("X", "Y"):
        raise DomainError(f"variant must be 'X' or 'Y', got {variant!r}")
    n = ensemble.n
    imaginary = is_imaginary(frequency)
    if imaginary and variant == "Y":
        raise DomainError("the Y matrix is defined at real frequencies")

    dtype = float if imaginary else complex
    entries = np.zeros((3 * n, 3 * n), dtype=dtype)

    if imaginary:
        xi = complex(frequency).imag
        alphas = ensemble.polarizabilities(frequency, dressed=dressed_imag)
        if np.any(np.abs(alphas.imag) > 1e-12 * np.abs(alphas)):
            raise DomainError("polarizabilities must be real on the imaginary frequency axis")
        scale = -((xi / SPEED_OF_LIGHT) ** 3) * alphas.real
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                g = green_tensor_imag_freq(ensemble.positions[i], ensemble.positions[j], xi)
                entries[3 * i:3 * i + 3, 3 * j:3 * j + 3] = scale[j] * g
    else:
        omega = float(np.real(frequency))
        k = omega / SPEED_OF_LIGHT
        k3_alpha = k ** 3 * ensemble.polarizabilities(omega, dressed=True)
        if variant == "Y":
            k3_alpha = k3_alpha / (1.0 + 1j * k3_alpha / (3.0 * np.pi))
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                g = green_tensor(ensemble.positions[i], ensemble.positions[j], k)
                if variant == "Y":
                    g = g.conj()
                entries[3 * i:3 * i + 3, 3 * j:3 * j + 3] = k3_alpha[j] * g

    return StructureMatrix(entries, complex(frequency), variant)


@dataclass
class CoupledDipoleSolver:
    """
    LU factorization of I - X, reusable across right-hand sides.

    Raises ResonanceError when the smallest relative pivot drops below PIVOT_TOL.
    """

    matrix: np.ndarray
    lu: np.ndarray = field(init=False, repr=False)
    piv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        system = np.eye(self.matrix.shape[0], dtype=self.matrix.dtype) - self.matrix
        self.lu, self.piv = lu_factor(system, check_finite=True)
        pivots = np.abs(np.diag(self.lu))
        if pivots.size and pivots.min() < PIVOT_TOL * pivots.max():
            cond = self.condition_number()
            logger.debug(f"[CDM] near-singular I - X, condition number {cond:.3e}")
            raise ResonanceError(f"I - X is numerically singular (condition number {cond:.3e})", cond)

    @classmethod
    def for_structure(cls, x: StructureMatrix) -> "CoupledDipoleSolver":
        return cls(x.entries)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return lu_solve((self.lu, self.piv), rhs)

    def condition_number(self) -> float:
        system = np.eye(self.matrix.shape[0], dtype=self.matrix.dtype) - self.matrix
        return float(np.linalg.cond(system))

    def slogdet(self) -> Tuple[complex, float]:
        """(sign, log|det|) of I - X read off the LU pivots."""
        diag = np.diag(self.lu)
        swaps = np.count_nonzero(self.piv != np.arange(len(self.piv)))
        sign = (-1.0) ** swaps * np.prod(diag / np.abs(diag))
        return sign, float(np.sum(np.log(np.abs(diag))))

    def logdet(self) -> complex:
        """Principal-branch ln det(I - X)."""
        sign, logabs = self.slogdet()
        return np.log(complex(sign)) + logabs


def solve_exciting_fields(x: StructureMatrix, incident_at_dipoles: np.ndarray) -> np.ndarray:
    """[I - X]^-1 applied to the stacked incident fields (3N or 3N x m)."""
    return CoupledDipoleSolver.for_structure(x).solve(np.asarray(incident_at_dipoles, dtype=complex))


def incident_rows_stack(ensemble: DipoleEnsemble, k: float, l_max: int) -> np.ndarray:
    """Stacked F T_i0 blocks, 3N x N_sph."""
    return np.vstack([incident_rows(pos, k, l_max) for pos in ensemble.positions])


def emission_columns_stack(ensemble: DipoleEnsemble, k: float, l_max: int) -> np.ndarray:
    """Concatenated T_0i Q blocks, N_sph x 3N."""
    return np.hstack([emission_columns(pos, k, l_max) for pos in ensemble.positions])


def incident_vector_from_modes(ensemble: DipoleEnsemble, phi_inc: SphericalFieldCoeffs, k: float) -> np.ndarray:
    """E_inc(r_i) for every dipole, stacked into a 3N vector."""
    if phi_inc.kind != FieldKind.FREE:
        raise DomainError("the incident field must be a free field")
    return incident_rows_stack(ensemble, k, phi_inc.l_max) @ phi_inc.coeffs


def _k3_alpha(ensemble: DipoleEnsemble, k: float) -> np.ndarray:
    return k ** 3 * ensemble.polarizabilities(k * SPEED_OF_LIGHT, dressed=True)


def scattered_field_at_point(ensemble: DipoleEnsemble, exciting: np.ndarray, point, k: float) -> np.ndarray:
    """E_sca(r) = sum_i k^3 alpha_i G0(r, r_i)/k E_i."""
    exciting = np.asarray(exciting, dtype=complex).reshape(ensemble.n, 3)
    k3_alpha = _k3_alpha(ensemble, k)
    total = np.zeros(3, dtype=complex)
    for i, pos in enumerate(ensemble.positions):
        total += k3_alpha[i] * green_tensor(point, pos, k) @ exciting[i]
    return total


def scattered_coeffs(ensemble: DipoleEnsemble, exciting: np.ndarray, k: float, l_max: int) -> SphericalFieldCoeffs:
    """Outgoing coefficients sum_i k^3 alpha_i T_0i Q E_i about the origin."""
    exciting = np.asarray(exciting, dtype=complex).reshape(-1)
    weights = np.repeat(_k3_alpha(ensemble, k), 3)
    coeffs = emission_columns_stack(ensemble, k, l_max) @ (weights * exciting)
    return SphericalFieldCoeffs(coeffs, FieldKind.OUTGOING, l_max)
