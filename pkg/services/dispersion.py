"""
Dispersion Service
Collective phase shifts, the imaginary-frequency energy integral and the
pairwise-summation reference
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import hbar as HBAR

from services.cdm import CoupledDipoleSolver, DipoleEnsemble, structure_matrix
from services.errors import DomainError, IntegrandSignError
from services.scattering import coupling_operators

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureSettings:
    """Mapped Gauss-Legendre rule xi = xi0 (1 + t)/(1 - t) on (0, inf)."""

    nodes: int = 40
    max_nodes: int = 640
    tolerance: float = 1e-8
    xi0: Optional[float] = None
    dressed_imag: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.nodes < 2:
            raise DomainError(f"quadrature needs at least 2 nodes, got {self.nodes}")
        if self.max_nodes < self.nodes:
            raise DomainError("max_nodes must be >= nodes")


@dataclass
class EnergyResult:
    e_collective: float
    e_pairwise: float
    nodes: int
    xi0: float
    xi: np.ndarray = field(repr=False)
    integrand: np.ndarray = field(repr=False)
    converged: bool = True
    relative_change: float = 0.0

    @property
    def e_collective_ev(self) -> float:
        return self.e_collective / ELEMENTARY_CHARGE

    @property
    def e_pairwise_ev(self) -> float:
        return self.e_pairwise / ELEMENTARY_CHARGE

    @property
    def relative_deviation(self) -> float:
        if self.e_collective == 0.0:
            return 0.0
        return abs(self.e_collective - self.e_pairwise) / abs(self.e_collective)


# ---------------------------------------------------------------------------
# Real-frequency phase shift

def _logdets(ensemble: DipoleEnsemble, omega: float):
    x = structure_matrix(ensemble, omega, "X")
    y = structure_matrix(ensemble, omega, "Y")
    return CoupledDipoleSolver.for_structure(y).logdet(), CoupledDipoleSolver.for_structure(x).logdet()


def phase_shift(ensemble: DipoleEnsemble, omega: float) -> complex:
    """
    Delta(w) = ln det[I - Y] - ln det[I - X] on the principal branch.

    Use phase_shift_scan for a branch-continuous curve over frequency.
    """
    log_y, log_x = _logdets(ensemble, omega)
    return complex(log_y - log_x)


def phase_shift_scan(ensemble: DipoleEnsemble, omegas: Sequence[float]) -> np.ndarray:
    """Delta over a frequency grid with both log-determinant phases unwrapped."""
    logs = np.array([_logdets(ensemble, float(w)) for w in omegas])
    log_y, log_x = logs[:, 0], logs[:, 1]
    log_y = log_y.real + 1j * np.unwrap(log_y.imag)
    log_x = log_x.real + 1j * np.unwrap(log_x.imag)
    return log_y - log_x


def phase_shift_from_scattering(ensemble: DipoleEnsemble, omega: float, l_max: int) -> complex:
    """
    ln det S - sum_i ln det S_i through the determinant lemma.

    det S = det[I - X + 2 R L] / det[I - X] with R = [F T_i0], L = [k^3 alpha_i T_0i Q].
    """
    k = omega / SPEED_OF_LIGHT
    rows, cols = coupling_operators(ensemble, k, l_max)
    x = structure_matrix(ensemble, omega).entries
    numerator = CoupledDipoleSolver(x - 2.0 * rows @ cols).logdet()
    denominator = CoupledDipoleSolver(x).logdet()
    isolated = 0.0 + 0.0j
    for i in range(ensemble.n):
        block = slice(3 * i, 3 * i + 3)
        isolated += CoupledDipoleSolver(-2.0 * rows[block] @ cols[:, block]).logdet()
    return complex(numerator - denominator - isolated)


# ---------------------------------------------------------------------------
# Imaginary-frequency energy

def energy_integrand(ensemble: DipoleEnsemble, xi: float, dressed: bool = False) -> float:
    """ln det[I - X(i xi)]; raises IntegrandSignError when the determinant is not positive."""
    if xi <= 0:
        raise DomainError(f"imaginary frequency must be positive, got {xi}")
    if ensemble.n == 1:
        return 0.0
    x = structure_matrix(ensemble, 1j * xi, dressed_imag=dressed)
    sign, logabs = CoupledDipoleSolver.for_structure(x).slogdet()
    if sign <= 0:
        raise IntegrandSignError(f"det[I - X(i xi)] is not positive at xi={xi:.6e}")
    return logabs


def default_xi0(ensemble: DipoleEnsemble) -> float:
    """c / d_min, the scale where the integrand lives."""
    d_min = ensemble.min_separation()
    return SPEED_OF_LIGHT / d_min if np.isfinite(d_min) else 1.0


def _mapped_rule(n_nodes: int, xi0: float):
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    xi = xi0 * (1.0 + t) / (1.0 - t)
    weights = w * 2.0 * xi0 / (1.0 - t) ** 2
    return xi, weights


def _integrate(ensemble: DipoleEnsemble, xi0: float, n_nodes: int, settings: QuadratureSettings):
    xi, weights = _mapped_rule(n_nodes, xi0)

    def integrand(value):
        return energy_integrand(ensemble, float(value), settings.dressed_imag)

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            values = np.array(list(pool.map(integrand, xi)))
    else:
        values = np.array([integrand(v) for v in xi])
    energy = HBAR / (2.0 * np.pi) * float(np.dot(weights, values))
    return energy, xi, values


def pairwise_energy(
    ensemble: DipoleEnsemble,
    settings: QuadratureSettings = QuadratureSettings(),
    n_nodes: Optional[int] = None,
    xi0: Optional[float] = None,
) -> float:
    """
    Sum of two-body energies over every pair, on the grid of the full ensemble.

    Args:
        ensemble: the full ensemble (N >= 2)
        settings: quadrature settings
        n_nodes: node count (defaults to settings.nodes)
        xi0: mapping scale (defaults to c / d_min of the full ensemble)
    """
    if ensemble.n < 2:
        raise DomainError("pairwise energy needs at least two dipoles")
    n_nodes = settings.nodes if n_nodes is None else n_nodes
    if xi0 is None:
        xi0 = settings.xi0 if settings.xi0 is not None else default_xi0(ensemble)
    total = 0.0
    for i, j in combinations(range(ensemble.n), 2):
        energy, _, _ = _integrate(ensemble.subset([i, j]), xi0, n_nodes, settings)
        total += energy
    return total


def dispersion_energy(ensemble: DipoleEnsemble, settings: QuadratureSettings = QuadratureSettings()) -> EnergyResult:
    """
    E = hbar / (2 pi) int_0^inf ln det[I - X(i xi)] d xi, with the pairwise reference.

    Nodes double until successive estimates agree to settings.tolerance
    (relative) or max_nodes is reached; non-convergence is flagged, not raised.
    """
    xi0 = settings.xi0 if settings.xi0 is not None else default_xi0(ensemble)
    if ensemble.n == 1:
        xi, _ = _mapped_rule(settings.nodes, xi0)
        return EnergyResult(0.0, 0.0, settings.nodes, xi0, xi, np.zeros_like(xi))

    n_nodes = settings.nodes
    energy, xi, values = _integrate(ensemble, xi0, n_nodes, settings)
    converged = False
    change = np.inf
    while 2 * n_nodes <= settings.max_nodes:
        refined, xi_r, values_r = _integrate(ensemble, xi0, 2 * n_nodes, settings)
        change = abs(refined - energy) / abs(refined) if refined != 0.0 else abs(refined - energy)
        n_nodes, energy, xi, values = 2 * n_nodes, refined, xi_r, values_r
        if change < settings.tolerance:
            converged = True
            break

    if not converged:
        logger.warning(f"[DISPERSION] quadrature not converged at {n_nodes} nodes (change {change:.3e})")

    e_pairwise = pairwise_energy(ensemble, settings, n_nodes=n_nodes, xi0=xi0)
    logger.debug(f"[DISPERSION] N={ensemble.n} nodes={n_nodes} E={energy:.6e} J E_pw={e_pairwise:.6e} J")
    return EnergyResult(energy, e_pairwise, n_nodes, xi0, xi, values, converged, float(change))


def casimir_polder_asymptote(alpha_static: float, r: float) -> float:
    """Retarded two-body limit -23 hbar c alpha^2 / (64 pi^3 r^7) for volume polarizabilities."""
    return -23.0 * HBAR * SPEED_OF_LIGHT * alpha_static ** 2 / (64.0 * np.pi ** 3 * r ** 7)
