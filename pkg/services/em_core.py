"""
Electromagnetic Core
Vacuum Green tensors, polarizability models, spherical-mode indexing and
evaluation, surface decomposition and the F/Q evaluation operators
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterator, Tuple, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from services.errors import (
    CoincidenceError,
    DecompositionError,
    DomainError,
    PoleError,
    SingularityError,
)
from services.specfun import angular_functions, riccati_bessel, riccati_hankel

# Cartesian 3-vectors are plain numpy arrays of shape (3,)
CartesianVec3 = np.ndarray

BLOCK_A = "A"
BLOCK_B = "B"

# |z(ka)| / |z'(ka)| below this marks a radial zero on the decomposition sphere
DECOMPOSITION_TOL = 1e-8


@dataclass(frozen=True)
class ModeIndex:
    """
    Linear indexing of (block, l, m) labels.

    Within a block index = l^2 - 1 + (m + l); the B block follows the A block.
    """

    l_max: int

    def __post_init__(self):
        if self.l_max < 1:
            raise DomainError(f"l_max must be >= 1, got {self.l_max}")

    @property
    def n_half(self) -> int:
        return self.l_max * (self.l_max + 2)

    @property
    def n_sph(self) -> int:
        return 2 * self.n_half

    def index(self, block: str, ell: int, m: int) -> int:
        if not 1 <= ell <= self.l_max or abs(m) > ell:
            raise DomainError(f"label (l={ell}, m={m}) outside l_max={self.l_max}")
        if block == BLOCK_A:
            offset = 0
        elif block == BLOCK_B:
            offset = self.n_half
        else:
            raise DomainError(f"unknown block {block!r}")
        return offset + ell * ell - 1 + m + ell

    def label(self, index: int) -> Tuple[str, int, int]:
        if not 0 <= index < self.n_sph:
            raise DomainError(f"index {index} outside [0, {self.n_sph})")
        block = BLOCK_A if index < self.n_half else BLOCK_B
        local = index % self.n_half
        ell = int(np.floor(np.sqrt(local + 1)))
        m = local + 1 - ell * ell - ell
        return block, ell, m

    def labels(self) -> Iterator[Tuple[str, int, int]]:
        for block in (BLOCK_A, BLOCK_B):
            for ell in range(1, self.l_max + 1):
                for m in range(-ell, ell + 1):
                    yield block, ell, m

    def block_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """(ell, m) of every entry of one block, in index order."""
        return _block_arrays(self.l_max)

    def a_dipole_slice(self) -> slice:
        """The three (A, l=1) entries."""
        return slice(0, 3)


@lru_cache(maxsize=None)
def _block_arrays(l_max: int) -> Tuple[np.ndarray, np.ndarray]:
    ells = np.concatenate([np.full(2 * ell + 1, ell) for ell in range(1, l_max + 1)])
    ms = np.concatenate([np.arange(-ell, ell + 1) for ell in range(1, l_max + 1)])
    ells.flags.writeable = False
    ms.flags.writeable = False
    return ells, ms


class FieldKind(str, Enum):
    FREE = "free"
    OUTGOING = "outgoing"
    INCOMING = "incoming"

    @property
    def radial(self) -> Union[int, str]:
        return {FieldKind.FREE: "j", FieldKind.OUTGOING: 1, FieldKind.INCOMING: 2}[self]


@dataclass
class SphericalFieldCoeffs:
    """Multipole coefficients (A block then B block) of a field of a given kind."""

    coeffs: np.ndarray
    kind: FieldKind
    l_max: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        self.kind = FieldKind(self.kind)
        expected = ModeIndex(self.l_max).n_sph
        if self.coeffs.shape != (expected,):
            raise DomainError(f"coefficient vector has shape {self.coeffs.shape}, expected ({expected},)")

    @property
    def index(self) -> ModeIndex:
        return ModeIndex(self.l_max)

    @property
    def a(self) -> np.ndarray:
        return self.coeffs[: self.index.n_half]

    @property
    def b(self) -> np.ndarray:
        return self.coeffs[self.index.n_half:]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> Tuple["SphericalFieldCoeffs", float]:
        """Unit-norm copy and the norm that was divided out."""
        norm = self.norm()
        if norm == 0.0:
            raise DomainError("cannot normalize a zero field")
        return SphericalFieldCoeffs(self.coeffs / norm, self.kind, self.l_max), norm


# ---------------------------------------------------------------------------
# Polarizability models

@dataclass(frozen=True)
class BarePolarizability:
    alpha0: complex


@dataclass(frozen=True)
class ClausiusMossotti:
    """Sphere of radius R with permittivity eps (constant or eps(frequency))."""

    radius: float
    epsilon: Union[complex, Callable[[complex], complex]]

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError(f"sphere radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class PlasmaModel:
    """Sphere of radius R with eps(w) = 1 - w_p^2 / w^2."""

    radius: float
    omega_p: float

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError(f"sphere radius must be positive, got {self.radius}")

    def epsilon(self, frequency: complex) -> complex:
        return 1.0 - self.omega_p ** 2 / complex(frequency) ** 2


PolarizabilityModel = Union[BarePolarizability, ClausiusMossotti, PlasmaModel]


def clausius_mossotti(radius: float, epsilon: complex) -> complex:
    if epsilon == -2:
        raise PoleError("Clausius-Mossotti pole: eps = -2")
    if np.isinf(epsilon):
        return complex(4.0 * np.pi * radius ** 3)
    return complex(4.0 * np.pi * radius ** 3 * (epsilon - 1.0) / (epsilon + 2.0))


def bare_polarizability(model: PolarizabilityModel, frequency: complex = 0.0) -> complex:
    """
    Bare volume polarizability alpha0 at a complex frequency.

    Args:
        model: one of the polarizability variants
        frequency: real angular frequency w, or 1j * xi for imaginary frequencies

    Returns:
        alpha0 in volume units (k^3 alpha0 is dimensionless)
    """
    if isinstance(model, BarePolarizability):
        return complex(model.alpha0)
    if isinstance(model, ClausiusMossotti):
        eps = model.epsilon(frequency) if callable(model.epsilon) else model.epsilon
        return clausius_mossotti(model.radius, complex(eps))
    if isinstance(model, PlasmaModel):
        if frequency == 0:
            return complex(4.0 * np.pi * model.radius ** 3)
        return clausius_mossotti(model.radius, model.epsilon(frequency))
    raise DomainError(f"unknown polarizability model {model!r}")


def dressed_polarizability(alpha0: complex, k: float) -> complex:
    """Radiative-reaction corrected alpha = alpha0 / (1 - i k^3 alpha0 / 6 pi)."""
    denom = 1.0 - 1j * k ** 3 * alpha0 / (6.0 * np.pi)
    if denom == 0:
        raise SingularityError("radiative-reaction denominator vanishes")
    return alpha0 / denom


# ---------------------------------------------------------------------------
# Green tensors

def _separation(target, source) -> Tuple[float, np.ndarray]:
    diff = np.asarray(target, dtype=float) - np.asarray(source, dtype=float)
    r = float(np.linalg.norm(diff))
    if r == 0.0:
        raise CoincidenceError("Green tensor evaluated at coincident points")
    return r, diff / r


def green_tensor(target: CartesianVec3, source: CartesianVec3, k: complex) -> np.ndarray:
    """Dimensionless vacuum Green tensor G0(target, source)/k; k may be complex."""
    r, u = _separation(target, source)
    x = k * r
    uu = np.outer(u, u)
    pref = np.exp(1j * x) / (4.0 * np.pi * x)
    return pref * ((x * x + 1j * x - 1.0) / (x * x) * np.eye(3) - (x * x + 3j * x - 3.0) / (x * x) * uu)


def green_tensor_imag_freq(target: CartesianVec3, source: CartesianVec3, xi: float) -> np.ndarray:
    """
    Real tensor g = i G0/k at k = i xi / c.

    The structure-matrix blocks at imaginary frequency are -(xi/c)^3 alpha g.
    """
    if xi <= 0:
        raise DomainError(f"imaginary frequency must be positive, got {xi}")
    r, u = _separation(target, source)
    kappa = xi * r / SPEED_OF_LIGHT
    uu = np.outer(u, u)
    pref = np.exp(-kappa) / (4.0 * np.pi * kappa)
    return pref * ((kappa ** 2 + kappa + 1.0) / kappa ** 2 * np.eye(3)
                   - (kappa ** 2 + 3.0 * kappa + 3.0) / kappa ** 2 * uu)


# ---------------------------------------------------------------------------
# Vector spherical modes

def _radial(radial, ell: int, x: np.ndarray):
    if radial == "j":
        return riccati_bessel(ell, x)
    return riccati_hankel(int(radial), ell, x)


def _spherical_coords(points: np.ndarray):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(points, axis=1)
    theta = np.arctan2(np.hypot(points[:, 0], points[:, 1]), points[:, 2])
    phi = np.arctan2(points[:, 1], points[:, 0])
    return r, theta, phi


def _to_cartesian(theta, phi, comp_r, comp_t, comp_p) -> np.ndarray:
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    ex = comp_r * st * cp + comp_t * ct * cp - comp_p * sp
    ey = comp_r * st * sp + comp_t * ct * sp + comp_p * cp
    ez = comp_r * ct - comp_t * st
    return np.stack([ex, ey, ez], axis=-1)


def _modes_at(radial, ell: int, m: int, points: np.ndarray, k: float):
    """M and N of one (l, m) at many points, Cartesian, shape (n, 3) each."""
    r, theta, phi = _spherical_coords(points)
    n_pts = len(r)
    m_vec = np.zeros((n_pts, 3), dtype=complex)
    n_vec = np.zeros((n_pts, 3), dtype=complex)

    at_origin = r == 0.0
    if np.any(at_origin):
        if radial != "j":
            raise SingularityError("Hankel-type mode evaluated at the origin")
        if ell == 1:
            n_vec[at_origin] = f_matrix(1)[:, m + 1]

    rest = ~at_origin
    if not np.any(rest):
        return m_vec, n_vec

    x = k * r[rest]
    z, dz = _radial(radial, ell, x)
    p, pi, tau = angular_functions(ell, m, theta[rest])
    phase = np.exp(1j * m * phi[rest])
    root = np.sqrt(ell * (ell + 1.0))
    pref = 1.0 / (x * root)

    zeros = np.zeros_like(x, dtype=complex)
    m_vec[rest] = _to_cartesian(theta[rest], phi[rest], zeros,
                                -pref * z * pi * phase, -1j * pref * z * tau * phase)
    n_vec[rest] = _to_cartesian(theta[rest], phi[rest],
                                1j * pref * ell * (ell + 1) * z / x * p * phase,
                                1j * pref * dz * tau * phase,
                                -pref * dz * pi * phase)
    return m_vec, n_vec


def eval_vector_mode(kind: str, radial, ell: int, m: int, point: CartesianVec3, k: float) -> np.ndarray:
    """
    Evaluate M or N of order (l, m) at a point, in Cartesian components.

    Args:
        kind: "M" or "N"
        radial: 1 (outgoing), 2 (incoming) or "j" (free, Riccati-Bessel)
    """
    if kind not in ("M", "N"):
        raise DomainError(f"mode kind must be 'M' or 'N', got {kind!r}")
    if radial not in (1, 2, "j"):
        raise DomainError(f"radial kind must be 1, 2 or 'j', got {radial!r}")
    if ell < 1 or abs(m) > ell:
        raise DomainError(f"invalid mode labels (l={ell}, m={m})")
    m_vec, n_vec = _modes_at(radial, ell, m, np.asarray(point, dtype=float).reshape(1, 3), k)
    return (m_vec if kind == "M" else n_vec)[0]


def eval_field(phi: SphericalFieldCoeffs, points, k: float, which: str = "E") -> np.ndarray:
    """
    E (units P0/sqrt(eps0)) or H (units P0/sqrt(mu0)) of an expanded field.

    Accepts one point (3,) or many (n, 3); the output has the same leading shape.
    """
    if which not in ("E", "H"):
        raise DomainError(f"which must be 'E' or 'H', got {which!r}")
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    index = phi.index
    radial = phi.kind.radial
    a, b = phi.a, phi.b
    total = np.zeros((len(pts), 3), dtype=complex)
    for pos, (ell, m) in enumerate(zip(*index.block_arrays())):
        ca, cb = a[pos], b[pos]
        if ca == 0 and cb == 0:
            continue
        m_vec, n_vec = _modes_at(radial, int(ell), int(m), pts, k)
        if which == "E":
            total += ca * n_vec + 1j * cb * m_vec
        else:
            total += cb * n_vec - 1j * ca * m_vec
    return total[0] if single else total


def decompose_field(
    sampler: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]],
    kind: FieldKind,
    a: float,
    l_max: int,
    k: float,
) -> SphericalFieldCoeffs:
    """
    Recover multipole coefficients from the radial E and H on a sphere of radius a.

    Args:
        sampler: maps an (n, 3) array of points to (E_r, H_r), each of length n
        kind: FREE divides by psi_l(ka), OUTGOING by xi_l^(1)(ka)
        a: sphere radius
        l_max: truncation order
        k: wavenumber

    Returns:
        SphericalFieldCoeffs of the requested kind
    """
    kind = FieldKind(kind)
    if kind == FieldKind.INCOMING:
        raise DomainError("decomposition supports free and outgoing fields")
    index = ModeIndex(l_max)
    ka = k * a

    n_theta = 2 * l_max + 2
    n_phi = 4 * l_max + 4
    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(nodes)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi

    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    points = a * np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1)
    e_r, h_r = sampler(points.reshape(-1, 3))
    e_r = np.asarray(e_r, dtype=complex).reshape(n_theta, n_phi)
    h_r = np.asarray(h_r, dtype=complex).reshape(n_theta, n_phi)

    # phi integrals for every m at once: sum_phi f e^{-i m phi} dphi
    fft_e = np.fft.fft(e_r, axis=1) * (2.0 * np.pi / n_phi)
    fft_h = np.fft.fft(h_r, axis=1) * (2.0 * np.pi / n_phi)

    coeffs = np.zeros(index.n_sph, dtype=complex)
    for ell in range(1, l_max + 1):
        z, dz = _radial(kind.radial, ell, ka)
        if np.abs(z) == 0.0 or np.abs(z) < DECOMPOSITION_TOL * np.abs(dz):
            raise DecompositionError(f"radial function vanishes at ka={ka:.6g} for l={ell}", ell)
        scale = ka ** 2 / (1j * np.sqrt(ell * (ell + 1.0)) * z)
        for m in range(-ell, ell + 1):
            p, _, _ = angular_functions(ell, m, theta)
            col = m % n_phi
            coeffs[index.index(BLOCK_A, ell, m)] = scale * np.sum(weights * p * fft_e[:, col])
            coeffs[index.index(BLOCK_B, ell, m)] = scale * np.sum(weights * p * fft_h[:, col])
    return SphericalFieldCoeffs(coeffs, kind, l_max)


def plane_wave_coeffs(l_max: int) -> SphericalFieldCoeffs:
    """Free-field coefficients of E = e^{ikz} x-hat (unit amplitude)."""
    index = ModeIndex(l_max)
    coeffs = np.zeros(index.n_sph, dtype=complex)
    for ell in range(1, l_max + 1):
        amp = np.sqrt(np.pi * (2 * ell + 1))
        for m in (-1, 1):
            coeffs[index.index(BLOCK_A, ell, m)] = m * 1j ** ell * amp
            coeffs[index.index(BLOCK_B, ell, m)] = 1j ** (ell - 1) * amp
    return SphericalFieldCoeffs(coeffs, FieldKind.FREE, l_max)


def plane_wave_field(points, k: float) -> Tuple[np.ndarray, np.ndarray]:
    """E = e^{ikz} x-hat and H = e^{ikz} y-hat at (n, 3) points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    phase = np.exp(1j * k * pts[:, 2])
    zeros = np.zeros_like(phase)
    e = np.stack([phase, zeros, zeros], axis=-1)
    h = np.stack([zeros, phase, zeros], axis=-1)
    return e, h


def f_matrix(l_max: int, field: str = "E") -> np.ndarray:
    """
    3 x N_sph operator evaluating a free field at the origin.

    field="E" reads the (A, l=1) entries; field="H" reads the (B, l=1) entries.
    """
    index = ModeIndex(l_max)
    block = np.array([
        [1j, 0.0, -1j],
        [1.0, 0.0, 1.0],
        [0.0, np.sqrt(2.0) * 1j, 0.0],
    ]) / np.sqrt(12.0 * np.pi)
    f = np.zeros((3, index.n_sph), dtype=complex)
    if field == "E":
        f[:, 0:3] = block
    elif field == "H":
        f[:, index.n_half:index.n_half + 3] = block
    else:
        raise DomainError(f"field must be 'E' or 'H', got {field!r}")
    return f


def q_matrix(l_max: int) -> np.ndarray:
    """N_sph x 3 operator: outgoing coefficients of a unit dipole at the origin, Q = i F^dagger."""
    return 1j * f_matrix(l_max).conj().T
