"""
Special Functions
Legendre functions, spherical harmonics, Riccati-Bessel/Hankel functions and
Clebsch-Gordan columns consumed by the mode and translation services
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy.special import gammaln, lpmv, spherical_jn, spherical_yn

from services.errors import DomainError

ArrayLike = Union[float, complex, np.ndarray]

# Below this |sin(theta)| the pole limits replace the m / sin(theta) ratios
POLE_EPS = 1e-12


def _check_lm(ell: int, m: int) -> None:
    if ell < 0 or abs(m) > ell:
        raise DomainError(f"invalid mode labels (l={ell}, m={m})")


def _log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def assoc_legendre(ell: int, m: int, x: ArrayLike) -> ArrayLike:
    """
    Associated Legendre function P_l^m(x) with the Condon-Shortley phase.

    Negative orders use P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m.
    """
    _check_lm(ell, m)
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0):
        raise DomainError(f"assoc_legendre needs |x| <= 1, got {x}")
    if m >= 0:
        return lpmv(m, ell, x_arr)
    mp = -m
    ratio = np.exp(_log_factorial(ell - mp) - _log_factorial(ell + mp))
    return (-1.0) ** mp * ratio * lpmv(mp, ell, x_arr)


def _sectoral_step(m: int) -> float:
    return -np.sqrt((2.0 * m + 1.0) / (2.0 * m))


def _upward_coeffs(ell: int, m: int) -> Tuple[float, float]:
    """(a, b) of Pbar_l^m = a (cos(theta) Pbar_{l-1}^m - b Pbar_{l-2}^m)."""
    a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
    b = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
    return a, b


def _polar_part(ell: int, m: int, theta: ArrayLike) -> np.ndarray:
    """Y_{l,m}(theta, 0) for 0 <= m <= l, one column of normalized_legendre."""
    theta = np.asarray(theta, dtype=float)
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    value = np.full(theta.shape, np.sqrt(1.0 / (4.0 * np.pi)))
    for j in range(1, m + 1):
        value = _sectoral_step(j) * sin_t * value
    if ell == m:
        return value
    previous, current = value, np.sqrt(2.0 * m + 3.0) * cos_t * value
    for degree in range(m + 2, ell + 1):
        a, b = _upward_coeffs(degree, m)
        previous, current = current, a * (cos_t * current - b * previous)
    return current


def normalized_legendre(l_max: int, theta: ArrayLike) -> np.ndarray:
    """
    Polar parts Y_{l,m}(theta, 0) for 0 <= m <= l <= l_max, indexed [l, m].

    The sectoral seeds carry sin(theta) explicitly, so columns with m > 0 keep
    full relative accuracy next to the poles. Entries with m > l are zero.
    """
    if l_max < 0:
        raise DomainError(f"l_max must be >= 0, got {l_max}")
    theta = np.asarray(theta, dtype=float)
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    table = np.zeros((l_max + 1, l_max + 1) + theta.shape)
    sectoral = np.full(theta.shape, np.sqrt(1.0 / (4.0 * np.pi)))
    for m in range(l_max + 1):
        if m > 0:
            sectoral = _sectoral_step(m) * sin_t * sectoral
        table[m, m] = sectoral
        if m < l_max:
            table[m + 1, m] = np.sqrt(2.0 * m + 3.0) * cos_t * sectoral
        for ell in range(m + 2, l_max + 1):
            a, b = _upward_coeffs(ell, m)
            table[ell, m] = a * (cos_t * table[ell - 1, m] - b * table[ell - 2, m])
    return table


def spherical_harmonic(ell: int, m: int, theta: ArrayLike, phi: ArrayLike) -> ArrayLike:
    """Orthonormal Y_{l,m}(theta, phi) with the Condon-Shortley phase."""
    _check_lm(ell, m)
    phi = np.asarray(phi, dtype=float)
    mp = abs(m)
    y = _polar_part(ell, mp, theta) * np.exp(1j * mp * phi)
    if m < 0:
        y = (-1.0) ** mp * np.conj(y)
    return y


def ylm_table(l_max: int, theta: float, phi: float) -> np.ndarray:
    """
    All Y_{l,m}(theta, phi) for 0 <= l <= l_max at a single direction.

    Entry l*l + l + m holds Y_{l,m}.
    """
    ells = []
    ms = []
    for ell in range(l_max + 1):
        for m in range(ell + 1):
            ells.append(ell)
            ms.append(m)
    ells = np.array(ells)
    ms = np.array(ms)
    polar = normalized_legendre(l_max, float(theta))
    positive = polar[ells, ms] * np.exp(1j * ms * phi)

    table = np.zeros((l_max + 1) ** 2, dtype=complex)
    table[ells * ells + ells + ms] = positive
    neg = ms > 0
    table[ells[neg] * ells[neg] + ells[neg] - ms[neg]] = (-1.0) ** ms[neg] * np.conj(positive[neg])
    return table


def angular_functions(ell: int, m: int, theta: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Polar parts of the vector spherical modes.

    Args:
        ell, m: mode labels
        theta: polar angles (array)

    Returns:
        (p, pi, tau) with Y_{l,m} = p e^{i m phi}, pi = m p / sin(theta) and
        tau = d p / d theta, finite at both poles.
    """
    _check_lm(ell, m)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)

    p = np.real(spherical_harmonic(ell, m, theta, 0.0))
    if m < ell:
        p_next = np.real(spherical_harmonic(ell, m + 1, theta, 0.0))
        lam = np.sqrt((ell - m) * (ell + m + 1.0))
    else:
        p_next = np.zeros_like(theta)
        lam = 0.0

    pi = np.zeros_like(theta)
    tau = np.zeros_like(theta)
    regular = np.abs(sin_t) >= POLE_EPS
    pi[regular] = m * p[regular] / sin_t[regular]
    tau[regular] = m * cos_t[regular] / sin_t[regular] * p[regular] + lam * p_next[regular]

    pole = ~regular
    if np.any(pole) and abs(m) == 1:
        half = 0.5 * np.sqrt((2 * ell + 1) * ell * (ell + 1) / (4.0 * np.pi))
        north = pole & (cos_t > 0)
        south = pole & (cos_t < 0)
        sign = (-1.0) ** ell
        # north: pi = -K for both signs of m, tau = -m K
        pi[north] = -half
        tau[north] = -m * half
        # south: pi = (-1)^l K, tau = -m (-1)^l K
        pi[south] = sign * half
        tau[south] = -m * sign * half
    return p, pi, tau


def riccati_bessel(ell: int, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """psi_l(x) = x j_l(x) and its derivative; complex arguments are accepted."""
    if ell < 0:
        raise DomainError(f"riccati_bessel needs l >= 0, got {ell}")
    j = spherical_jn(ell, x)
    dj = spherical_jn(ell, x, derivative=True)
    return x * j, j + x * dj


def riccati_hankel(q: int, ell: int, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Riccati-Hankel xi_l^{(q)}(x) = x h_l^{(q)}(x) and its derivative.

    q = 1 is outgoing (e^{ix}), q = 2 incoming. Real positive x only.
    """
    if q not in (1, 2):
        raise DomainError(f"riccati_hankel kind must be 1 or 2, got {q}")
    if ell < 0:
        raise DomainError(f"riccati_hankel needs l >= 0, got {ell}")
    x_arr = np.asarray(x)
    if np.iscomplexobj(x_arr) or np.any(x_arr <= 0):
        raise DomainError("riccati_hankel is defined for real x > 0")

    sign = 1.0 if q == 1 else -1.0
    h = spherical_jn(ell, x_arr) + sign * 1j * spherical_yn(ell, x_arr)
    dh = spherical_jn(ell, x_arr, derivative=True) + sign * 1j * spherical_yn(ell, x_arr, derivative=True)
    return x_arr * h, h + x_arr * dh


def spherical_bessel_j(ell: int, x: ArrayLike) -> ArrayLike:
    """j_l(x) = psi_l(x)/x, with the limit values at x = 0."""
    if ell < 0:
        raise DomainError(f"spherical_bessel_j needs l >= 0, got {ell}")
    return spherical_jn(ell, x)


@dataclass(frozen=True)
class CgColumn:
    """<alpha, beta | l1, m1, l2, m2> for alpha = 0 .. l1 + l2."""

    l1: int
    m1: int
    l2: int
    m2: int
    values: np.ndarray

    @property
    def beta(self) -> int:
        return self.m1 + self.m2

    @property
    def alpha_min(self) -> int:
        return max(abs(self.beta), abs(self.l1 - self.l2))

    def __getitem__(self, alpha: int) -> float:
        if alpha < 0 or alpha >= len(self.values):
            return 0.0
        return float(self.values[alpha])


@lru_cache(maxsize=None)
def cg_values(l1: int, m1: int, l2: int, m2: int) -> np.ndarray:
    """Read-only, cached column of <alpha, m1+m2 | l1, m1, l2, m2>."""
    beta = m1 + m2
    top = l1 + l2
    values = np.zeros(top + 1)
    alpha_min = max(abs(beta), abs(l1 - l2))
    if alpha_min > top:
        values.flags.writeable = False
        return values

    log_top = 0.5 * (
        _log_factorial(top + beta) + _log_factorial(top - beta)
        - _log_factorial(l1 + m1) - _log_factorial(l1 - m1)
        - _log_factorial(l2 + m2) - _log_factorial(l2 - m2)
    ) + 0.5 * (_log_factorial(2 * l1) + _log_factorial(2 * l2) - _log_factorial(2 * top))
    values[top] = np.exp(log_top)

    c12 = l1 * (l1 + 1) - l2 * (l2 + 1)

    def xi(alpha):
        a1 = (alpha + 1) ** 2
        return ((a1 - beta ** 2) * (a1 - (l2 - l1) ** 2) * ((top + 1) ** 2 - a1)
                / (a1 * (4.0 * a1 - 1.0)))

    for alpha in range(top - 1, alpha_min - 1, -1):
        zeta = (m1 - m2) - beta * c12 / ((alpha + 1.0) * (alpha + 2.0))
        xi_a = xi(alpha)
        upper2 = values[alpha + 2] if alpha + 2 <= top else 0.0
        xi_next = xi(alpha + 1) if alpha + 2 <= top else 0.0
        values[alpha] = zeta / np.sqrt(xi_a) * values[alpha + 1] - np.sqrt(xi_next / xi_a) * upper2

    values.flags.writeable = False
    return values


def clebsch_gordan_column(l1: int, m1: int, l2: int, m2: int) -> CgColumn:
    """
    Clebsch-Gordan coefficients <alpha, m1+m2 | l1, m1, l2, m2> for every alpha.

    Computed by downward recurrence from the stretched value at alpha = l1 + l2,
    whose factorials are evaluated through log-gamma.
    """
    _check_lm(l1, m1)
    _check_lm(l2, m2)
    return CgColumn(l1, m1, l2, m2, cg_values(l1, m1, l2, m2))


def a_coeff(alpha: int, beta: int, l1: int, m1: int, l2: int, m2: int) -> float:
    """Gaunt-type coefficient a(alpha, beta | l1, m1, l2, m2) of the translation blocks."""
    if beta != m1 + m2:
        raise DomainError(f"a_coeff needs beta = m1 + m2, got beta={beta}, m1+m2={m1 + m2}")
    cg = clebsch_gordan_column(l1, m1, l2, m2)
    cg0 = clebsch_gordan_column(l1, 0, l2, 0)
    pref = np.sqrt((2 * l1 + 1) * (2 * l2 + 1) / (4.0 * np.pi * (2 * alpha + 1)))
    return float(pref * cg[alpha] * cg0[alpha])
