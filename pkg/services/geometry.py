"""
Geometry Service
Platonic shells around a central absorber and axis-aligned nanoparticle lattices
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Tuple

import numpy as np
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import hbar as HBAR

from services.cdm import DipoleEnsemble
from services.em_core import ClausiusMossotti, PlasmaModel, PolarizabilityModel
from services.errors import DomainError, OverlapError

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

# Gold plasma frequency, 9.0 eV / hbar in rad/s
GOLD_OMEGA_P = 9.0 * ELEMENTARY_CHARGE / HBAR

DEFAULT_EPS_SHELL = 10.0 + 0.0j
DEFAULT_EPS_CENTER = (np.sqrt(10.0) + 0.1j) ** 2


class Solid(str, Enum):
    TETRAHEDRON = "tetrahedron"
    OCTAHEDRON = "octahedron"
    CUBE = "cube"
    ICOSAHEDRON = "icosahedron"
    DODECAHEDRON = "dodecahedron"


VERTEX_COUNT = {
    Solid.TETRAHEDRON: 4,
    Solid.OCTAHEDRON: 6,
    Solid.CUBE: 8,
    Solid.ICOSAHEDRON: 12,
    Solid.DODECAHEDRON: 20,
}


def _cyclic(triples):
    out = []
    for x, y, z in triples:
        out.extend([(x, y, z), (z, x, y), (y, z, x)])
    return out


def platonic_vertices(solid: Solid) -> np.ndarray:
    """
    Unit-norm vertices in a fixed orientation.

    Octahedron on the axes, cube on the diagonals, tetrahedron on alternate
    cube corners, icosahedron and dodecahedron in the golden-ratio frame.
    """
    solid = Solid(solid)
    corners = np.array(list(product((-1.0, 1.0), repeat=3)))
    if solid == Solid.TETRAHEDRON:
        verts = corners[np.prod(corners, axis=1) > 0]
    elif solid == Solid.OCTAHEDRON:
        verts = np.vstack([np.eye(3), -np.eye(3)])
    elif solid == Solid.CUBE:
        verts = corners
    elif solid == Solid.ICOSAHEDRON:
        base = [(0.0, s1, s2 * GOLDEN) for s1 in (-1.0, 1.0) for s2 in (-1.0, 1.0)]
        verts = np.array(_cyclic(base))
    else:
        inv = 1.0 / GOLDEN
        base = [(0.0, s1 * inv, s2 * GOLDEN) for s1 in (-1.0, 1.0) for s2 in (-1.0, 1.0)]
        verts = np.vstack([corners, np.array(_cyclic(base))])
    return verts / np.linalg.norm(verts, axis=1)[:, None]


@dataclass(frozen=True)
class ShellSpec:
    """N-1 spheres at the vertices of a Platonic solid of radius a, one absorber at the origin."""

    solid: Solid
    a: float
    radius: float
    eps_shell: complex = DEFAULT_EPS_SHELL
    eps_center: complex = DEFAULT_EPS_CENTER
    shell_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "solid", Solid(self.solid))
        if self.radius <= 0:
            raise DomainError(f"sphere radius must be positive, got {self.radius}")
        if self.a <= 2.0 * self.radius:
            raise OverlapError(f"shell radius a={self.a:.6g} must exceed 2R={2.0 * self.radius:.6g}")

    @property
    def n(self) -> int:
        return 1 + (VERTEX_COUNT[self.solid] if self.shell_enabled else 0)


def build_shell(spec: ShellSpec) -> DipoleEnsemble:
    """Central dipole (index 0) plus shell dipoles at a * vertices."""
    positions = [np.zeros(3)]
    models = [ClausiusMossotti(spec.radius, complex(spec.eps_center))]
    if spec.shell_enabled:
        for vertex in platonic_vertices(spec.solid):
            positions.append(spec.a * vertex)
            models.append(ClausiusMossotti(spec.radius, complex(spec.eps_shell)))
    return DipoleEnsemble(np.array(positions), tuple(models))


@dataclass(frozen=True)
class LatticeSpec:
    """Axis-aligned array of identical spheres, center-to-center step."""

    dim: int
    counts: Tuple[int, ...]
    step: float
    radius: float
    model: PolarizabilityModel = field(default=None)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if self.dim not in (1, 2, 3):
            raise DomainError(f"lattice dimension must be 1, 2 or 3, got {self.dim}")
        if len(counts) != self.dim or any(c < 1 for c in counts):
            raise DomainError(f"counts {counts} do not match dimension {self.dim}")
        if self.radius <= 0:
            raise DomainError(f"sphere radius must be positive, got {self.radius}")
        if self.step <= 2.0 * self.radius and int(np.prod(counts)) > 1:
            raise OverlapError(f"lattice step {self.step:.6g} must exceed 2R={2.0 * self.radius:.6g}")
        if self.model is None:
            object.__setattr__(self, "model", PlasmaModel(self.radius, GOLD_OMEGA_P))

    @property
    def n(self) -> int:
        return int(np.prod(self.counts))


def build_lattice(spec: LatticeSpec) -> DipoleEnsemble:
    """Lattice centered at the origin, coordinates (i - (n-1)/2) * step along x, y, z."""
    axes = [(np.arange(n) - (n - 1) / 2.0) * spec.step for n in spec.counts]
    points = np.array(list(product(*axes)))
    positions = np.zeros((len(points), 3))
    positions[:, :spec.dim] = points
    return DipoleEnsemble(positions, tuple(spec.model for _ in range(len(positions))))
