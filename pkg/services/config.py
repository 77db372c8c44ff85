"""
Run Configuration
Declarative JSON run description validated with pydantic
"""

import json
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from services.errors import ConfigError
from services.geometry import DEFAULT_EPS_CENTER, Solid

SCHEMA_VERSION = "1.0"

SHELL_TASKS = ("absorption_scan", "absorption_modes", "plane_wave_absorption")
LATTICE_TASKS = ("dispersion_energy", "pairwise_compare")

Task = Literal[
    "absorption_scan",
    "absorption_modes",
    "plane_wave_absorption",
    "dispersion_energy",
    "pairwise_compare",
    "convergence_check",
]

# complex numbers travel as [re, im]
ComplexPair = Tuple[float, float]


class ShellGeometry(BaseModel):
    kind: Literal["shell"] = "shell"
    solid: Solid
    kR: float = Field(0.8, gt=0, description="size parameter of every sphere")
    ka: float = Field(float(np.pi), gt=0, description="reduced shell radius for single-point tasks")
    radius_nm: float = Field(20.0, gt=0)
    eps_shell: ComplexPair = (10.0, 0.0)
    eps_center: ComplexPair = (float(DEFAULT_EPS_CENTER.real), float(DEFAULT_EPS_CENTER.imag))
    shell_enabled: bool = True

    @property
    def eps_shell_complex(self) -> complex:
        return complex(*self.eps_shell)

    @property
    def eps_center_complex(self) -> complex:
        return complex(*self.eps_center)


class LatticeGeometry(BaseModel):
    kind: Literal["lattice"] = "lattice"
    dim: Literal[1, 2, 3]
    counts: List[int]
    step_nm: float = Field(100.0, gt=0, description="center-to-center spacing")
    radius_nm: float = Field(20.0, gt=0)
    omega_p_ev: float = Field(9.0, gt=0, description="plasma frequency as hbar * omega_p in eV")
    omega_ev: float = Field(2.5, gt=0, description="photon energy hbar * omega of the l_max convergence observable")

    @model_validator(mode="after")
    def _counts_match(self):
        if len(self.counts) != self.dim:
            raise ValueError(f"counts {self.counts} do not match dim={self.dim}")
        if any(c < 1 for c in self.counts):
            raise ValueError("every lattice count must be >= 1")
        return self


Geometry = Annotated[Union[ShellGeometry, LatticeGeometry], Field(discriminator="kind")]


class ScanConfig(BaseModel):
    axis: Literal["ka", "step_nm"]
    start: float = Field(gt=0)
    stop: float = Field(gt=0)
    nodes: int = Field(ge=1)

    @model_validator(mode="after")
    def _nonempty(self):
        if self.stop < self.start:
            raise ValueError(f"scan range [{self.start}, {self.stop}] is empty")
        if self.nodes > 1 and self.stop == self.start:
            raise ValueError("a multi-node scan needs start < stop")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.nodes)


class QuadratureConfig(BaseModel):
    nodes: int = Field(40, ge=2)
    max_nodes: int = Field(640, ge=2)
    tolerance: float = Field(1e-8, gt=0)
    dressed_imag: bool = False


class OutputConfig(BaseModel):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    stem: Optional[str] = None


class RunConfig(BaseModel):
    schema_version: Literal["1.0"] = SCHEMA_VERSION
    task: Task
    geometry: Geometry
    l_max: int = Field(16, ge=1, le=32)
    scan: Optional[ScanConfig] = None
    quadrature: QuadratureConfig = QuadratureConfig()
    output: OutputConfig = OutputConfig()
    rank_tol: float = Field(1e-10, gt=0, lt=1)
    convergence_l_max: List[int] = [8, 12, 16, 20, 24]
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("convergence_l_max")
    @classmethod
    def _valid_orders(cls, orders):
        if not orders or any(not 1 <= o <= 32 for o in orders):
            raise ValueError("convergence_l_max entries must lie in [1, 32]")
        return sorted(orders)

    @model_validator(mode="after")
    def _task_fits_geometry(self):
        kind = self.geometry.kind
        if self.task in SHELL_TASKS and kind != "shell":
            raise ValueError(f"task {self.task} needs a shell geometry")
        if self.task in LATTICE_TASKS and kind != "lattice":
            raise ValueError(f"task {self.task} needs a lattice geometry")
        if self.scan is not None:
            expected = "ka" if kind == "shell" else "step_nm"
            if self.scan.axis != expected:
                raise ValueError(f"{kind} geometry scans along {expected}, not {self.scan.axis}")
        if self.task == "absorption_scan" and self.scan is None:
            self.scan = ScanConfig(axis="ka", start=1.0, stop=8.0, nodes=141)
        return self


def parse_config(payload: Union[str, bytes, dict]) -> RunConfig:
    """Validate a JSON document (text or already-decoded dict)."""
    try:
        if isinstance(payload, dict):
            return RunConfig.model_validate(payload)
        return RunConfig.model_validate_json(payload)
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration: {exc}") from exc


def load_config(path: Union[str, Path]) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    return parse_config(text)


def config_schema() -> dict:
    return RunConfig.model_json_schema()
