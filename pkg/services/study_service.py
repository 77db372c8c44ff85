"""
Study Service
Runs the absorption and dispersion studies described by a RunConfig and
returns pandas tables
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Sequence

import numpy as np
import pandas as pd
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import hbar as HBAR

from services.cdm import DipoleEnsemble
from services.config import LatticeGeometry, RunConfig, ShellGeometry
from services.dispersion import (
    QuadratureSettings,
    default_xi0,
    dispersion_energy,
    pairwise_energy,
    phase_shift_from_scattering,
)
from services.em_core import PlasmaModel, plane_wave_coeffs
from services.errors import CollectiveError, ConfigError, ResonanceError
from services.geometry import LatticeSpec, ShellSpec, build_lattice, build_shell
from services.scattering import (
    absorbed_fraction,
    absorption_modes,
    collective_operators,
    isolated_absorption,
    mode_weights_by_degree,
)

logger = logging.getLogger(__name__)

NM = 1e-9
CONVENTIONS = "CS-phase Y_lm; CM alpha0=4piR^3(eps-1)/(eps+2); dressed alpha at real w; T_i0=T(-r_i)"


def _diagnostic(exc: Exception) -> str:
    if isinstance(exc, ResonanceError) and exc.condition_number is not None:
        return f"{type(exc).__name__}: cond={exc.condition_number:.3e}"
    return f"{type(exc).__name__}: {exc}"


class StudyService:
    """
    Batch driver for the collective absorption and dispersion studies.

    Every table row carries l_max and convention metadata; numerical failures
    inside scans become NaN rows with a diagnostic string.
    """

    def __init__(self, threads: int = 1):
        self.threads = max(1, int(threads))

    # ------------------------------------------------------------------
    # helpers

    def _map(self, fn: Callable, values: Sequence) -> List:
        if self.threads == 1 or len(values) < 2:
            return [fn(v) for v in values]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, values))

    @staticmethod
    def _shell(geometry: ShellGeometry, ka: float):
        """(ensemble, k) of the shell at reduced radius ka, SI units."""
        radius = geometry.radius_nm * NM
        k = geometry.kR / radius
        spec = ShellSpec(
            solid=geometry.solid,
            a=ka / k,
            radius=radius,
            eps_shell=geometry.eps_shell_complex,
            eps_center=geometry.eps_center_complex,
            shell_enabled=geometry.shell_enabled,
        )
        return build_shell(spec), k

    @staticmethod
    def _lattice(geometry: LatticeGeometry, step_nm: float) -> DipoleEnsemble:
        radius = geometry.radius_nm * NM
        model = PlasmaModel(radius, geometry.omega_p_ev * ELEMENTARY_CHARGE / HBAR)
        spec = LatticeSpec(geometry.dim, tuple(geometry.counts), step_nm * NM, radius, model)
        return build_lattice(spec)

    @staticmethod
    def _quadrature(config: RunConfig, threads: int = 1) -> QuadratureSettings:
        q = config.quadrature
        return QuadratureSettings(
            nodes=q.nodes,
            max_nodes=q.max_nodes,
            tolerance=q.tolerance,
            dressed_imag=q.dressed_imag,
            threads=threads,
        )

    @staticmethod
    def _metadata(config: RunConfig, table: pd.DataFrame) -> pd.DataFrame:
        table["l_max"] = config.l_max
        table["task"] = config.task
        table["conventions"] = CONVENTIONS
        if config.geometry.kind == "lattice":
            q = config.quadrature
            table["quadrature"] = f"mapped-GL nodes={q.nodes} max={q.max_nodes} tol={q.tolerance:g} dressed={q.dressed_imag}"
        return table

    # ------------------------------------------------------------------
    # absorption

    def _absorption_point(self, geometry: ShellGeometry, ka: float, l_max: int, rank_tol: float) -> Dict:
        ensemble, k = self._shell(geometry, ka)
        ops = collective_operators(ensemble, k, l_max)
        modes = absorption_modes(ops.a, rank_tol)
        iso = isolated_absorption(ensemble, k, l_max, 0, rank_tol)
        return {"ensemble": ensemble, "k": k, "ops": ops, "modes": modes, "iso": iso}

    def _scan_row(self, config: RunConfig, ka: float) -> Dict:
        geometry = config.geometry
        row = {"ka": ka, "a_nm": ka / geometry.kR * geometry.radius_nm, "kR": geometry.kR,
               "solid": geometry.solid.value}
        try:
            point = self._absorption_point(geometry, ka, config.l_max, config.rank_tol)
        except CollectiveError as exc:
            logger.warning(f"[SCAN] ka={ka:.6g} skipped: {_diagnostic(exc)}")
            row.update({"A_max": np.nan, "A0": np.nan, "relative_change": np.nan,
                        "eig_1": np.nan, "eig_2": np.nan, "eig_3": np.nan, "rank": np.nan,
                        "hermitian_defect": np.nan, "diagnostic": _diagnostic(exc)})
            return row
        values = point["modes"].eigenvalues
        a_max = float(values[0])
        a0 = float(point["iso"].eigenvalues[0])
        row.update({
            "A_max": a_max,
            "A0": a0,
            "relative_change": (a_max - a0) / a0 if a0 != 0 else 0.0,
            "eig_1": float(values[0]),
            "eig_2": float(values[1]),
            "eig_3": float(values[2]),
            "rank": point["modes"].rank,
            "hermitian_defect": point["ops"].hermitian_defect,
            "diagnostic": "",
        })
        return row

    def run_absorption_scan(self, config: RunConfig) -> pd.DataFrame:
        """One row per ka node: largest absorption eigenvalue against the isolated absorber."""
        ka_values = config.scan.values()
        logger.info(f"[SCAN] absorption scan over {len(ka_values)} ka nodes, l_max={config.l_max}")
        rows = self._map(lambda ka: self._scan_row(config, float(ka)), list(ka_values))
        table = pd.DataFrame(rows)
        table.attrs["units"] = {"ka": "1", "a_nm": "nm", "A_max": "1", "A0": "1"}
        return self._metadata(config, table)

    def run_absorption_modes(self, config: RunConfig) -> pd.DataFrame:
        """|coefficient|^2 per (block, l) of the absorbing modes at the configured ka."""
        geometry = config.geometry
        point = self._absorption_point(geometry, geometry.ka, config.l_max, config.rank_tol)
        values, vectors = point["modes"].absorbing
        rows = []
        for mode in range(min(3, len(values))):
            for (block, ell), weight in mode_weights_by_degree(vectors[:, mode], config.l_max).items():
                rows.append({"mode": mode + 1, "eigenvalue": float(values[mode]), "block": block,
                             "l": ell, "weight": weight, "ka": geometry.ka})
        table = pd.DataFrame(rows, columns=["mode", "eigenvalue", "block", "l", "weight", "ka"])
        table.attrs["units"] = {"weight": "1 (per mode sums to 1)", "ka": "1"}
        return self._metadata(config, table)

    def run_plane_wave_absorption(self, config: RunConfig) -> pd.DataFrame:
        """
        Absorbed fraction of the normalized plane wave e^{ikz} x-hat.

        projection_change isolates the change of the projection coefficient
        from the change of the absorption eigenvalue.
        """
        geometry = config.geometry
        point = self._absorption_point(geometry, geometry.ka, config.l_max, config.rank_tol)
        incident = plane_wave_coeffs(config.l_max)
        fraction = absorbed_fraction(point["modes"], incident)
        fraction0 = absorbed_fraction(point["iso"], incident)
        a_max = float(point["modes"].eigenvalues[0])
        a0 = float(point["iso"].eigenvalues[0])
        row = {
            "ka": geometry.ka,
            "fraction_collective": fraction,
            "fraction_isolated": fraction0,
            "relative_change": fraction / fraction0 - 1.0,
            "eigenvalue_change": a_max / a0 - 1.0,
            "projection_change": (fraction / a_max) / (fraction0 / a0) - 1.0,
            "orientation": f"{geometry.solid.value} standard frame, k along z, E along x",
        }
        table = pd.DataFrame([row])
        table.attrs["units"] = {"fraction_collective": "1", "fraction_isolated": "1"}
        return self._metadata(config, table)

    # ------------------------------------------------------------------
    # dispersion

    def _dispersion_row(self, config: RunConfig, step_nm: float, quad_threads: int) -> Dict:
        row = {"step_nm": step_nm}
        try:
            ensemble = self._lattice(config.geometry, step_nm)
            row["N"] = ensemble.n
            result = dispersion_energy(ensemble, self._quadrature(config, quad_threads))
        except CollectiveError as exc:
            logger.warning(f"[DISPERSION] step={step_nm:.6g} nm skipped: {_diagnostic(exc)}")
            row.update({"E_collective_J": np.nan, "E_pairwise_J": np.nan, "E_collective_eV": np.nan,
                        "E_pairwise_eV": np.nan, "relative_deviation": np.nan, "nodes": np.nan,
                        "converged": False, "diagnostic": _diagnostic(exc)})
            return row
        row.update({
            "E_collective_J": result.e_collective,
            "E_pairwise_J": result.e_pairwise,
            "E_collective_eV": result.e_collective_ev,
            "E_pairwise_eV": result.e_pairwise_ev,
            "relative_deviation": result.relative_deviation,
            "nodes": result.nodes,
            "converged": result.converged,
            "diagnostic": "" if result.converged else f"not converged (change {result.relative_change:.3e})",
        })
        return row

    def run_dispersion(self, config: RunConfig) -> pd.DataFrame:
        """Collective against pairwise Casimir-Polder energy, one row per lattice step."""
        steps = config.scan.values() if config.scan is not None else np.array([config.geometry.step_nm])
        logger.info(f"[DISPERSION] {len(steps)} lattice steps, dim={config.geometry.dim}")
        if len(steps) == 1:
            rows = [self._dispersion_row(config, float(steps[0]), self.threads)]
        else:
            rows = self._map(lambda s: self._dispersion_row(config, float(s), 1), list(steps))
        table = pd.DataFrame(rows)
        table.attrs["units"] = {"step_nm": "nm", "E_collective_J": "J", "E_collective_eV": "eV",
                                "E_pairwise_J": "J", "E_pairwise_eV": "eV"}
        return self._metadata(config, table)

    def run_pairwise_compare(self, config: RunConfig) -> pd.DataFrame:
        """Two-body energy of every pair next to the collective total at the configured step."""
        geometry = config.geometry
        ensemble = self._lattice(geometry, geometry.step_nm)
        settings = self._quadrature(config, self.threads)
        total = dispersion_energy(ensemble, settings)
        xi0 = default_xi0(ensemble)
        rows = []
        for i in range(ensemble.n):
            for j in range(i + 1, ensemble.n):
                pair = ensemble.subset([i, j])
                energy = pairwise_energy(pair, settings, n_nodes=total.nodes, xi0=xi0)
                rows.append({"i": i, "j": j,
                             "distance_nm": float(np.linalg.norm(pair.positions[0] - pair.positions[1])) / NM,
                             "E_pair_J": energy, "E_pair_eV": energy / ELEMENTARY_CHARGE})
        rows.append({"i": -1, "j": -1, "distance_nm": np.nan,
                     "E_pair_J": total.e_collective, "E_pair_eV": total.e_collective_ev})
        table = pd.DataFrame(rows)
        table["relative_deviation"] = total.relative_deviation
        table.attrs["units"] = {"distance_nm": "nm", "E_pair_J": "J", "E_pair_eV": "eV"}
        return self._metadata(config, table)

    # ------------------------------------------------------------------
    # convergence

    def _observable(self, config: RunConfig, l_max: int) -> float:
        """
        l_max-dependent target of the convergence check.

        Shell: relative change of the top absorption eigenvalue. Lattice: Im of
        ln det S - sum_i ln det S_i at the configured photon energy.
        """
        geometry = config.geometry
        if geometry.kind == "shell":
            point = self._absorption_point(geometry, geometry.ka, l_max, config.rank_tol)
            a0 = point["iso"].eigenvalues[0]
            return float(point["modes"].eigenvalues[0] / a0 - 1.0)
        ensemble = self._lattice(geometry, geometry.step_nm)
        omega = geometry.omega_ev * ELEMENTARY_CHARGE / HBAR
        return float(phase_shift_from_scattering(ensemble, omega, l_max).imag)

    def run_convergence_check(self, config: RunConfig) -> pd.DataFrame:
        """Observable over increasing l_max with successive relative changes."""
        orders = config.convergence_l_max
        name = "relative_change_A" if config.geometry.kind == "shell" else "phase_shift_imag"
        rows = []
        previous = None
        for l_max in orders:
            try:
                value = self._observable(config, l_max)
                diagnostic = ""
            except CollectiveError as exc:
                value, diagnostic = np.nan, _diagnostic(exc)
            change = np.nan
            if previous is not None and previous != 0 and np.isfinite(previous):
                change = abs(value - previous) / abs(previous)
            elif previous == 0 and value == 0:
                change = 0.0
            rows.append({"l_max": l_max, "observable": name, "value": value,
                         "relative_change": change, "diagnostic": diagnostic})
            previous = value
            logger.info(f"[CONVERGENCE] l_max={l_max} {name}={value:.10g}")
        table = pd.DataFrame(rows)
        table["task"] = config.task
        table["conventions"] = CONVENTIONS
        table.attrs["units"] = {"l_max": "1", "value": "1" if name == "relative_change_A" else "rad"}
        return table

    # ------------------------------------------------------------------

    def run(self, config: RunConfig) -> pd.DataFrame:
        runners = {
            "absorption_scan": self.run_absorption_scan,
            "absorption_modes": self.run_absorption_modes,
            "plane_wave_absorption": self.run_plane_wave_absorption,
            "dispersion_energy": self.run_dispersion,
            "pairwise_compare": self.run_pairwise_compare,
            "convergence_check": self.run_convergence_check,
        }
        if config.task not in runners:
            raise ConfigError(f"unknown task {config.task}")
        return runners[config.task](config)
