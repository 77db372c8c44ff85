import sys
import os

import numpy as np

# Add project root to path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from services.em_core import ModeIndex, f_matrix, green_tensor, plane_wave_coeffs, q_matrix
from services.geometry import ShellSpec, Solid, build_shell
from services.scattering import collective_operators, unitarity_defect
from services.translation import cdos_operator, translation_operator


def report(name, error, tol):
    status = "SUCCESS" if error <= tol else "FAILURE"
    print(f"   {status}: {name} (max error {error:.3e}, tolerance {tol:.0e})")
    return error <= tol


def verify_origin_operators(l_max=8):
    print("1. Origin operators F and Q")
    f, q = f_matrix(l_max), q_matrix(l_max)
    ok = report("F F^dagger = I/(6 pi)", np.max(np.abs(f @ f.conj().T - np.eye(3) / (6 * np.pi))), 1e-14)
    ok &= report("F Q = i I/(6 pi)", np.max(np.abs(f @ q - 1j * np.eye(3) / (6 * np.pi))), 1e-14)
    return ok


def verify_plane_wave_translation(l_max=24):
    print("2. Translated plane wave")
    rho = np.array([0.3, -0.2, 0.5])
    pw = plane_wave_coeffs(l_max).coeffs
    keep = np.array([i for i, (_, ell, _) in enumerate(ModeIndex(l_max).labels()) if ell <= 4])
    shifted = translation_operator(rho, 1.0, l_max) @ pw
    error = np.max(np.abs(shifted[keep] - np.exp(-1j * rho[2]) * pw[keep]))
    return report("T(rho) phi_pw = exp(-i k rho_z) phi_pw on l <= 4", error, 1e-10)


def verify_cdos(l_max=16):
    print("3. Translated free Green operator")
    r_i = np.array([0.0, 0.0, np.pi / 2])
    target = 1j * green_tensor(r_i, -r_i, 1.0).imag
    error = np.max(np.abs(cdos_operator(r_i, -r_i, 1.0, l_max) - target))
    return report(f"F T_i0 T_0j Q -> i Im G0 at l_max={l_max}", error, 1e-6)


def verify_lossless_shell(l_max=10):
    print("4. Lossless cube shell")
    spec = ShellSpec(Solid.CUBE, a=200e-9, radius=20e-9, eps_center=10.0)
    k = np.pi / spec.a
    ops = collective_operators(build_shell(spec), k, l_max)
    ok = report("S^dagger S = I", unitarity_defect(ops.s), 1e-10)
    ok &= report("A = 0", float(np.max(np.abs(np.linalg.eigvalsh(ops.a)))), 1e-10)
    return ok


if __name__ == "__main__":
    checks = [verify_origin_operators, verify_plane_wave_translation, verify_cdos, verify_lossless_shell]
    passed = 0
    for check in checks:
        try:
            passed += bool(check())
        except Exception as e:
            print(f"   FAILURE: {check.__name__} raised {type(e).__name__}: {e}")
    print(f"\n{passed}/{len(checks)} checks passed")
    sys.exit(0 if passed == len(checks) else 1)
