"""Numerical services for collective dipole scattering and dispersion studies."""
