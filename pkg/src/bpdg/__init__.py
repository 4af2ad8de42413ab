"""Deterministic Boltzmann-Poisson solver with piecewise-constant k-cells.

Subpackages: params (configuration and scales), band (Kane dispersion),
kgrid (k-space cells), collision (scattering matrix), mc_extract (Monte
Carlo coefficient extraction), transport (semidiscrete right-hand side),
field (Poisson solve), driver (time integration, moments, output).
"""

__version__ = "0.1.0"
