"""Kane nonparabolic energy band: dispersion, group velocity and inverse.

The dispersion solves eps*(1 + alpha*eps) = hbar^2 |k|^2 / (2 m*), with the
parabolic band as the alpha = 0 special case. Any replacement band model only
needs the three callables below (energy, group velocity, inverse); only the
analytic Kane band ships.

All energies are in eV, wave vectors in 1/m, velocities in m/s.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import CONST


@dataclass(frozen=True)
class BandModel:
    kind: str = "kane"          # "kane" | "parabolic"
    m_star: float = 0.32 * CONST.m_e   # kg
    alpha_kane: float = 0.5            # 1/eV

    def __post_init__(self):
        if self.kind not in ("kane", "parabolic"):
            raise ValueError(f"unknown band kind {self.kind!r}")
        if self.kind == "parabolic" and self.alpha_kane != 0.0:
            raise ValueError("parabolic band requires alpha_kane = 0")
        if not self.m_star > 0:
            raise ValueError("m_star must be > 0")
        if self.alpha_kane < 0:
            raise ValueError("alpha_kane must be >= 0")


def energy_of_norm(band: BandModel, k_abs):
    """Energy [eV] at wave-vector magnitude |k| [1/m]."""
    k_abs = np.asarray(k_abs, dtype=float)
    gamma = (CONST.hbar * k_abs) ** 2 / (2.0 * band.m_star * CONST.q)  # eV
    # positive root of eps(1 + a*eps) = gamma, written to avoid cancellation
    return 2.0 * gamma / (1.0 + np.sqrt(1.0 + 4.0 * band.alpha_kane * gamma))


def energy(band: BandModel, k):
    """Energy [eV] at wave vector k (3-vector or (..., 3) array, 1/m)."""
    k = np.asarray(k, dtype=float)
    return energy_of_norm(band, np.sqrt(np.sum(k * k, axis=-1)))


def group_velocity(band: BandModel, k):
    """(1/hbar) grad_k eps = hbar k / (m* (1 + 2 alpha eps)), in m/s."""
    k = np.asarray(k, dtype=float)
    eps = energy(band, k)
    denom = band.m_star * (1.0 + 2.0 * band.alpha_kane * eps)
    return CONST.hbar * k / np.expand_dims(denom, -1) if k.ndim > 1 \
        else CONST.hbar * k / denom


def wavevector_of_energy(band: BandModel, energy_ev):
    """|k| [1/m] with energy_of_norm(band, |k|) = energy_ev; exact inverse."""
    e = np.asarray(energy_ev, dtype=float)
    if np.any(e < 0):
        raise ValueError("energy must be >= 0")
    gamma_j = e * (1.0 + band.alpha_kane * e) * CONST.q  # J
    return np.sqrt(2.0 * band.m_star * gamma_j) / CONST.hbar


class ScaledBand:
    """Band functions of the dimensionless radius s = |k| / k_star.

    Precomputes gamma(s) = eps_b * s^2 with eps_b = hbar^2 k_star^2/(2 m* q)
    in eV, so collision/grid quadratures stay fully dimensionless.
    """

    def __init__(self, band: BandModel, k_star: float):
        self.band = band
        self.k_star = k_star
        self.eps_b = (CONST.hbar * k_star) ** 2 / (2.0 * band.m_star * CONST.q)  # eV
        self.alpha = band.alpha_kane  # 1/eV

    def e_of_s(self, s):
        """Energy [eV] at radius s."""
        gamma = self.eps_b * np.square(s)
        return 2.0 * gamma / (1.0 + np.sqrt(1.0 + 4.0 * self.alpha * gamma))

    def de_ds(self, s):
        """d(energy)/ds [eV] at radius s."""
        gamma = self.eps_b * np.square(s)
        return 2.0 * self.eps_b * s / np.sqrt(1.0 + 4.0 * self.alpha * gamma)

    def s_of_e(self, e):
        """Radius s at energy e [eV] (e >= 0)."""
        return np.sqrt(np.asarray(e, dtype=float) * (1.0 + self.alpha * np.asarray(e)) / self.eps_b)

    def vx_scaled(self, u, s):
        """x-velocity in units of hbar*k_star/m*: u / (1 + 2 alpha eps(s))."""
        return u / (1.0 + 2.0 * self.alpha * self.e_of_s(s))
