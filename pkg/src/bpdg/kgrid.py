"""Annular k-space cells in cylindrical coordinates and their coefficients.

Cells are rectangles [u_a, u_b] x [r_a, r_b] in the dimensionless (u, r)
half-plane (theta integrated out analytically); u is aligned with the
transport axis. Per cell we precompute the measure, the x-component of the
velocity integral (eta_x) and the mean energy; everything is stored
nondimensional (k in units of k_star, velocities in units of hbar k_star/m*).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .band import BandModel, ScaledBand
from .params import DeviceConfig, Scales

_GL_ORDER = 8


def _gauss_nodes(order: int = _GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    # enforce exact +/- symmetry of the node set
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


@dataclass(frozen=True)
class KCell:
    index: int
    u_a: float
    u_b: float
    r_a: float
    r_b: float
    measure: float        # cell volume / k_star^3
    eta_x: float          # integral of v_x over the cell / (k_star^3 v_star)
    mean_energy: float    # eV
    up_neighbor: Optional[int]    # toward larger u
    down_neighbor: Optional[int]  # toward smaller u


class KGrid:
    """Tensor-product decomposition of the bounded k-domain."""

    def __init__(self, u_pts: np.ndarray, r_pts: np.ndarray,
                 band: BandModel, k_star: float):
        u_pts = np.asarray(u_pts, dtype=float)
        r_pts = np.asarray(r_pts, dtype=float)
        if u_pts.ndim != 1 or u_pts.size < 2 or np.any(np.diff(u_pts) <= 0):
            raise ValueError("u breakpoints must be strictly increasing, length >= 2")
        if r_pts.ndim != 1 or r_pts.size < 2 or np.any(np.diff(r_pts) <= 0):
            raise ValueError("r breakpoints must be strictly increasing, length >= 2")
        if r_pts[0] < 0:
            raise ValueError("r breakpoints must be >= 0")
        self.u_pts = u_pts
        self.r_pts = r_pts
        self.n_u = u_pts.size - 1
        self.n_r = r_pts.size - 1
        self.n_cells = self.n_u * self.n_r
        self.k_star = k_star
        self.band = band
        self.sband = ScaledBand(band, k_star)

        # cell index = iu * n_r + ir
        iu, ir = np.divmod(np.arange(self.n_cells), self.n_r)
        self.u_lo = u_pts[iu]
        self.u_hi = u_pts[iu + 1]
        self.r_lo = r_pts[ir]
        self.r_hi = r_pts[ir + 1]

        self.measure = np.pi * (self.u_hi - self.u_lo) * (self.r_hi**2 - self.r_lo**2)
        self.area = np.pi * (self.r_hi**2 - self.r_lo**2)  # annular face area / k_star^2

        # radial span of each cell (distance of rectangle to the origin)
        du0 = np.where((self.u_lo <= 0.0) & (self.u_hi >= 0.0), 0.0,
                       np.minimum(np.abs(self.u_lo), np.abs(self.u_hi)))
        self.s_min = np.hypot(du0, self.r_lo)
        self.s_max = np.hypot(np.maximum(np.abs(self.u_lo), np.abs(self.u_hi)), self.r_hi)

        self.eta_x, self.mean_energy = self._cell_quadratures()

        up = np.where(iu < self.n_u - 1, np.arange(self.n_cells) + self.n_r, -1)
        dn = np.where(iu > 0, np.arange(self.n_cells) - self.n_r, -1)
        self._up = up
        self._dn = dn

    def _cell_quadratures(self):
        """Gauss-Legendre tensor quadrature of v_x and energy over each cell."""
        x, w = _gauss_nodes()
        cu = 0.5 * (self.u_lo + self.u_hi)
        hu = 0.5 * (self.u_hi - self.u_lo)
        cr = 0.5 * (self.r_lo + self.r_hi)
        hr = 0.5 * (self.r_hi - self.r_lo)
        # nodes: (cells, i, j)
        un = cu[:, None, None] + hu[:, None, None] * x[None, :, None]
        rn = cr[:, None, None] + hr[:, None, None] * x[None, None, :]
        wij = w[None, :, None] * w[None, None, :]
        s = np.hypot(un, rn)
        jac = (hu * hr)[:, None, None] * 2.0 * np.pi
        eta = np.sum(wij * self.sband.vx_scaled(un, s) * rn, axis=(1, 2)) * jac[:, 0, 0]
        e_int = np.sum(wij * self.sband.e_of_s(s) * rn, axis=(1, 2)) * jac[:, 0, 0]
        return eta, e_int / self.measure

    @property
    def cells(self) -> list[KCell]:
        return [KCell(index=i, u_a=self.u_lo[i], u_b=self.u_hi[i],
                      r_a=self.r_lo[i], r_b=self.r_hi[i],
                      measure=self.measure[i], eta_x=self.eta_x[i],
                      mean_energy=self.mean_energy[i],
                      up_neighbor=int(self._up[i]) if self._up[i] >= 0 else None,
                      down_neighbor=int(self._dn[i]) if self._dn[i] >= 0 else None)
                for i in range(self.n_cells)]

    def locate_many(self, u, r) -> np.ndarray:
        """Cell indices for points (u, r); -1 for out-of-domain points.

        Binning is half-open, [a, b): a point exactly on the upper domain
        boundary is out of domain.
        """
        u = np.asarray(u, dtype=float)
        r = np.asarray(r, dtype=float)
        iu = np.searchsorted(self.u_pts, u, side="right") - 1
        ir = np.searchsorted(self.r_pts, r, side="right") - 1
        ok = (iu >= 0) & (iu < self.n_u) & (ir >= 0) & (ir < self.n_r)
        return np.where(ok, iu * self.n_r + ir, -1)

    def locate(self, u: float, r: float) -> int:
        return int(self.locate_many(u, r))

    def domain_volume(self) -> float:
        """Measure of the whole k-domain / k_star^3."""
        return np.pi * (self.u_pts[-1] - self.u_pts[0]) * self.r_pts[-1] ** 2

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["index", "u_a", "u_b", "r_a", "r_b",
                         "measure", "eta_x", "mean_energy_ev"])
            for i in range(self.n_cells):
                wr.writerow([i, repr(self.u_lo[i]), repr(self.u_hi[i]),
                             repr(self.r_lo[i]), repr(self.r_hi[i]),
                             repr(self.measure[i]), repr(self.eta_x[i]),
                             repr(self.mean_energy[i])])


def symmetric_breakpoints(half_extent: float, n: int) -> np.ndarray:
    """n+1 uniform breakpoints on [-half_extent, half_extent], exactly mirrored."""
    t = np.linspace(-half_extent, half_extent, n + 1)
    return 0.5 * (t - t[::-1])


def build_grid(cfg: DeviceConfig, band: BandModel, scales: Scales) -> KGrid:
    """Uniform tensor grid over [-u_max, u_max] x [0, r_max]."""
    cfg.validate()
    u_pts = symmetric_breakpoints(cfg.u_max, cfg.n_u)
    r_pts = np.linspace(0.0, cfg.r_max, cfg.n_r + 1)
    return KGrid(u_pts, r_pts, band, scales.k_star)
