"""Semidiscrete right-hand side: advection in x, field drift in k, collisions.

State layout is an (N, n_x) array of cell unknowns. The x-advection is
first-order upwind on the sign of each cell's eta_x with charge-neutral
ghost values at the contacts. The field term moves mass between u-neighbor
cells through the annular faces, with face values upwinded on the sign of
E_x and zero inflow through the outer u-faces of the domain.

Everything here is dimensionless (time unit t_star, length unit x_star);
the wrapper accepts the field in V/m and the mesh size in meters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collision import CollisionMatrix, apply_collision
from .kgrid import KGrid
from .params import Scales


@dataclass(frozen=True)
class StateField:
    """f per (k-cell, x-interval) plus the current simulation time [s]."""
    values: np.ndarray   # (N, n_x)
    time: float = 0.0


@dataclass(frozen=True)
class BoundarySpec:
    """Charge-neutral inflow contacts with fixed dopings [1/m^3]."""
    left_doping: float
    right_doping: float

    def __post_init__(self):
        if not (self.left_doping > 0 and self.right_doping > 0):
            raise ValueError("contact dopings must be > 0")


def apply_bc(state: StateField, grid: KGrid, bc: BoundarySpec
             ) -> tuple[np.ndarray, np.ndarray]:
    """Ghost columns: boundary pdf rescaled so its density matches the contact."""
    f = state.values
    rho_l = float(grid.measure @ f[:, 0])
    rho_r = float(grid.measure @ f[:, -1])
    if rho_l <= 0.0 or rho_r <= 0.0:
        raise ValueError("boundary interval has non-positive density")
    k3 = grid.k_star ** 3
    ghost_l = f[:, 0] * (bc.left_doping / k3 / rho_l)
    ghost_r = f[:, -1] * (bc.right_doping / k3 / rho_r)
    return ghost_l, ghost_r


def rhs_core(values: np.ndarray, grid: KGrid, kmat: CollisionMatrix,
             efield_scaled: np.ndarray, dx_scaled: float,
             ghost_left: np.ndarray, ghost_right: np.ndarray) -> np.ndarray:
    """df/dt (per t_star) for fixed ghost data; linear in (values, ghosts)."""
    n_u, n_r = grid.n_u, grid.n_r
    n_x = values.shape[1]

    fext = np.empty((values.shape[0], n_x + 2))
    fext[:, 0] = ghost_left
    fext[:, 1:-1] = values
    fext[:, -1] = ghost_right
    d_minus = (fext[:, 1:-1] - fext[:, :-2]) / dx_scaled
    d_plus = (fext[:, 2:] - fext[:, 1:-1]) / dx_scaled
    eta = grid.eta_x
    adv_x = -eta[:, None] * np.where((eta > 0.0)[:, None], d_minus, d_plus)

    f3 = values.reshape(n_u, n_r, n_x)
    up = np.zeros_like(f3)
    up[:-1] = f3[1:]          # f of the u-upper neighbor, 0 above the top face
    dn = np.zeros_like(f3)
    dn[1:] = f3[:-1]          # f of the u-lower neighbor, 0 below the bottom face
    e_nonneg = (efield_scaled >= 0.0)[None, None, :]
    face_diff = np.where(e_nonneg, up - f3, f3 - dn)
    area3 = grid.area.reshape(n_u, n_r, 1)
    drift_k = (efield_scaled[None, None, :] * area3 * face_diff).reshape(values.shape)

    coll = apply_collision(kmat, values)
    return (adv_x + drift_k + coll) / grid.measure[:, None]


def rhs(state: StateField, grid: KGrid, kmat: CollisionMatrix,
        efield: np.ndarray, bc: BoundarySpec, scales: Scales,
        dx: float) -> np.ndarray:
    """df/dt (per t_star) with efield in V/m per interval and dx in meters."""
    efield = np.asarray(efield, dtype=float)
    if efield.shape != (state.values.shape[1],):
        raise ValueError("efield must have one value per x-interval")
    ghost_l, ghost_r = apply_bc(state, grid, bc)
    return rhs_core(state.values, grid, kmat, efield / scales.E_star,
                    dx / scales.x_star, ghost_l, ghost_r)
