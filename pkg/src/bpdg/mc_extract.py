"""One-shot Monte Carlo extraction of the collision-matrix coefficients.

For each source cell, an ensemble of weighted particles is seeded uniformly
in the cell, evolved for one short step of the space-homogeneous, field-free
kinetic equation with the null-collision DSMC sampler, and binned; inverting
the first-order-in-dt balance then yields one column of the cell-pair rate
matrix.

Randomness: each source cell gets its own generator seeded with
SeedSequence(entropy=master_seed, spawn_key=(cell_index,)), so results are
bit-reproducible and independent of how columns are scheduled.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .band import BandModel, ScaledBand
from .collision import (CollisionMatrix, ScatterMechanism, integrate_gamma_cells,
                        partial_rates_scaled)
from .kgrid import KGrid
from .params import Scales


@dataclass
class ParticleEnsemble:
    """Dimensionless particle coordinates with a common statistical weight."""
    u: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    weight: float       # cell measure / n_particles (k_star^3 units)
    source_cell: int

    @property
    def n(self) -> int:
        return self.u.size


@dataclass
class EvolveStats:
    n_events: int = 0   # majorant (candidate) events processed
    n_real: int = 0     # accepted scattering events
    n_null: int = 0     # self-scattering events (rate thinning)
    n_escape: int = 0   # accepted events rejected for leaving the k-domain


@dataclass
class ExtractionReport:
    k_mc: CollisionMatrix
    n_particles: int
    dt: float           # s
    seed: int
    n_escape_events: int
    n_escaped_particles: int   # particles binned outside the domain (0 by design)
    max_err_abs: float | None = None
    mean_err_abs: float | None = None
    max_err_rel: float | None = None
    mean_err_rel: float | None = None


def majorant_rate_scaled(mechs: Sequence[ScatterMechanism], grid: KGrid) -> float:
    """Upper bound of the full-sphere total rate over the domain (1/t_star units).

    Each partial rate grows with energy, so the supremum sits at the domain
    corner.
    """
    s_dom = float(np.hypot(max(abs(grid.u_pts[0]), abs(grid.u_pts[-1])), grid.r_pts[-1]))
    e_max = float(grid.sband.e_of_s(s_dom))
    return float(partial_rates_scaled(mechs, grid.sband, np.array([e_max])).sum())


def default_dt(mechs: Sequence[ScatterMechanism], grid: KGrid, scales: Scales,
               events_per_particle: float = 0.05) -> float:
    """Default extraction step [s]: events_per_particle / majorant rate."""
    gmax = majorant_rate_scaled(mechs, grid)
    if gmax == 0.0:
        return scales.t_star
    return events_per_particle / gmax * scales.t_star


def seed_uniform(grid: KGrid, cell: int, n: int, rng: np.random.Generator) -> ParticleEnsemble:
    """n particles uniform w.r.t. the k-measure inside one cell.

    u is uniform; r uses the inverse CDF of the linear density r; theta is
    uniform on [0, 2 pi).
    """
    if not 0 <= cell < grid.n_cells:
        raise ValueError(f"cell index {cell} out of range")
    if n < 1:
        raise ValueError("need at least one particle")
    u = rng.uniform(grid.u_lo[cell], grid.u_hi[cell], n)
    r2 = rng.uniform(grid.r_lo[cell] ** 2, grid.r_hi[cell] ** 2, n)
    r = np.sqrt(r2)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    return ParticleEnsemble(u=u, r=r, theta=theta,
                            weight=float(grid.measure[cell]) / n, source_cell=cell)


def evolve_homogeneous(ens: ParticleEnsemble, mechs: Sequence[ScatterMechanism],
                       band: BandModel, grid: KGrid, scales: Scales,
                       dt: float, rng: np.random.Generator
                       ) -> tuple[ParticleEnsemble, EvolveStats]:
    """Advance the ensemble by dt [s] of field-free homogeneous dynamics.

    Null-collision sampling: candidate event counts are Poisson with the
    majorant rate; a candidate is a real scattering event with probability
    Gamma(k)/Gamma_max, in which case a mechanism is picked proportionally
    to its partial rate and the particle is placed isotropically on the
    energy-shifted shell. A final state outside the k-domain rejects the
    event (self-scattering) and bumps the escape counter. Without a field,
    positions between events never change, so only event counts matter.
    """
    sband = ScaledBand(band, grid.k_star)
    gmax = majorant_rate_scaled(mechs, grid)
    dt_scaled = dt / scales.t_star
    if dt_scaled <= 0.0:
        raise ValueError("dt must be > 0")
    lam = gmax * dt_scaled
    if lam > 0.1 * (1.0 + 1e-12):
        raise ValueError(
            f"dt * Gamma_max = {lam:.3g} exceeds 0.1; reduce dt for a valid "
            "first-order extraction step")

    u = ens.u.copy()
    r = ens.r.copy()
    theta = ens.theta.copy()
    stats = EvolveStats()
    if lam == 0.0:
        return ParticleEnsemble(u, r, theta, ens.weight, ens.source_cell), stats

    shifts = np.array([m.energy_shift for m in mechs])
    n_events = rng.poisson(lam, ens.n)
    for round_no in range(1, int(n_events.max()) + 1 if ens.n else 1):
        idx = np.nonzero(n_events >= round_no)[0]
        if idx.size == 0:
            break
        stats.n_events += idx.size
        eps = sband.e_of_s(np.hypot(u[idx], r[idx]))
        prates = partial_rates_scaled(mechs, sband, eps)  # (n_mech, k)
        gtot = prates.sum(axis=0)
        accept = rng.random(idx.size) * gmax < gtot
        stats.n_null += int(np.count_nonzero(~accept))
        ridx = idx[accept]
        if ridx.size == 0:
            continue
        cum = np.cumsum(prates[:, accept], axis=0)
        pick = rng.random(ridx.size) * cum[-1]
        mech_i = np.sum(pick[None, :] >= cum, axis=0)
        mech_i = np.minimum(mech_i, len(mechs) - 1)
        e_fin = eps[accept] + shifts[mech_i]
        s_fin = sband.s_of_e(np.maximum(e_fin, 0.0))
        mu = rng.uniform(-1.0, 1.0, ridx.size)
        th_new = rng.uniform(0.0, 2.0 * np.pi, ridx.size)
        u_new = s_fin * mu
        r_new = s_fin * np.sqrt(np.maximum(1.0 - mu * mu, 0.0))
        inside = grid.locate_many(u_new, r_new) >= 0
        stats.n_escape += int(np.count_nonzero(~inside))
        stats.n_real += int(np.count_nonzero(inside))
        tgt = ridx[inside]
        u[tgt] = u_new[inside]
        r[tgt] = r_new[inside]
        theta[tgt] = th_new[inside]
    out = ParticleEnsemble(u=u, r=r, theta=theta, weight=ens.weight,
                           source_cell=ens.source_cell)
    return out, stats


def column_rng(master_seed: int, cell: int) -> np.random.Generator:
    """Documented substream rule: SeedSequence(master_seed, spawn_key=(cell,))."""
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed,
                                                        spawn_key=(cell,)))


def matrix_errors(k_mc: np.ndarray, k_ref: np.ndarray) -> dict[str, float]:
    """Absolute and max-entry-normalized error summaries over all entries."""
    diff = np.abs(k_mc - k_ref)
    ref_max = float(k_ref.max())
    return {
        "max_err_abs": float(diff.max()),
        "mean_err_abs": float(diff.mean()),
        "max_err_rel": float(diff.max() / ref_max) if ref_max > 0 else float("nan"),
        "mean_err_rel": float(diff.mean() / ref_max) if ref_max > 0 else float("nan"),
    }


def extract_k_matrix(grid: KGrid, band: BandModel, mechs: Sequence[ScatterMechanism],
                     n_particles: int, dt: float, seed: int, scales: Scales,
                     reference: CollisionMatrix | None = None,
                     gamma_int: np.ndarray | None = None) -> ExtractionReport:
    """Estimate the full matrix with one short DSMC solve per source cell.

    dt is in seconds. gamma_int (the quadrature of the total rate per cell)
    is computed on the fly unless provided; reference, if given, is only
    used to fill the error fields of the report.
    """
    if n_particles < 1000:
        raise ValueError("n_particles must be >= 1e3 for a usable estimate")
    n = grid.n_cells
    if gamma_int is None:
        gamma_int = integrate_gamma_cells(grid, mechs)
    dt_scaled = dt / scales.t_star
    K = np.zeros((n, n))
    esc_events = 0
    esc_particles = 0
    for beta in range(n):
        rng = column_rng(seed, beta)
        ens = seed_uniform(grid, beta, n_particles, rng)
        ens, stats = evolve_homogeneous(ens, mechs, band, grid, scales, dt, rng)
        esc_events += stats.n_escape
        loc = grid.locate_many(ens.u, ens.r)
        out_of_domain = int(np.count_nonzero(loc < 0))
        esc_particles += out_of_domain
        counts = np.bincount(loc[loc >= 0], minlength=n)
        w = ens.weight
        col = w * counts / dt_scaled
        # the diagonal uses counts - n so that a no-scattering run is exactly 0
        col[beta] = w * (counts[beta] - n_particles) / dt_scaled + gamma_int[beta]
        K[:, beta] = np.maximum(col, 0.0)

    k_mc = CollisionMatrix(K=K, gamma_int=gamma_int.copy(), provenance="monte_carlo")
    report = ExtractionReport(k_mc=k_mc, n_particles=n_particles, dt=dt, seed=seed,
                              n_escape_events=esc_events,
                              n_escaped_particles=esc_particles)
    if reference is not None:
        errs = matrix_errors(K, reference.K)
        report.max_err_abs = errs["max_err_abs"]
        report.mean_err_abs = errs["mean_err_abs"]
        report.max_err_rel = errs["max_err_rel"]
        report.mean_err_rel = errs["mean_err_rel"]
    return report


def write_error_table(path: str | Path, rows: Sequence[ExtractionReport]) -> None:
    """CSV mirroring the reference error-table layout (particles, max, mean)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["particles", "max_error", "mean_error",
                     "max_error_abs", "mean_error_abs", "dt_s", "seed"])
        for rep in rows:
            wr.writerow([rep.n_particles, repr(rep.max_err_rel), repr(rep.mean_err_rel),
                         repr(rep.max_err_abs), repr(rep.mean_err_abs),
                         repr(rep.dt), rep.seed])
