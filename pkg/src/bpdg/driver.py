"""Coupled Boltzmann-Poisson time integration for the 1D diode benchmark.

Owns the deterministic solver loop (Heun / SSP-RK2 with CFL-limited steps),
the moment and diagnostic outputs, and the file formats the plotting
scripts consume: moments_t<ps>.csv snapshots and a per-step diagnostics.csv.
"""
from __future__ import annotations

import csv
import time as _time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .band import BandModel
from .collision import CollisionMatrix, k_matrix_oracle, build_silicon_mechanisms
from .field import PoissonProblem, solve_poisson
from .kgrid import KGrid, build_grid
from .params import DeviceConfig, MaterialParams, Scales, build_scales
from .transport import BoundarySpec, StateField, apply_bc, rhs_core


@dataclass
class Moments:
    x: np.ndarray              # interval centers [m]
    density_cm3: np.ndarray
    velocity_cm_s: np.ndarray
    energy_ev: np.ndarray
    potential_v: np.ndarray    # node values, length n_x + 1
    zero_density_flag: bool = False


@dataclass
class Diagnostics:
    step: list[int] = dc_field(default_factory=list)
    time_ps: list[float] = dc_field(default_factory=list)
    neg_fraction_pct: list[float] = dc_field(default_factory=list)
    pdf_min: list[float] = dc_field(default_factory=list)
    pdf_max: list[float] = dc_field(default_factory=list)
    total_charge: list[float] = dc_field(default_factory=list)  # integral rho dx [1/m^2]
    wall_s: list[float] = dc_field(default_factory=list)

    def append(self, step, time_ps, values, grid, dx, wall_s):
        neg = 100.0 * np.count_nonzero(values < 0.0) / values.size
        rho = grid.measure @ values
        self.step.append(int(step))
        self.time_ps.append(float(time_ps))
        self.neg_fraction_pct.append(float(neg))
        self.pdf_min.append(float(values.min()))
        self.pdf_max.append(float(values.max()))
        self.total_charge.append(float(rho.sum() * dx * grid.k_star ** 3))
        self.wall_s.append(float(wall_s))

    def write_csv(self, path):
        # wall_s stays out of the file so repeated runs are byte-identical
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["step", "time_ps", "neg_fraction_pct", "pdf_min",
                         "pdf_max", "total_charge"])
            for row in zip(self.step, self.time_ps, self.neg_fraction_pct,
                           self.pdf_min, self.pdf_max, self.total_charge):
                wr.writerow([row[0]] + ["%.15g" % v for v in row[1:]])


def initialize(cfg: DeviceConfig, grid: KGrid, band: BandModel,
               scales: Scales) -> StateField:
    """Cell-sampled Maxwellian, normalized per interval to the local doping."""
    eps_star = scales.eps_star
    boltz = np.exp(-grid.mean_energy / eps_star)
    norm = float(grid.measure @ boltz)
    dx = cfg.length / cfg.n_x
    x_c = (np.arange(cfg.n_x) + 0.5) * dx
    nd_scaled = np.array([cfg.doping_at(x) for x in x_c]) / grid.k_star ** 3
    values = boltz[:, None] * (nd_scaled / norm)[None, :]
    return StateField(values=values, time=0.0)


def compute_moments(state: StateField, grid: KGrid, scales: Scales,
                    dx: float, potential_v: np.ndarray | None = None) -> Moments:
    """Density [1/cm^3], mean velocity [cm/s], mean energy [eV] per interval."""
    f = state.values
    n_x = f.shape[1]
    rho = grid.measure @ f                    # dimensionless density
    flux = grid.eta_x @ f
    eint = (grid.measure * grid.mean_energy) @ f
    zero = rho <= 0.0
    safe = np.where(zero, 1.0, rho)
    vel = np.where(zero, 0.0, flux / safe) * scales.v_star * 100.0
    energy = np.where(zero, 0.0, eint / safe)
    density = rho * grid.k_star ** 3 * 1e-6
    x_c = (np.arange(n_x) + 0.5) * dx
    if potential_v is None:
        potential_v = np.zeros(n_x + 1)
    return Moments(x=x_c, density_cm3=density, velocity_cm_s=vel,
                   energy_ev=energy, potential_v=potential_v,
                   zero_density_flag=bool(zero.any()))


def equilibrium_state(kmat: CollisionMatrix, grid: KGrid,
                      density_scaled: float) -> np.ndarray:
    """Null vector of the discrete collision operator, scaled to a density.

    This is the state the collision term actually leaves invariant (the
    cell-sampled Maxwellian is only invariant up to discretization error).
    """
    n = kmat.n
    op = kmat.K - np.diag(kmat.col_sums)
    op[-1, :] = grid.measure
    b = np.zeros(n)
    b[-1] = density_scaled
    v = np.linalg.solve(op, b)
    return v


class Simulation:
    """Bundles the grid, matrices and device data for the time loop."""

    def __init__(self, cfg: DeviceConfig, mat: MaterialParams,
                 kmat: CollisionMatrix | None = None):
        cfg.validate()
        mat.validate()
        self.cfg = cfg
        self.mat = mat
        self.scales = build_scales(mat)
        self.band = BandModel(kind="kane" if mat.alpha_kane > 0 else "parabolic",
                              m_star=mat.m_star, alpha_kane=mat.alpha_kane)
        self.grid = build_grid(cfg, self.band, self.scales)
        if kmat is None:
            mechs = build_silicon_mechanisms(mat, self.scales)
            kmat = k_matrix_oracle(self.grid, self.band, mechs)
        if kmat.n != self.grid.n_cells:
            raise ValueError(f"collision matrix size {kmat.n} does not match "
                             f"grid with {self.grid.n_cells} cells")
        self.kmat = kmat
        self.dx = cfg.length / cfg.n_x
        x_c = (np.arange(cfg.n_x) + 0.5) * self.dx
        self.doping = np.array([cfg.doping_at(x) for x in x_c])
        self.bc = BoundarySpec(left_doping=cfg.doping_at(0.0),
                               right_doping=cfg.doping_at(cfg.length))
        self.poisson = PoissonProblem(n_x=cfg.n_x, dx=self.dx,
                                      eps_r=np.full(cfg.n_x, mat.eps_r),
                                      v_left=0.0, v_right=cfg.bias)
        # CFL pieces that do not depend on the state
        eta = self.grid.eta_x
        speed = np.abs(eta) / self.grid.measure
        vmax = speed.max()
        self.dt_x = (self.dx / self.scales.x_star) / vmax if vmax > 0 else np.inf
        self.du_min = float(np.diff(self.grid.u_pts).min())
        rate = (self.kmat.col_sums / self.grid.measure).max()
        self.dt_coll = 1.0 / rate if rate > 0 else np.inf
        self.diagnostics = Diagnostics()
        self._steps = 0

    def density_si(self, values: np.ndarray) -> np.ndarray:
        return (self.grid.measure @ values) * self.grid.k_star ** 3

    def solve_field(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return solve_poisson(self.poisson, self.density_si(values), self.doping)

    def _rhs(self, values: np.ndarray, e_x: np.ndarray) -> np.ndarray:
        st = StateField(values=values, time=0.0)
        gl, gr = apply_bc(st, self.grid, self.bc)
        return rhs_core(values, self.grid, self.kmat, e_x / self.scales.E_star,
                        self.dx / self.scales.x_star, gl, gr)

    def stable_dt(self, e_x: np.ndarray) -> float:
        """CFL-limited dimensionless step for the current field.

        The three Courant numbers (x-advection, field drift in u, collision
        loss) add up in one explicit update, so the step keeps their SUM at
        cfl; taking cfl * min of the individual limits lets the sum reach 3
        and goes unstable in the junction transient.
        """
        e_max = np.abs(e_x).max() / self.scales.E_star
        inv = 1.0 / self.dt_x + 1.0 / self.dt_coll
        if e_max > 0:
            inv += e_max / self.du_min
        return self.cfg.cfl / inv

    def step(self, state: StateField, max_dt_scaled: float = np.inf) -> StateField:
        """One Heun (SSP-RK2) step; dt is CFL-limited and may be capped."""
        t0 = _time.perf_counter()
        f0 = state.values
        _, e0 = self.solve_field(f0)
        dt = min(self.stable_dt(e0), max_dt_scaled)
        r0 = self._rhs(f0, e0)
        f1 = f0 + dt * r0
        _, e1 = self.solve_field(f1)
        r1 = self._rhs(f1, e1)
        f_new = 0.5 * (f0 + f1 + dt * r1)
        if not np.isfinite(f_new).all():
            raise RuntimeError(
                f"solver diverged at t = {state.time:.3e} s (step {self._steps}); "
                "last diagnostics: "
                f"{self.diagnostics.pdf_min[-5:]} .. {self.diagnostics.pdf_max[-5:]}")
        self._steps += 1
        new_time = state.time + dt * self.scales.t_star
        if self._steps % self.cfg.output_stride == 0:
            self.diagnostics.append(self._steps, new_time * 1e12, f_new,
                                    self.grid, self.dx, _time.perf_counter() - t0)
        return StateField(values=f_new, time=new_time)

    def moments(self, state: StateField) -> Moments:
        v, _ = self.solve_field(state.values)
        return compute_moments(state, self.grid, self.scales, self.dx, v)


def _ps_label(t_ps: float) -> str:
    s = "%g" % t_ps
    return s if "." in s or "e" in s else s + ".0"


def write_moments_csv(path, mom: Moments) -> None:
    v_centers = 0.5 * (mom.potential_v[:-1] + mom.potential_v[1:])
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x_m", "density_cm3", "velocity_cm_s", "energy_ev", "potential_v"])
        for row in zip(mom.x, mom.density_cm3, mom.velocity_cm_s,
                       mom.energy_ev, v_centers):
            wr.writerow(["%.15g" % v for v in row])


def run(cfg: DeviceConfig, mat: MaterialParams, out_dir,
        kmat: CollisionMatrix | None = None) -> dict[str, Path]:
    """Advance to t_final, dumping snapshots at the configured times.

    Deterministic: the solver path contains no random numbers.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = Simulation(cfg, mat, kmat)
    state = initialize(cfg, sim.grid, sim.band, sim.scales)
    snaps = sorted(t for t in cfg.snapshot_times_ps if t * 1e-12 <= cfg.t_final + 1e-20)
    written: dict[str, Path] = {}

    def dump_snapshot(st: StateField, t_ps: float):
        mom = sim.moments(st)
        path = out / f"moments_t{_ps_label(t_ps)}.csv"
        write_moments_csv(path, mom)
        written[f"moments_t{_ps_label(t_ps)}"] = path

    t_final_scaled = cfg.t_final / sim.scales.t_star
    snap_iter = iter(snaps)
    next_snap = next(snap_iter, None)
    while state.time < cfg.t_final - 1e-20 * max(cfg.t_final, 1e-12):
        cap = t_final_scaled - state.time / sim.scales.t_star
        if next_snap is not None:
            cap = min(cap, next_snap * 1e-12 / sim.scales.t_star
                      - state.time / sim.scales.t_star)
        state = sim.step(state, max_dt_scaled=cap)
        if next_snap is not None and state.time >= next_snap * 1e-12 * (1 - 1e-12):
            dump_snapshot(state, next_snap)
            next_snap = next(snap_iter, None)
    diag_path = out / "diagnostics.csv"
    sim.diagnostics.write_csv(diag_path)
    written["diagnostics"] = diag_path
    return written
