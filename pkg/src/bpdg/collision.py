"""Electron-phonon scattering: kernel, total rate, and the cell-pair matrix.

The kernel is a sum of isotropic mechanisms c * delta(eps(k) - eps(k') - de),
so every integral reduces to shell measures. Within a k-cell (a rectangle in
the (u, r) half-plane) the shell of radius t intersects the cell along arcs
whose integrated measure is 2*pi*t*L(t), with L(t) the length of the chord
set {u in [u_a, u_b] : r_a^2 <= t^2 - u^2 <= r_b^2} (plus its mirror in u).

The cell-pair matrix entry for one mechanism then collapses to a 1-D
integral over the final-state shell radius t,

    K[a, b] = c * (2 pi)^2 * int t*L_a(t) * L_b(s'(t)) * jac(s'(t)) dt,

where s'(t) is the initial radius with eps(s') + de = eps(t). The integrand
is piecewise analytic with square-root kinks exactly at cell-corner radii
and their images under the energy shift; we split at all of them and
substitute t = sqrt(a^2 + tau^2) on each piece, which makes every piece
analytic and lets a fixed Gauss-Legendre rule deliver near machine accuracy.

Totals use the domain-restricted rate (shells clipped to the bounded
k-domain), which is what makes column sums of K equal the per-cell
integrals of the total rate.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .band import BandModel, ScaledBand, energy_of_norm
from .kgrid import KGrid
from .params import CONST, MaterialParams, Scales

_GL_ORDER = 16
_KIND_SHIFT_SIGN = {"acoustic_elastic": 0, "optical_emit": -1, "optical_absorb": +1}


@dataclass(frozen=True)
class ScatterMechanism:
    """One isotropic scattering channel.

    coupling is the dimensionless strength c_tilde = c * k_star^3 * t_star
    (c in eV m^3/s); energy_shift is the final-minus-initial energy in eV.
    """
    kind: str
    coupling: float
    energy_shift: float  # eV

    def __post_init__(self):
        if self.kind not in _KIND_SHIFT_SIGN:
            raise ValueError(f"unknown mechanism kind {self.kind!r}")
        if self.coupling < 0:
            raise ValueError("coupling must be >= 0")
        sign = _KIND_SHIFT_SIGN[self.kind]
        if sign == 0 and self.energy_shift != 0.0:
            raise ValueError("elastic mechanism requires zero energy shift")
        if sign != 0 and not sign * self.energy_shift > 0:
            raise ValueError(f"{self.kind} requires energy shift of sign {sign}")


def build_silicon_mechanisms(mat: MaterialParams, scales: Scales) -> list[ScatterMechanism]:
    """Elastic acoustic + inelastic optical phonon channels, nondimensionalized."""
    q = CONST.q
    kT_ev = scales.eps_star
    # acoustic deformation potential, elastic equipartition limit
    c_ac = mat.Xi_d**2 * kT_ev * q**2 / (
        4.0 * np.pi**2 * CONST.hbar * mat.rho0 * mat.v_sound**2)  # eV m^3/s
    omega_p = mat.hbar_omega_p * q / CONST.hbar  # rad/s
    n_q = 1.0 / np.expm1(mat.hbar_omega_p / kT_ev)
    c_opt = mat.DtK**2 * q / (8.0 * np.pi**2 * mat.rho0 * omega_p)  # eV m^3/s
    scale = scales.k_star**3 * scales.t_star
    return [
        ScatterMechanism("acoustic_elastic", c_ac * scale, 0.0),
        ScatterMechanism("optical_absorb", c_opt * n_q * scale, +mat.hbar_omega_p),
        ScatterMechanism("optical_emit", c_opt * (n_q + 1.0) * scale, -mat.hbar_omega_p),
    ]


# --- shell geometry ----------------------------------------------------------

def chord_len(t, u_lo, u_hi, r_lo, r_hi):
    """Chord-set length of the circle u^2 + r^2 = t^2 inside a (u, r) rectangle.

    All arguments broadcast; the mirror interval in u < 0 is included.
    """
    t2 = np.square(t)
    hi = np.sqrt(np.maximum(t2 - np.square(r_lo), 0.0))
    lo = np.sqrt(np.maximum(t2 - np.square(r_hi), 0.0))
    seg_pos = np.maximum(np.minimum(u_hi, hi) - np.maximum(u_lo, lo), 0.0)
    seg_neg = np.maximum(np.minimum(u_hi, -lo) - np.maximum(u_lo, -hi), 0.0)
    return seg_pos + seg_neg


def shell_dos_scaled(sband: ScaledBand, e_ev):
    """Full spherical shell measure / (k_star^3) per eV: 4 pi t^2 / (de/ds)."""
    e = np.asarray(e_ev, dtype=float)
    t = sband.s_of_e(np.maximum(e, 0.0))
    gamma = sband.eps_b * np.square(t)
    dos = 2.0 * np.pi * t * np.sqrt(1.0 + 4.0 * sband.alpha * gamma) / sband.eps_b
    return np.where(e > 0.0, dos, 0.0)


def _domain_dos_scaled(sband: ScaledBand, e_ev, u_lo: float, u_hi: float, r_max: float):
    """Shell measure restricted to [u_lo, u_hi] x [0, r_max], / k_star^3 / eV."""
    e = np.asarray(e_ev, dtype=float)
    t = sband.s_of_e(np.maximum(e, 0.0))
    ltot = chord_len(t, u_lo, u_hi, 0.0, r_max)
    gamma = sband.eps_b * np.square(t)
    dos = np.pi * ltot * np.sqrt(1.0 + 4.0 * sband.alpha * gamma) / sband.eps_b
    return np.where(e > 0.0, dos, 0.0)


def partial_rates_scaled(mechs: Sequence[ScatterMechanism], sband: ScaledBand, eps_ev):
    """Per-mechanism dimensionless outgoing rates at energies eps_ev: (m, ...)."""
    eps = np.asarray(eps_ev, dtype=float)
    out = np.empty((len(mechs),) + eps.shape, dtype=float)
    for i, m in enumerate(mechs):
        out[i] = m.coupling * shell_dos_scaled(sband, eps + m.energy_shift)
    return out


def total_rate(mechs: Sequence[ScatterMechanism], band: BandModel, k, scales: Scales):
    """Total outgoing scattering rate Gamma(k) [1/s] for wave vector(s) k [1/m].

    Uses the unbounded (full-sphere) shell measure; shells are isotropic so
    the result depends on |k| only.
    """
    k = np.asarray(k, dtype=float)
    k_abs = np.sqrt(np.sum(k * k, axis=-1)) if k.shape[-1:] == (3,) and k.ndim >= 1 \
        else np.abs(k)
    eps = energy_of_norm(band, k_abs)
    sband = ScaledBand(band, scales.k_star)
    rate = np.sum(partial_rates_scaled(mechs, sband, eps), axis=0)
    return rate / scales.t_star


# --- collision matrix --------------------------------------------------------

@dataclass
class CollisionMatrix:
    """Dense nonnegative rate matrix K[a, b] (gain b -> a) plus cell totals.

    K is dimensionless (rates in units of 1/t_star, volumes in k_star^3);
    gamma_int[b] is the integral of the domain-restricted total rate over
    cell b in the same units.
    """
    K: np.ndarray
    gamma_int: np.ndarray
    provenance: str  # "oracle" | "monte_carlo"
    _col_sums: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def col_sums(self) -> np.ndarray:
        if self._col_sums is None:
            self._col_sums = self.K.sum(axis=0)
        return self._col_sums

    def save(self, path: str | Path) -> None:
        payload = self.K.astype("<f8").tobytes() + self.gamma_int.astype("<f8").tobytes()
        prov = self.provenance.encode()[:16].ljust(16, b"\0")
        header = struct.pack("<4sII16sI", b"BPKM", 1, self.n, prov,
                             zlib.crc32(payload) & 0xFFFFFFFF)
        Path(path).write_bytes(header + payload)

    @classmethod
    def load(cls, path: str | Path) -> "CollisionMatrix":
        raw = Path(path).read_bytes()
        if len(raw) < 32 or raw[:4] != b"BPKM":
            raise ValueError(f"{path}: not a collision-matrix file")
        _, version, n, prov, crc = struct.unpack("<4sII16sI", raw[:32])
        if version != 1:
            raise ValueError(f"{path}: unsupported version {version}")
        payload = raw[32:]
        if len(payload) != 8 * (n * n + n):
            raise ValueError(f"{path}: truncated payload")
        if zlib.crc32(payload) & 0xFFFFFFFF != crc:
            raise ValueError(f"{path}: checksum mismatch")
        k = np.frombuffer(payload[:8 * n * n], dtype="<f8").reshape(n, n).copy()
        g = np.frombuffer(payload[8 * n * n:], dtype="<f8").copy()
        return cls(K=k, gamma_int=g, provenance=prov.rstrip(b"\0").decode())

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write("# row alpha, col beta, K[alpha,beta]; last column gamma_int\n")
            for a in range(self.n):
                row = ",".join(repr(v) for v in self.K[a])
                fh.write(f"{row},{self.gamma_int[a]!r}\n")


def apply_collision(kmat: CollisionMatrix, f: np.ndarray) -> np.ndarray:
    """Gain-minus-loss collision term: (K f)_a - (sum_b K[b,a]) f_a.

    f may be a length-N vector or an (N, n_x) block of states.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        return kmat.K @ f - kmat.col_sums * f
    return kmat.K @ f - kmat.col_sums[:, None] * f


def _gl01(order: int = _GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _split_points(points: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Sorted breakpoints covering [lo, hi], deduplicated."""
    if hi <= lo:
        return np.array([])
    pts = points[(points > lo) & (points < hi)]
    pts = np.concatenate([[lo], np.sort(pts), [hi]])
    keep = np.concatenate([[True], np.diff(pts) > 1e-13 * max(hi, 1.0)])
    return pts[keep]


class _Kinematics:
    """Radius maps between initial and final shells for one energy shift."""

    def __init__(self, sband: ScaledBand, shift_ev: float):
        self.sband = sband
        self.shift = shift_ev

    def final_radius(self, s_init):
        e = self.sband.e_of_s(s_init) + self.shift
        return self.sband.s_of_e(np.maximum(e, 0.0)), e >= 0.0

    def initial_radius(self, t_final):
        if self.shift == 0.0:
            t = np.asarray(t_final, dtype=float)
            return t, np.ones(t.shape, dtype=bool)
        e = self.sband.e_of_s(t_final) - self.shift
        return self.sband.s_of_e(np.maximum(e, 0.0)), e >= 0.0


def _corner_radii(grid: KGrid) -> np.ndarray:
    u_abs = np.unique(np.abs(grid.u_pts))
    r = grid.r_pts
    radii = np.hypot(u_abs[:, None], r[None, :]).ravel()
    return np.unique(np.concatenate([r, radii]))


def k_matrix_oracle(grid: KGrid, band: BandModel,
                    mechs: Sequence[ScatterMechanism]) -> CollisionMatrix:
    """Cell-pair scattering matrix by exact shell-geometry quadrature."""
    sband = grid.sband
    n = grid.n_cells
    K = np.zeros((n, n))
    xg, wg = _gl01()
    s_dom = float(np.hypot(max(abs(grid.u_pts[0]), abs(grid.u_pts[-1])), grid.r_pts[-1]))
    base = _corner_radii(grid)

    for mech in mechs:
        if mech.coupling == 0.0:
            continue
        kin = _Kinematics(sband, mech.energy_shift)
        # final-radius integration range; an emission channel is dead if even
        # the highest representable energy sits below the phonon energy
        img_hi, ok_hi = kin.final_radius(s_dom)
        if not bool(ok_hi):
            continue
        t_hi = min(s_dom, float(img_hi))
        t_lo = float(kin.final_radius(0.0)[0]) if mech.energy_shift > 0.0 else 0.0
        if t_hi <= t_lo:
            continue
        # kinks: corner radii of final cells, plus images of initial-cell kinks
        img, ok = kin.final_radius(base)
        kinks = np.concatenate([base, img[ok]])
        pieces = _split_points(np.unique(kinks), t_lo, t_hi)
        coef = mech.coupling * (2.0 * np.pi) ** 2

        for a, b in zip(pieces[:-1], pieces[1:]):
            tau_len = np.sqrt(b * b - a * a)
            tau = xg * tau_len
            t = np.sqrt(a * a + tau * tau)
            w_t = wg * tau_len * np.where(t > 0.0, tau / np.maximum(t, 1e-300), 1.0)
            sp, _ = kin.initial_radius(t)

            act_a = np.nonzero((grid.s_min < b) & (grid.s_max > a))[0]
            sp_lo, sp_hi = min(sp[0], sp[-1]), max(sp[0], sp[-1])
            act_b = np.nonzero((grid.s_min < sp_hi + 1e-15 * s_dom)
                               & (grid.s_max > sp_lo - 1e-15 * s_dom))[0]
            if act_a.size == 0 or act_b.size == 0:
                continue

            la = chord_len(t[:, None], grid.u_lo[act_a], grid.u_hi[act_a],
                           grid.r_lo[act_a], grid.r_hi[act_a])
            lb = chord_len(sp[:, None], grid.u_lo[act_b], grid.u_hi[act_b],
                           grid.r_lo[act_b], grid.r_hi[act_b])
            gamma_sp = sband.eps_b * np.square(sp)
            jac = np.sqrt(1.0 + 4.0 * sband.alpha * gamma_sp) / (2.0 * sband.eps_b)
            a_mat = t[:, None] * la
            b_mat = (w_t * jac)[:, None] * lb
            K[np.ix_(act_a, act_b)] += coef * (a_mat.T @ b_mat)

    gamma_int = integrate_gamma_cells(grid, mechs)
    return CollisionMatrix(K=K, gamma_int=gamma_int, provenance="oracle")


def integrate_gamma_cells(grid: KGrid, mechs: Sequence[ScatterMechanism]) -> np.ndarray:
    """Integral over each cell of the domain-restricted total rate (dimensionless).

    Quadrature runs in the initial radius s with the closed-form shell
    measure of the whole domain, so it is an independent cross-check of the
    matrix assembly (column sums of the oracle must reproduce it).
    """
    sband = grid.sband
    u_lo_dom = float(grid.u_pts[0])
    u_hi_dom = float(grid.u_pts[-1])
    r_max = float(grid.r_pts[-1])
    xg, wg = _gl01()
    out = np.zeros(grid.n_cells)

    for mech in mechs:
        if mech.coupling == 0.0:
            continue
        kin = _Kinematics(sband, mech.energy_shift)
        # pull the domain-shell kinks back to the initial radius
        dom_kinks = np.array([r_max, abs(u_lo_dom), abs(u_hi_dom),
                              np.hypot(u_lo_dom, r_max), np.hypot(u_hi_dom, r_max)])
        img, ok = kin.initial_radius(dom_kinks)
        extra = [img[ok]]
        if mech.energy_shift < 0.0:
            extra.append(np.atleast_1d(sband.s_of_e(-mech.energy_shift)))
        for idx in range(grid.n_cells):
            u_lo, u_hi = grid.u_lo[idx], grid.u_hi[idx]
            r_lo, r_hi = grid.r_lo[idx], grid.r_hi[idx]
            own = np.array([r_lo, r_hi,
                            np.hypot(u_lo, r_lo), np.hypot(u_lo, r_hi),
                            np.hypot(u_hi, r_lo), np.hypot(u_hi, r_hi)])
            kinks = np.unique(np.concatenate([own] + extra))
            pieces = _split_points(kinks, grid.s_min[idx], grid.s_max[idx])
            acc = 0.0
            for a, b in zip(pieces[:-1], pieces[1:]):
                tau_len = np.sqrt(b * b - a * a)
                tau = xg * tau_len
                s = np.sqrt(a * a + tau * tau)
                w_s = wg * tau_len * np.where(s > 0.0, tau / np.maximum(s, 1e-300), 1.0)
                ls = chord_len(s, u_lo, u_hi, r_lo, r_hi)
                e_fin = sband.e_of_s(s) + mech.energy_shift
                dos = _domain_dos_scaled(sband, e_fin, u_lo_dom, u_hi_dom, r_max)
                acc += np.sum(w_s * s * ls * dos)
            out[idx] += 2.0 * np.pi * mech.coupling * acc
    return out
