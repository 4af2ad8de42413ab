"""Physical constants, material/device parameters and the nondimensional scales.

Every other module works in the dimensionless units defined by ``Scales``:
wave vectors in units of k_star (thermal wave vector), energies in eV,
times in units of t_star (1 ps), lengths in units of x_star = v_star*t_star.

Config files are flat TOML (``key = value`` with an optional ``[material]``
table); see ``load_config`` for the schema.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration input."""


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants in SI units. Fixed; never read from config."""
    hbar: float = 1.054571817e-34   # J s
    q: float = 1.602176634e-19      # C (positive elementary charge)
    eps0: float = 8.8541878128e-12  # F/m
    kB: float = 1.380649e-23        # J/K
    m_e: float = 9.1093837015e-31   # kg


CONST = PhysicalConstants()


@dataclass(frozen=True)
class MaterialParams:
    """Bulk silicon electron-phonon model parameters (overridable in config)."""
    m_star: float = 0.32 * CONST.m_e   # kg, effective mass
    alpha_kane: float = 0.5            # 1/eV, nonparabolicity
    eps_r: float = 11.7                # relative dielectric constant
    T_L: float = 300.0                 # K, lattice temperature
    rho0: float = 2330.0               # kg/m^3, mass density
    v_sound: float = 9040.0            # m/s, longitudinal sound speed
    Xi_d: float = 9.0                  # eV, acoustic deformation potential
    DtK: float = 1.14e11               # eV/m, optical coupling (11.4 eV/A)
    hbar_omega_p: float = 0.063        # eV, optical phonon energy

    def validate(self) -> None:
        if not self.m_star > 0:
            raise ConfigError(f"material.m_star must be > 0, got {self.m_star}")
        if self.alpha_kane < 0:
            raise ConfigError(f"material.alpha_kane must be >= 0, got {self.alpha_kane}")
        if self.eps_r < 1.0:
            raise ConfigError(f"material.eps_r must be >= 1, got {self.eps_r}")
        if not self.T_L > 0:
            raise ConfigError(f"material.T_L must be > 0, got {self.T_L}")
        if not self.hbar_omega_p > 0:
            raise ConfigError(f"material.hbar_omega_p must be > 0, got {self.hbar_omega_p}")
        for name in ("rho0", "v_sound"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"material.{name} must be > 0, got {getattr(self, name)}")
        for name in ("Xi_d", "DtK"):
            if getattr(self, name) < 0:
                raise ConfigError(f"material.{name} must be >= 0, got {getattr(self, name)}")


#: doping profile entry: (x_start [m], x_stop [m], N_D [1/m^3])
DopingSegment = tuple[float, float, float]


@dataclass(frozen=True)
class DeviceConfig:
    """Geometry, doping, bias and run controls for the 1D device."""
    length: float = 400e-9             # m
    doping: tuple[DopingSegment, ...] = (
        (0.0, 100e-9, 5e23),
        (100e-9, 300e-9, 2e21),
        (300e-9, 400e-9, 5e23),
    )                                  # 1/m^3, tiles [0, length]
    bias: float = 2.0                  # V, applied at x = length (x = 0 grounded)
    n_x: int = 120                     # spatial intervals
    n_u: int = 60                      # k-cells along the transport axis
    n_r: int = 24                      # k-cells in the radial direction
    u_max: float = 9.6                 # dimensionless half-extent along u
    r_max: float = 9.6                 # dimensionless radial extent
    t_final: float = 3.0e-12           # s
    cfl: float = 0.8
    output_stride: int = 1             # steps between diagnostics rows
    snapshot_times_ps: tuple[float, ...] = (0.5, 3.0)

    @property
    def n_cells(self) -> int:
        return self.n_u * self.n_r

    def doping_at(self, x: float) -> float:
        """N_D at position x [m] (half-open segments, last one closed)."""
        for x0, x1, nd in self.doping:
            if x0 <= x < x1:
                return nd
        return self.doping[-1][2]

    def validate(self) -> None:
        if not self.length > 0:
            raise ConfigError(f"length must be > 0, got {self.length}")
        for name in ("n_x", "n_u", "n_r"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        if not (self.u_max > 0 and self.r_max > 0):
            raise ConfigError("u_max and r_max must be > 0")
        if self.bias < 0:
            raise ConfigError(f"bias must be >= 0, got {self.bias}")
        if self.t_final < 0:
            raise ConfigError(f"t_final must be >= 0, got {self.t_final}")
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.output_stride < 1:
            raise ConfigError(f"output_stride must be >= 1, got {self.output_stride}")
        self._validate_doping()

    def _validate_doping(self) -> None:
        if not self.doping:
            raise ConfigError("doping: at least one segment required")
        segs = sorted(self.doping, key=lambda s: s[0])
        tol = 1e-12 * self.length
        if abs(segs[0][0]) > tol:
            raise ConfigError(f"doping: first segment must start at 0, got {segs[0][0]}")
        for (a0, a1, _), (b0, b1, _) in zip(segs, segs[1:]):
            if a1 > b0 + tol:
                raise ConfigError(f"doping: segments overlap at x = {b0}")
            if b0 > a1 + tol:
                raise ConfigError(f"doping: gap between segments at x = {a1}")
        if abs(segs[-1][1] - self.length) > tol:
            raise ConfigError(
                f"doping: segments must end at length = {self.length}, got {segs[-1][1]}")
        for x0, x1, nd in segs:
            if not x1 > x0:
                raise ConfigError(f"doping: empty segment at x = {x0}")
            if not nd > 0:
                raise ConfigError(f"doping: N_D must be > 0, got {nd} at x = {x0}")


@dataclass(frozen=True)
class Scales:
    """Nondimensionalization: dimensional value = scale * dimensionless value."""
    k_star: float    # 1/m, wave-vector scale (thermal wave vector -> 1)
    t_star: float    # s, time scale (1 ps)
    x_star: float    # m, length scale (= v_star * t_star)
    eps_star: float  # eV, energy scale (= kB*T_L)
    E_star: float    # V/m, field scale (unit dimensionless field accel.)
    f_star: float    # pdf scale (pdf is dimensionless; kept for completeness)

    @property
    def v_star(self) -> float:
        """m/s, velocity scale."""
        return self.x_star / self.t_star


def build_scales(mat: MaterialParams) -> Scales:
    """Derive the scale set from material parameters.

    k_star is fixed by mapping the thermal wave vector sqrt(2 m* kB T)/hbar
    to 1, which makes eps_star = kB*T_L the energy unit (in eV).
    """
    mat.validate()
    c = CONST
    k_star = math.sqrt(2.0 * mat.m_star * c.kB * mat.T_L) / c.hbar
    eps_star = c.kB * mat.T_L / c.q
    t_star = 1e-12
    v_star = c.hbar * k_star / mat.m_star
    x_star = v_star * t_star
    e_star = c.hbar * k_star / (c.q * t_star)
    return Scales(k_star=k_star, t_star=t_star, x_star=x_star,
                  eps_star=eps_star, E_star=e_star, f_star=1.0)


# --- config file handling ----------------------------------------------------

_DEVICE_KEYS = {f.name for f in fields(DeviceConfig)}
_MATERIAL_KEYS = {f.name for f in fields(MaterialParams)} | {"m_star_rel"}


def _parse_doping(raw: object) -> tuple[DopingSegment, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("doping must be a non-empty list of [x0, x1, N_D] triples")
    segs = []
    for entry in raw:
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ConfigError(f"doping entry {entry!r} is not an [x0, x1, N_D] triple")
        segs.append(tuple(float(v) for v in entry))
    return tuple(segs)


def _config_from_dict(doc: dict) -> tuple[DeviceConfig, MaterialParams]:
    doc = dict(doc)
    mat_doc = dict(doc.pop("material", {}))

    unknown = set(doc) - _DEVICE_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    unknown = set(mat_doc) - _MATERIAL_KEYS
    if unknown:
        raise ConfigError(f"unknown material key(s): {sorted(unknown)}")

    if "m_star_rel" in mat_doc:
        if "m_star" in mat_doc:
            raise ConfigError("material: give m_star or m_star_rel, not both")
        mat_doc["m_star"] = float(mat_doc.pop("m_star_rel")) * CONST.m_e

    kwargs = {}
    for key, val in doc.items():
        if key == "doping":
            kwargs[key] = _parse_doping(val)
        elif key == "snapshot_times_ps":
            if not isinstance(val, list):
                raise ConfigError("snapshot_times_ps must be a list of times in ps")
            kwargs[key] = tuple(float(v) for v in val)
        elif key in ("n_x", "n_u", "n_r", "output_stride"):
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{key} must be an integer, got {val!r}")
            kwargs[key] = val
        else:
            kwargs[key] = float(val)

    cfg = DeviceConfig(**kwargs)
    mat = MaterialParams(**{k: float(v) for k, v in mat_doc.items()})
    cfg.validate()
    mat.validate()
    return cfg, mat


def apply_overrides(doc: dict, overrides: Sequence[str]) -> dict:
    """Apply ``--set key=value`` strings (TOML value syntax) onto a config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            parsed = tomllib.loads(item)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse override {item!r}: {exc}") from exc
        for key, val in parsed.items():
            if isinstance(val, dict) and isinstance(doc.get(key), dict):
                doc.setdefault(key, {}).update(val)
            else:
                doc[key] = val
    return doc


def load_config(path: str | Path,
                overrides: Sequence[str] = ()) -> tuple[DeviceConfig, MaterialParams]:
    """Load and validate a TOML config file, with optional key=value overrides."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if overrides:
        doc = apply_overrides(doc, overrides)
    return _config_from_dict(doc)


def serialize_config(cfg: DeviceConfig, mat: MaterialParams) -> str:
    """Emit a TOML document that load_config parses back to equal objects."""
    lines = ["# units: m, s, V, 1/m^3; energies in eV; see README for the schema"]
    lines.append(f"length = {cfg.length!r}")
    dop = ", ".join(f"[{x0!r}, {x1!r}, {nd!r}]" for x0, x1, nd in cfg.doping)
    lines.append(f"doping = [{dop}]")
    lines.append(f"bias = {cfg.bias!r}")
    for key in ("n_x", "n_u", "n_r"):
        lines.append(f"{key} = {getattr(cfg, key)}")
    for key in ("u_max", "r_max", "t_final", "cfl"):
        lines.append(f"{key} = {getattr(cfg, key)!r}")
    lines.append(f"output_stride = {cfg.output_stride}")
    lines.append("snapshot_times_ps = [%s]" % ", ".join(repr(t) for t in cfg.snapshot_times_ps))
    lines.append("")
    lines.append("[material]")
    for f_ in fields(MaterialParams):
        lines.append(f"{f_.name} = {getattr(mat, f_.name)!r}")
    return "\n".join(lines) + "\n"
