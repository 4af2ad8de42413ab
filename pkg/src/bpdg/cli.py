"""Command line front end: bp-dg run | oracle-k | extract-k | dump-grid | dump-kmatrix."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .band import BandModel
from .collision import CollisionMatrix, build_silicon_mechanisms, k_matrix_oracle
from .driver import run as run_driver
from .kgrid import build_grid
from .mc_extract import default_dt, extract_k_matrix, write_error_table
from .params import ConfigError, build_scales, load_config


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key (repeatable)")


def _setup(args):
    cfg, mat = load_config(args.config, args.overrides)
    scales = build_scales(mat)
    band = BandModel(kind="kane" if mat.alpha_kane > 0 else "parabolic",
                     m_star=mat.m_star, alpha_kane=mat.alpha_kane)
    grid = build_grid(cfg, band, scales)
    return cfg, mat, scales, band, grid


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="bp-dg",
                                 description="Boltzmann-Poisson DG solver for 1D devices")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="time-integrate the coupled system")
    _add_config_args(p_run)
    p_run.add_argument("--kmatrix", help="collision matrix file (default: quadrature oracle)")
    p_run.add_argument("--out", default="out", help="output directory")

    p_or = sub.add_parser("oracle-k", help="build the collision matrix by quadrature")
    _add_config_args(p_or)
    p_or.add_argument("--out", default="k_oracle.bin", help="output matrix file")

    p_ex = sub.add_parser("extract-k", help="estimate the collision matrix by Monte Carlo")
    _add_config_args(p_ex)
    p_ex.add_argument("--particles", type=int, required=True,
                      help="particles per source cell")
    p_ex.add_argument("--dt", default="auto",
                      help="extraction step in seconds, or 'auto'")
    p_ex.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p_ex.add_argument("--ref", help="reference matrix file for the error report")
    p_ex.add_argument("--out", default="k_mc.bin", help="output matrix file")

    p_dg = sub.add_parser("dump-grid", help="write the k-cell table as CSV")
    _add_config_args(p_dg)
    p_dg.add_argument("--out", default="kgrid.csv")

    p_dk = sub.add_parser("dump-kmatrix", help="convert a matrix file to CSV")
    p_dk.add_argument("--in", dest="infile", required=True)
    p_dk.add_argument("--format", choices=["csv"], default="csv")
    p_dk.add_argument("--out", default="kmatrix.csv")

    args = ap.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"bp-dg: error: {exc}", file=sys.stderr)
        return 2


def _ensure_parent(path_str: str) -> None:
    parent = Path(path_str).parent
    if parent and not parent.exists():
        parent.mkdir(parents=True, exist_ok=True)


def _dispatch(args) -> int:
    if args.command == "run":
        cfg, mat, scales, band, grid = _setup(args)
        kmat = CollisionMatrix.load(args.kmatrix) if args.kmatrix else None
        written = run_driver(cfg, mat, args.out, kmat)
        for name, path in sorted(written.items()):
            print(f"{name}: {path}")
        return 0

    if args.command == "oracle-k":
        cfg, mat, scales, band, grid = _setup(args)
        mechs = build_silicon_mechanisms(mat, scales)
        kmat = k_matrix_oracle(grid, band, mechs)
        _ensure_parent(args.out)
        kmat.save(args.out)
        print(f"oracle matrix ({kmat.n} cells) -> {args.out}")
        return 0

    if args.command == "extract-k":
        cfg, mat, scales, band, grid = _setup(args)
        mechs = build_silicon_mechanisms(mat, scales)
        dt = default_dt(mechs, grid, scales) if args.dt == "auto" else float(args.dt)
        ref = CollisionMatrix.load(args.ref) if args.ref else None
        rep = extract_k_matrix(grid, band, mechs, args.particles, dt, args.seed,
                               scales, reference=ref)
        _ensure_parent(args.out)
        rep.k_mc.save(args.out)
        print(f"monte carlo matrix ({rep.k_mc.n} cells, n={rep.n_particles}, "
              f"dt={rep.dt:.3e} s, seed={rep.seed}) -> {args.out}")
        print(f"escape events: {rep.n_escape_events}")
        if ref is not None:
            table = Path(args.out).with_suffix(".errors.csv")
            write_error_table(table, [rep])
            print(f"max error (normalized): {rep.max_err_rel:.6g}")
            print(f"mean error (normalized): {rep.mean_err_rel:.6g}")
            print(f"error report -> {table}")
        return 0

    if args.command == "dump-grid":
        cfg, mat, scales, band, grid = _setup(args)
        _ensure_parent(args.out)
        grid.write_csv(args.out)
        print(f"{grid.n_cells} cells -> {args.out}")
        return 0

    if args.command == "dump-kmatrix":
        kmat = CollisionMatrix.load(args.infile)
        _ensure_parent(args.out)
        kmat.write_csv(args.out)
        print(f"{kmat.n}x{kmat.n} matrix ({kmat.provenance}) -> {args.out}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
