"""Regenerate the benchmark figures and tables from the solver's CSV files.

Expected input layout (produced by the solver CLI):

    in_dir/
      nx120/moments_t0.5.csv    nx120/moments_t3.0.csv    nx120/diagnostics.csv
      nx200/moments_t0.5.csv    nx200/diagnostics.csv
      nx150/, nx180/            (optional, diagnostics only)
      extraction_errors.csv     (particle sweep of the Monte Carlo extraction)

Everything here is a read-only consumer of those files; no physics is
recomputed. Rendering the tables is deterministic; images are whatever the
raster backend produces for the same data.
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MOMENT_COLUMNS = ("x_m", "density_cm3", "velocity_cm_s", "energy_ev", "potential_v")


@dataclass(frozen=True)
class FigureSpec:
    figure_id: int
    filename: str
    column: str             # moments column, or "neg_fraction_pct"
    ylabel: str             # units verbatim from the benchmark captions
    time_ps: float
    overlay: bool           # True: line for n_x = 200, points for n_x = 120


FIGURE_SPECS = (
    FigureSpec(1, "fig1_density_t0.5ps.png", "density_cm3",
               "Density of charge in cm^-3", 0.5, True),
    FigureSpec(2, "fig2_velocity_t0.5ps.png", "velocity_cm_s",
               "Velocity in cm/s", 0.5, True),
    FigureSpec(3, "fig3_energy_t0.5ps.png", "energy_ev",
               "Mean energy in eV", 0.5, True),
    FigureSpec(4, "fig4_potential_t0.5ps.png", "potential_v",
               "Electric potential in V", 0.5, True),
    FigureSpec(5, "fig5_negative_fraction.png", "neg_fraction_pct",
               "Cells with negative pdf / total x 100", 0.0, False),
    FigureSpec(6, "fig6_density_t3.0ps.png", "density_cm3",
               "Density of charge in cm^-3", 3.0, False),
    FigureSpec(7, "fig7_velocity_t3.0ps.png", "velocity_cm_s",
               "Velocity in cm/s", 3.0, False),
    FigureSpec(8, "fig8_energy_t3.0ps.png", "energy_ev",
               "Mean energy in eV", 3.0, False),
)

REQUIRED_INPUTS = (
    "nx120/moments_t0.5.csv",
    "nx120/moments_t3.0.csv",
    "nx120/diagnostics.csv",
    "nx200/moments_t0.5.csv",
    "nx200/diagnostics.csv",
    "extraction_errors.csv",
)

OPTIONAL_NX = (150, 180)


def ps_label(t_ps: float) -> str:
    """Snapshot-time tag used by the solver: 0.5 -> '0.5', 3.0 -> '3.0'."""
    s = "%g" % t_ps
    return s if "." in s or "e" in s else s + ".0"


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    arr = np.array(data, dtype=float)
    return {name: arr[:, i] for i, name in enumerate(header)}


def check_inputs(in_dir: Path) -> None:
    missing = [name for name in REQUIRED_INPUTS if not (in_dir / name).is_file()]
    if missing:
        raise ValueError("missing inputs: " + ", ".join(missing))


def _nx_dirs(in_dir: Path) -> list[int]:
    out = [120, 200]
    for nx in OPTIONAL_NX:
        if (in_dir / f"nx{nx}" / "diagnostics.csv").is_file():
            out.append(nx)
    return sorted(out)


def _plot_overlay(ax, in_dir: Path, spec: FigureSpec):
    m200 = _read_csv(in_dir / "nx200" / f"moments_t{ps_label(spec.time_ps)}.csv")
    m120 = _read_csv(in_dir / "nx120" / f"moments_t{ps_label(spec.time_ps)}.csv")
    ax.plot(m200["x_m"] * 1e9, m200[spec.column], "-", color="tab:blue",
            label="$N_x = 200$")
    ax.plot(m120["x_m"] * 1e9, m120[spec.column], ".", color="tab:red",
            markersize=4, label="$N_x = 120$")
    ax.legend(frameon=False)


def _plot_single(ax, in_dir: Path, spec: FigureSpec):
    m = _read_csv(in_dir / "nx120" / f"moments_t{ps_label(spec.time_ps)}.csv")
    ax.plot(m["x_m"] * 1e9, m[spec.column], "-", color="tab:blue",
            label="$N_x = 120$")
    ax.legend(frameon=False)


def _plot_negative_fraction(ax, in_dir: Path):
    for nx in _nx_dirs(in_dir):
        d = _read_csv(in_dir / f"nx{nx}" / "diagnostics.csv")
        ax.plot(d["time_ps"], d["neg_fraction_pct"], label=f"$N_x = {nx}$")
    ax.set_xlabel("time in ps")
    ax.legend(frameon=False)


def render_figure(in_dir: Path, out_dir: Path, spec: FigureSpec) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.2), constrained_layout=True)
    if spec.figure_id == 5:
        _plot_negative_fraction(ax, in_dir)
    elif spec.overlay:
        _plot_overlay(ax, in_dir, spec)
        ax.set_xlabel("x in nm")
    else:
        _plot_single(ax, in_dir, spec)
        ax.set_xlabel("x in nm")
    ax.set_ylabel(spec.ylabel)
    ax.set_title(f"t = {spec.time_ps:g} ps" if spec.figure_id != 5 else
                 "negative-cell fraction vs time")
    path = out_dir / spec.filename
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _fmt(v: float) -> str:
    return "%.5g" % v


def render_error_table(in_dir: Path, out_dir: Path) -> Path:
    d = _read_csv(in_dir / "extraction_errors.csv")
    lines = ["| particles | maximum error | mean value error |",
             "|-----------|---------------|------------------|"]
    for n, mx, mean in zip(d["particles"], d["max_error"], d["mean_error"]):
        lines.append(f"| {int(n):.0e} | {_fmt(mx)} | {_fmt(mean)} |".replace("e+0", "e"))
    path = out_dir / "extraction_error_table.md"
    path.write_text("\n".join(lines) + "\n")
    return path


def render_pdf_extrema_table(in_dir: Path, out_dir: Path, at_ps: float = 0.5) -> Path:
    lines = ["| nx | minimum | maximum |",
             "|----|---------|---------|"]
    for nx in _nx_dirs(in_dir):
        d = _read_csv(in_dir / f"nx{nx}" / "diagnostics.csv")
        i = int(np.argmin(np.abs(d["time_ps"] - at_ps)))
        lines.append(f"| {nx} | {_fmt(d['pdf_min'][i])} | {_fmt(d['pdf_max'][i])} |")
    path = out_dir / "pdf_extrema_table.md"
    path.write_text("\n".join(lines) + "\n")
    return path


def render_all(in_dir, out_dir) -> dict[str, Path]:
    """All eight figures plus the two tables; raises naming any missing input."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    check_inputs(in_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for spec in FIGURE_SPECS:
        written[f"fig{spec.figure_id}"] = render_figure(in_dir, out_dir, spec)
    written["error_table"] = render_error_table(in_dir, out_dir)
    written["pdf_extrema_table"] = render_pdf_extrema_table(in_dir, out_dir)
    return written


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="render_figures",
                                 description="rebuild benchmark figures from CSV output")
    ap.add_argument("--in", dest="in_dir", required=True, help="solver output tree")
    ap.add_argument("--out", dest="out_dir", required=True, help="figure directory")
    args = ap.parse_args(argv)
    try:
        written = render_all(args.in_dir, args.out_dir)
    except ValueError as exc:
        print(f"render_figures: error: {exc}")
        return 2
    for name in sorted(written):
        print(f"{name}: {written[name]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
