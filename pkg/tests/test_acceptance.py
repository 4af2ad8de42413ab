"""Top-level acceptance suite for the benchmark device.

Each test covers one stated criterion and prints one PASS/FAIL line (shown
with pytest -v through the test outcome, and on stdout under -s / in
captured output). The expensive artifacts (the 1440-cell oracle matrix, the
particle-count sweep and the two benchmark runs) are session fixtures shared
across criteria.
"""
import numpy as np
import pytest

from bpdg.band import BandModel
from bpdg.collision import apply_collision, build_silicon_mechanisms, k_matrix_oracle
from bpdg.driver import Simulation, initialize, run
from bpdg.field import PoissonProblem, solve_poisson
from bpdg.kgrid import build_grid
from bpdg.mc_extract import (column_rng, default_dt, evolve_homogeneous,
                             extract_k_matrix, seed_uniform)
from bpdg.params import CONST, DeviceConfig, MaterialParams, build_scales

pytestmark = [pytest.mark.acceptance]

SEED = 20260809
PAPER_MAX_ERR_1E6 = 0.06291
PAPER_MEAN_ERR_1E6 = 0.0044408


def _report(name, ok, detail):
    line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}: {detail}"
    print(line)
    return line


@pytest.fixture(scope="session")
def bench(mat, scales, band, mechs):
    grid = build_grid(DeviceConfig(), band, scales)
    kmat = k_matrix_oracle(grid, band, mechs)
    return {"grid": grid, "kmat": kmat}


@pytest.fixture(scope="session")
def extraction_sweep(bench, band, mechs, scales):
    grid, kmat = bench["grid"], bench["kmat"]
    dt = default_dt(mechs, grid, scales)
    reports = {}
    for n in (10_000, 100_000, 1_000_000):
        reports[n] = extract_k_matrix(grid, band, mechs, n, dt, seed=SEED,
                                      scales=scales, reference=kmat,
                                      gamma_int=kmat.gamma_int)
    return reports


def _run_benchmark(n_x, t_end_ps, kmat, mat):
    cfg = DeviceConfig(n_x=n_x, t_final=t_end_ps * 1e-12, snapshot_times_ps=())
    sim = Simulation(cfg, mat, kmat)
    state = initialize(cfg, sim.grid, sim.band, sim.scales)
    snaps = {}
    targets = [t for t in (0.5, t_end_ps) if t <= t_end_ps]
    ti = 0
    while ti < len(targets):
        cap = (targets[ti] * 1e-12 - state.time) / sim.scales.t_star
        state = sim.step(state, max_dt_scaled=cap)
        if state.time >= targets[ti] * 1e-12 * (1 - 1e-12):
            snaps[targets[ti]] = (state, sim.moments(state))
            ti += 1
    return sim, snaps


@pytest.fixture(scope="session")
def benchmark_runs(bench, mat):
    sim120, snaps120 = _run_benchmark(120, 3.0, bench["kmat"], mat)
    sim200, snaps200 = _run_benchmark(200, 0.5, bench["kmat"], mat)
    return {"sim120": sim120, "snaps120": snaps120,
            "sim200": sim200, "snaps200": snaps200}


# --- MC extraction vs the published error table -----------------------------

def test_extraction_mean_error_strictly_decreasing(extraction_sweep):
    means = [extraction_sweep[n].mean_err_rel for n in (10_000, 100_000, 1_000_000)]
    ok = means[0] > means[1] > means[2]
    _report("extract-k mean error decreasing in n", ok,
            "mean_rel = " + ", ".join("%.5f" % m for m in means))
    assert ok


def test_extraction_power_law_exponent(extraction_sweep):
    ns = np.array([10_000, 100_000, 1_000_000], dtype=float)
    means = np.array([extraction_sweep[int(n)].mean_err_rel for n in ns])
    slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
    ok = -0.6 <= slope <= -0.4
    _report("extract-k mean error power law", ok, f"exponent = {slope:.3f}")
    assert ok


def test_extraction_mean_error_matches_table_at_1e6(extraction_sweep):
    got = extraction_sweep[1_000_000].mean_err_rel
    lo, hi = PAPER_MEAN_ERR_1E6 / 3.0, PAPER_MEAN_ERR_1E6 * 3.0
    ok = lo <= got <= hi
    _report("extract-k normalized mean error at 1e6", ok,
            f"{got:.5f} vs band [{lo:.5f}, {hi:.5f}]")
    assert ok


def test_extraction_max_error_matches_table_at_1e6(extraction_sweep):
    got = extraction_sweep[1_000_000].max_err_rel
    lo, hi = PAPER_MAX_ERR_1E6 / 3.0, PAPER_MAX_ERR_1E6 * 3.0
    ok = lo <= got <= hi
    _report("extract-k normalized max error at 1e6", ok,
            f"{got:.5f} vs band [{lo:.5f}, {hi:.5f}]")
    assert ok, (
        f"normalized max error {got:.4f} outside [{lo:.4f}, {hi:.4f}]. The max "
        "is set by the diagonal entries of the highest-rate cells, where the "
        "single-step recovery subtracts two near-equal large numbers: their "
        "O(dt) multiple-scattering bias and 1/dt-amplified survival-count "
        "noise both exceed this band for every dt the evolve precondition "
        "admits at 1e6 particles per cell (see README, known limitations)")


# --- oracle self-consistency -------------------------------------------------

def test_oracle_column_sums_match_gamma(bench):
    kmat = bench["kmat"]
    col = kmat.K.sum(axis=0)
    rel = np.abs(col - kmat.gamma_int) / kmat.gamma_int
    ok = rel.max() < 1e-8
    _report("oracle column identity", ok, f"worst relative residual = {rel.max():.2e}")
    assert ok


# --- collision conservation ---------------------------------------------------

def test_collision_conserves_mass(bench):
    kmat = bench["kmat"]
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(100):
        f = rng.uniform(0.0, 1.0, kmat.n)
        g = apply_collision(kmat, f)
        worst = max(worst, abs(g.sum()) / np.abs(kmat.K @ f).sum())
    ok = worst < 1e-13
    _report("collision mass conservation", ok, f"worst relative sum = {worst:.2e}")
    assert ok


# --- Poisson convergence order -------------------------------------------------

def test_poisson_second_order():
    length, eps_r = 400e-9, 11.7

    def err(n_x):
        prob = PoissonProblem(n_x=n_x, dx=length / n_x, eps_r=np.full(n_x, eps_r))
        x_c = (np.arange(n_x) + 0.5) * prob.dx
        rho = -(CONST.eps0 / CONST.q) * eps_r * (np.pi / length) ** 2 \
            * np.sin(np.pi * x_c / length)
        v, _ = solve_poisson(prob, rho, np.zeros(n_x))
        x_n = np.linspace(0, length, n_x + 1)
        return np.abs(v - np.sin(np.pi * x_n / length)).max()

    e1, e2 = err(60), err(120)
    ratio = e1 / e2
    ok = 3.7 <= ratio <= 4.3
    _report("poisson L-inf refinement ratio", ok, f"ratio = {ratio:.3f}")
    assert ok


# --- benchmark run -------------------------------------------------------------

def _l2rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_benchmark_grid_agreement_at_half_ps(benchmark_runs):
    m120 = benchmark_runs["snaps120"][0.5][1]
    m200 = benchmark_runs["snaps200"][0.5][1]
    diffs = {}
    for name in ("density_cm3", "velocity_cm_s", "energy_ev"):
        interp = np.interp(m120.x, m200.x, getattr(m200, name))
        diffs[name] = _l2rel(getattr(m120, name), interp)
    v120 = 0.5 * (m120.potential_v[:-1] + m120.potential_v[1:])
    v200 = 0.5 * (m200.potential_v[:-1] + m200.potential_v[1:])
    diffs["potential_v"] = _l2rel(v120, np.interp(m120.x, m200.x, v200))
    ok = all(d < 0.05 for d in diffs.values())
    _report("Nx=120 vs Nx=200 profiles at 0.5 ps", ok,
            ", ".join(f"{k}={v:.4f}" for k, v in diffs.items()))
    assert ok, diffs


def test_benchmark_pdf_max_variation(benchmark_runs):
    p120 = benchmark_runs["snaps120"][0.5][0].values.max()
    p200 = benchmark_runs["snaps200"][0.5][0].values.max()
    spread = abs(p200 - p120) / min(p120, p200)
    ok = spread < 0.04
    _report("pdf max across Nx at 0.5 ps", ok,
            f"{p120:.4e} vs {p200:.4e}, spread {100 * spread:.2f}%")
    assert ok


def test_benchmark_negative_fraction(benchmark_runs):
    worst = max(max(benchmark_runs["sim120"].diagnostics.neg_fraction_pct),
                max(benchmark_runs["sim200"].diagnostics.neg_fraction_pct))
    ok = worst < 5.0
    _report("negative-cell fraction", ok, f"worst = {worst:.3f}%")
    assert ok


def test_benchmark_contacts_and_potential_endpoints(benchmark_runs):
    mom = benchmark_runs["snaps120"][3.0][1]
    d_l, d_r = mom.density_cm3[0], mom.density_cm3[-1]
    contacts_ok = abs(d_l - 5e17) / 5e17 < 0.02 and abs(d_r - 5e17) / 5e17 < 0.02
    ends_ok = mom.potential_v[0] == 0.0 and mom.potential_v[-1] == 2.0
    ok = contacts_ok and ends_ok
    _report("3 ps contacts and potential endpoints", ok,
            f"density ends {d_l:.4g}/{d_r:.4g} cm^-3, V ends "
            f"{mom.potential_v[0]}/{mom.potential_v[-1]} V")
    assert ok


def test_benchmark_profile_shapes_at_3ps(benchmark_runs):
    mom = benchmark_runs["snaps120"][3.0][1]
    x = mom.x
    channel = (x >= 100e-9) & (x <= 300e-9)
    v_c = 0.5 * (mom.potential_v[:-1] + mom.potential_v[1:])
    # monotone rise across the channel (10 mV slack for the junction barrier)
    rise_ok = np.all(np.diff(v_c[channel]) > -0.01) and \
        (v_c[channel][-1] - v_c[channel][0]) > 1.0
    peak_x = x[np.argmax(mom.energy_ev)]
    peak_ok = 250e-9 <= peak_x <= 350e-9
    vel_ok = np.all(mom.velocity_cm_s[channel] > 0.0)
    ok = rise_ok and peak_ok and vel_ok
    _report("3 ps profile shapes", ok,
            f"rise_ok={rise_ok}, energy peak at {peak_x * 1e9:.0f} nm, "
            f"min channel velocity {mom.velocity_cm_s[channel].min():.3g} cm/s")
    assert ok


# --- determinism ---------------------------------------------------------------

def test_run_outputs_bit_identical(tmp_path_factory, mat):
    cfg = DeviceConfig(n_u=16, n_r=8, n_x=24, t_final=3e-14, snapshot_times_ps=(0.03,))
    a = tmp_path_factory.mktemp("run_a")
    b = tmp_path_factory.mktemp("run_b")
    run(cfg, mat, a)
    run(cfg, mat, b)
    same = all((a / n).read_bytes() == (b / n).read_bytes()
               for n in ("moments_t0.03.csv", "diagnostics.csv"))
    _report("driver determinism", same, "bit-identical CSV outputs")
    assert same


def test_extraction_deterministic_and_schedule_independent(
        bench, band, mechs, scales):
    grid, kmat = bench["grid"], bench["kmat"]
    dt = default_dt(mechs, grid, scales)
    r1 = extract_k_matrix(grid, band, mechs, 2000, dt, seed=SEED, scales=scales,
                          gamma_int=kmat.gamma_int)
    r2 = extract_k_matrix(grid, band, mechs, 2000, dt, seed=SEED, scales=scales,
                          gamma_int=kmat.gamma_int)
    identical = np.array_equal(r1.k_mc.K, r2.k_mc.K)
    # a column recomputed in isolation must equal the full-run column: the
    # per-cell substreams make the result independent of scheduling
    beta = 137
    rng = column_rng(SEED, beta)
    ens = seed_uniform(grid, beta, 2000, rng)
    ens, _ = evolve_homogeneous(ens, mechs, band, grid, scales, dt, rng)
    counts = np.bincount(grid.locate_many(ens.u, ens.r), minlength=grid.n_cells)
    col = ens.weight * counts / (dt / scales.t_star)
    col[beta] = ens.weight * (counts[beta] - 2000) / (dt / scales.t_star) \
        + kmat.gamma_int[beta]
    col = np.maximum(col, 0.0)
    col_ok = np.array_equal(col, r1.k_mc.K[:, beta])
    ok = identical and col_ok
    _report("extract-k determinism / schedule independence", ok,
            f"repeat identical: {identical}, isolated column identical: {col_ok}")
    assert ok
