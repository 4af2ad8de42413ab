import numpy as np
import pytest

from bpdg.collision import CollisionMatrix, k_matrix_oracle
from bpdg.kgrid import build_grid
from bpdg.params import DeviceConfig
from bpdg.transport import BoundarySpec, StateField, apply_bc, rhs, rhs_core


@pytest.fixture(scope="module")
def zero_kmat(small_grid):
    n = small_grid.n_cells
    return CollisionMatrix(K=np.zeros((n, n)), gamma_int=np.zeros(n),
                           provenance="oracle")


def _neutral_bc(grid, values):
    """Contacts whose doping equals the actual boundary density."""
    k3 = grid.k_star ** 3
    return BoundarySpec(left_doping=float(grid.measure @ values[:, 0]) * k3,
                        right_doping=float(grid.measure @ values[:, -1]) * k3)


def test_rhs_zero_for_uniform_state(small_grid, zero_kmat, scales):
    n, n_x = small_grid.n_cells, 8
    values = np.tile(np.linspace(1.0, 2.0, n)[:, None], (1, n_x))
    st = StateField(values=values)
    bc = _neutral_bc(small_grid, values)
    out = rhs(st, small_grid, zero_kmat, np.zeros(n_x), bc, scales, dx=1e-9)
    assert np.abs(out).max() < 1e-14


def test_field_term_fills_lower_neighbor_for_positive_field(small_grid, zero_kmat, scales):
    g = small_grid
    n = g.n_cells
    iu, ir = g.n_u // 2, g.n_r // 2
    cell = iu * g.n_r + ir
    values = np.zeros((n, 1))
    values[cell, 0] = 1.0
    ghosts = np.zeros(n)
    e_pos = np.array([2.0])  # dimensionless, >= 0
    out = rhs_core(values, g, zero_kmat, e_pos, 1.0, ghosts, ghosts)
    lower = cell - g.n_r
    upper = cell + g.n_r
    assert out[cell, 0] < 0.0            # drains through its lower u-face
    assert out[lower, 0] > 0.0           # only the u-lower neighbor fills
    assert out[upper, 0] == 0.0
    others = np.delete(np.arange(n), [cell, lower])
    assert np.all(out[others, 0] == 0.0)
    # electrons drift toward negative u when E_x > 0: flip the sign and the
    # mass must go the other way
    out_neg = rhs_core(values, g, zero_kmat, -e_pos, 1.0, ghosts, ghosts)
    assert out_neg[upper, 0] > 0.0
    assert out_neg[lower, 0] == 0.0


def test_interval_mass_conserved_without_field(small_grid, small_kmat, scales):
    rng = np.random.default_rng(0)
    n, n_x = small_grid.n_cells, 6
    values = np.tile(rng.uniform(0.5, 1.5, n)[:, None], (1, n_x))
    st = StateField(values=values)
    bc = _neutral_bc(small_grid, values)
    out = rhs(st, small_grid, small_kmat, np.zeros(n_x), bc, scales, dx=1e-9)
    col = small_grid.measure @ out
    scale = np.abs(small_kmat.K @ values[:, 0]).sum()
    assert np.abs(col).max() / scale < 1e-12


def test_interior_flux_telescopes_for_u_constant_state(small_grid, zero_kmat):
    g = small_grid
    rng = np.random.default_rng(1)
    per_ring = rng.uniform(0.5, 1.0, g.n_r)
    values = np.tile(per_ring, g.n_u)[:, None]
    ghosts = values[:, 0]
    for e in (np.array([1.5]), np.array([-1.5])):
        out = rhs_core(values, g, zero_kmat, e, 1e9, ghosts, ghosts)
        out3 = out.reshape(g.n_u, g.n_r)
        assert np.all(out3[1:-1, :] == 0.0)
        # exactly one u-extreme row is nonzero (the inflow face is empty)
        assert np.any(out3[0, :] != 0.0) != np.any(out3[-1, :] != 0.0)


def test_parity_under_field_flip(small_grid, small_kmat, scales):
    g = small_grid
    rng = np.random.default_rng(2)
    n, n_x = g.n_cells, 4
    values = np.tile(rng.uniform(0.1, 1.0, n)[:, None], (1, n_x))
    st = StateField(values=values)
    bc = _neutral_bc(g, values)
    e = np.full(n_x, 4.0e5)  # V/m
    out = rhs(st, g, small_kmat, e, bc, scales, dx=1e-9)

    mirror = np.arange(n).reshape(g.n_u, g.n_r)[::-1, :].ravel()
    st_m = StateField(values=values[mirror])
    bc_m = _neutral_bc(g, values[mirror])
    out_m = rhs(st_m, g, small_kmat, -e, bc_m, scales, dx=1e-9)
    assert np.allclose(out_m, out[mirror], rtol=1e-12, atol=1e-18)


def test_rhs_core_linearity(small_grid, small_kmat):
    g = small_grid
    rng = np.random.default_rng(3)
    n, n_x = g.n_cells, 5
    e = rng.uniform(-3, 3, n_x)
    args = (g, small_kmat, e, 0.7)
    f1, f2 = rng.uniform(size=(n, n_x)), rng.uniform(size=(n, n_x))
    g1, g2 = rng.uniform(size=n), rng.uniform(size=n)
    h1, h2 = rng.uniform(size=n), rng.uniform(size=n)
    a, b = 0.37, -1.2
    lhs = rhs_core(a * f1 + b * f2, *args, a * g1 + b * g2, a * h1 + b * h2)
    rhs_ = a * rhs_core(f1, *args, g1, h1) + b * rhs_core(f2, *args, g2, h2)
    assert np.allclose(lhs, rhs_, rtol=1e-12, atol=1e-14)


def test_apply_bc_scaling(small_grid):
    g = small_grid
    rng = np.random.default_rng(4)
    values = rng.uniform(0.5, 1.0, (g.n_cells, 3))
    st = StateField(values=values)
    rho_l = float(g.measure @ values[:, 0]) * g.k_star ** 3
    # contact doping equal to the boundary density: ghost equals boundary
    gl, gr = apply_bc(st, g, BoundarySpec(rho_l, rho_l))
    assert np.allclose(gl, values[:, 0], rtol=1e-13)
    # doping half the boundary density: ghost is half the boundary values
    gl2, _ = apply_bc(st, g, BoundarySpec(0.5 * rho_l, rho_l))
    assert np.allclose(gl2, 0.5 * values[:, 0], rtol=1e-13)


def test_apply_bc_zero_density_rejected(small_grid):
    st = StateField(values=np.zeros((small_grid.n_cells, 2)))
    with pytest.raises(ValueError, match="density"):
        apply_bc(st, small_grid, BoundarySpec(1e23, 1e23))


def test_upwind_direction_in_x(small_grid, zero_kmat, scales):
    g = small_grid
    n, n_x = g.n_cells, 5
    # state growing linearly in x; ghost values continue the line
    slope = np.linspace(0.0, 1.0, n_x + 2)
    values = np.tile(slope[1:-1], (n, 1))
    gl = np.full(n, slope[0])
    gr = np.full(n, slope[-1])
    out = rhs_core(values, g, zero_kmat, np.zeros(n_x), 1.0, gl, gr)
    dfdx = slope[2] - slope[1]
    expected = -(g.eta_x / g.measure)[:, None] * dfdx
    assert np.allclose(out, expected, rtol=1e-12, atol=1e-15)


def test_efield_shape_checked(small_grid, zero_kmat, scales):
    st = StateField(values=np.ones((small_grid.n_cells, 4)))
    bc = _neutral_bc(small_grid, st.values)
    with pytest.raises(ValueError, match="interval"):
        rhs(st, small_grid, zero_kmat, np.zeros(3), bc, scales, dx=1e-9)
