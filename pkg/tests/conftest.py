import numpy as np
import pytest

from bpdg.band import BandModel
from bpdg.collision import build_silicon_mechanisms, k_matrix_oracle
from bpdg.kgrid import KGrid, build_grid
from bpdg.params import DeviceConfig, MaterialParams, build_scales


@pytest.fixture(scope="session")
def mat():
    return MaterialParams()


@pytest.fixture(scope="session")
def scales(mat):
    return build_scales(mat)


@pytest.fixture(scope="session")
def band(mat):
    return BandModel(kind="kane", m_star=mat.m_star, alpha_kane=mat.alpha_kane)


@pytest.fixture(scope="session")
def mechs(mat, scales):
    return build_silicon_mechanisms(mat, scales)


@pytest.fixture(scope="session")
def small_grid(band, scales):
    cfg = DeviceConfig(n_u=12, n_r=6)
    return build_grid(cfg, band, scales)


@pytest.fixture(scope="session")
def small_kmat(small_grid, band, mechs):
    return k_matrix_oracle(small_grid, band, mechs)


@pytest.fixture(scope="session")
def unit_cell_grid(band, scales):
    """Single cell [0,1] x [0,1] in (u, r)."""
    return KGrid(np.array([0.0, 1.0]), np.array([0.0, 1.0]), band, scales.k_star)
