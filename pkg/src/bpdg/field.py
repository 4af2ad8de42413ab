"""1D electrostatics: potential and field from the charge imbalance.

Solves d/dx(eps_r dV/dx) = (q/eps0) (rho - N_D) on nodes with Dirichlet
values V(0) = 0 and V(L) = bias, by direct tridiagonal elimination. The
field is the negative potential gradient, one value per interval, which is
what the transport stencil consumes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .params import CONST


@dataclass(frozen=True)
class PoissonProblem:
    n_x: int
    dx: float             # m
    eps_r: np.ndarray     # relative permittivity per interval, length n_x
    v_left: float = 0.0   # V at x = 0
    v_right: float = 0.0  # V at x = L

    def __post_init__(self):
        if self.n_x < 2:
            raise ValueError("need at least 2 intervals")
        if not self.dx > 0:
            raise ValueError("dx must be > 0")
        eps = np.asarray(self.eps_r, dtype=float)
        if eps.shape != (self.n_x,):
            raise ValueError(f"eps_r must have shape ({self.n_x},)")
        if np.any(eps < 1.0):
            raise ValueError("eps_r must be >= 1 everywhere")


def solve_poisson(problem: PoissonProblem, rho: np.ndarray, n_d: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Potential at nodes [V] and field per interval [V/m].

    rho and n_d are electron density and doping per interval [1/m^3]; the
    node source is the average of the two adjacent intervals.
    """
    n = problem.n_x
    rho = np.asarray(rho, dtype=float)
    n_d = np.asarray(n_d, dtype=float)
    if rho.shape != (n,) or n_d.shape != (n,):
        raise ValueError("rho and n_d must be per-interval arrays")
    eps = np.asarray(problem.eps_r, dtype=float)
    dx2 = problem.dx * problem.dx

    src = (CONST.q / CONST.eps0) * (rho - n_d)
    src_node = 0.5 * (src[:-1] + src[1:])  # interior nodes 1..n-1

    # interior rows of eps[i](V[i+1]-V[i]) - eps[i-1](V[i]-V[i-1]) = dx^2*src
    lower = eps[:-1].copy()
    upper = eps[1:].copy()
    diag = -(eps[:-1] + eps[1:])
    rhs = dx2 * src_node
    rhs[0] -= lower[0] * problem.v_left
    rhs[-1] -= upper[-1] * problem.v_right

    ab = np.zeros((3, n - 1))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    v_int = solve_banded((1, 1), ab, rhs)

    v = np.empty(n + 1)
    v[0] = problem.v_left
    v[1:-1] = v_int
    v[-1] = problem.v_right
    e_x = -np.diff(v) / problem.dx
    return v, e_x
