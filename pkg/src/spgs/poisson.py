"""Nonlocal Poisson layer: the Coulomb potential of u^2 and its energies.

Convention: the potential carries one factor of the coupling parameter,
phi_u = lambda * Newton[u^2], and the energy and equation carry another
explicit lambda.  The quartic interaction term therefore scales like
lambda^2, which sets every asymptotic rate downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import RadialFunction, RadialGrid, dilate, integrate_values


@dataclass(frozen=True)
class PoissonSolution:
    """Potential phi with its Dirichlet energy and the coupling integral.

    coupling is int phi u^2 over R^3; dirichlet_energy is the full-space
    |grad phi|_2^2 obtained from the identity int |grad phi|^2 = lam int u^2 phi.
    """

    phi: RadialFunction
    lam: float
    dirichlet_energy: float
    coupling: float


def solve_phi(u: RadialFunction, lam: float) -> PoissonSolution:
    """Newton potential of lam * u^2 by prefix sums in O(n).

    phi(r) = lam * [ (1/r) int_0^r u^2 s^2 ds + int_r^R u^2 s ds ], which is
    the symmetric-kernel quadrature sum_j W_j u_j^2 / (4 pi max(r, s_j)) with
    the grid weights W; at r = 0 the interior term is replaced by its limit.
    """
    lam = float(lam)
    if lam < 0:
        raise ValueError(f"coupling parameter must be nonnegative, got {lam}")
    grid = u.grid
    r = grid.nodes
    a = grid.weights * u.values**2 / (4.0 * np.pi)  # W_j u_j^2 / 4pi

    interior = np.cumsum(a) - a  # sum over j < i
    over_r = a / np.where(r > 0, r, np.inf)
    exterior = (np.cumsum(over_r[::-1]))[::-1]  # sum over j >= i of a_j / r_j
    phi_vals = np.empty_like(a)
    phi_vals[1:] = lam * (interior[1:] / r[1:] + exterior[1:])
    phi_vals[0] = lam * exterior[0]

    phi = RadialFunction(grid, phi_vals)
    coupling = integrate_values(grid, phi_vals * u.values**2)
    return PoissonSolution(phi=phi, lam=lam,
                           dirichlet_energy=lam * coupling,
                           coupling=coupling)


def dirichlet_energy_direct(sol: PoissonSolution, u: RadialFunction) -> float:
    """Cross-check of the Dirichlet energy: 4 pi int_0^R phi'^2 r^2 dr plus the
    exact exterior contribution 4 pi lam^2 Q^2 / R of the far field lam Q / r."""
    grid = sol.phi.grid
    h = grid.h
    faces = 0.5 * (grid.nodes[1:] + grid.nodes[:-1])
    dphi = np.diff(sol.phi.values) / h
    inside = 4.0 * np.pi * h * float(np.sum(faces**2 * dphi**2))
    charge = float(np.dot(grid.weights, u.values**2)) / (4.0 * np.pi)
    outside = 4.0 * np.pi * sol.lam**2 * charge**2 / grid.R
    return inside + outside


def T_value(u: RadialFunction, lam: float) -> float:
    """Interaction functional (1/4) int phi_u u^2."""
    return 0.25 * solve_phi(u, lam).coupling


def coupling_scaling_check(u: RadialFunction, lam: float, t: float) -> float:
    """Ratio coupling(u(./t)) / coupling(u); equals t^5 up to interpolation error."""
    if not t > 0:
        raise ValueError(f"dilation scale must be positive, got {t}")
    lam = float(lam) if lam > 0 else 1.0  # ratio is lambda-independent
    base = solve_phi(u, lam).coupling
    scaled = solve_phi(dilate(u, t), lam).coupling
    return scaled / base


def dense_phi_oracle(u: RadialFunction, lam: float) -> np.ndarray:
    """O(n^2) dense-kernel evaluation of the potential, test oracle only."""
    grid = u.grid
    r = grid.nodes
    a = grid.weights * u.values**2 / (4.0 * np.pi)
    kernel = 1.0 / np.maximum(r[:, None], np.maximum(r[None, :], 1e-300))
    return lam * kernel @ a
