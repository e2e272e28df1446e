"""Variational quantities: energies, weak-form residuals and Pohozaev balances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    RadialFunction,
    dual_norm,
    grad_norm_sq,
    integrate_values,
    laplacian_apply,
)
from .nonlinearity import Nonlinearity
from .poisson import solve_phi


@dataclass(frozen=True)
class EnergyBreakdown:
    """Components of the coupled energy at a given field.

    Gamma_value = I_value + nonlocal, where nonlocal = (lam/4) int phi_u u^2
    is nonnegative, so the coupled energy always dominates the limit energy.
    """

    kinetic: float
    mass: float
    nonlocal_term: float
    potential: float
    I_value: float
    Gamma_value: float


def energy(u: RadialFunction, nl: Nonlinearity, lam: float) -> EnergyBreakdown:
    """Energy breakdown of both the coupled and the limit functional."""
    if lam < 0:
        raise ValueError(f"coupling parameter must be nonnegative, got {lam}")
    kinetic = 0.5 * grad_norm_sq(u)
    mass = 0.5 * integrate_values(u.grid, u.values**2)
    potential = integrate_values(u.grid, nl.F(u.values))
    nonlocal_term = 0.25 * lam * solve_phi(u, lam).coupling if lam > 0 else 0.0
    i_val = kinetic + mass - potential
    return EnergyBreakdown(
        kinetic=kinetic,
        mass=mass,
        nonlocal_term=nonlocal_term,
        potential=potential,
        I_value=i_val,
        Gamma_value=i_val + nonlocal_term,
    )


def gradient_residual(u: RadialFunction, nl: Nonlinearity, lam: float) -> RadialFunction:
    """Strong-form residual -Delta u + u + lam phi_u u - f(u) on the grid.

    Its pairing against test fields through the quadrature weights is the
    directional derivative of the coupled energy.
    """
    if lam < 0:
        raise ValueError(f"coupling parameter must be nonnegative, got {lam}")
    res = -laplacian_apply(u) + u.values - np.asarray(nl.f(u.values), dtype=float)
    if lam > 0:
        phi = solve_phi(u, lam).phi
        res = res + lam * phi.values * u.values
    return RadialFunction(u.grid, res)


def residual_dual_norm(u: RadialFunction, nl: Nonlinearity, lam: float) -> float:
    """Dual norm of the residual in the discrete H^1 pairing."""
    res = gradient_residual(u, nl, lam)
    return dual_norm(u.grid, res.values)


def pohozaev_P(u: RadialFunction, nl: Nonlinearity) -> float:
    """P(u) = |grad u|_2^2 - 6 int G(u); zero on the Pohozaev manifold."""
    return grad_norm_sq(u) - 6.0 * integrate_values(u.grid, nl.G(u.values))


def pohozaev_residual_lambda(u: RadialFunction, nl: Nonlinearity, lam: float) -> float:
    """Dilation-stationarity balance of the coupled energy.

    d/dt Gamma_lam(u(./t)) at t = 1 equals
    (1/2)|grad u|^2 + (3/2)|u|_2^2 + (5 lam/4) int phi_u u^2 - 3 int F(u),
    using the t, t^3, t^5, t^3 scalings of the four terms.  Vanishes at
    critical points; reported as a diagnostic, never enforced.
    """
    if lam < 0:
        raise ValueError(f"coupling parameter must be nonnegative, got {lam}")
    kin = 0.5 * grad_norm_sq(u)
    mass3 = 1.5 * integrate_values(u.grid, u.values**2)
    pot3 = 3.0 * integrate_values(u.grid, nl.F(u.values))
    nl5 = 1.25 * lam * solve_phi(u, lam).coupling if lam > 0 else 0.0
    return kin + mass3 + nl5 - pot3


def pohozaev_residual_lambda_relative(u: RadialFunction, nl: Nonlinearity, lam: float) -> float:
    """lambda-Pohozaev residual normalized by the magnitude of its terms."""
    kin = 0.5 * grad_norm_sq(u)
    mass3 = 1.5 * integrate_values(u.grid, u.values**2)
    pot3 = 3.0 * integrate_values(u.grid, nl.F(u.values))
    nl5 = 1.25 * lam * solve_phi(u, lam).coupling if lam > 0 else 0.0
    scale = kin + mass3 + abs(pot3) + nl5
    if scale == 0.0:
        return 0.0
    return abs(kin + mass3 + nl5 - pot3) / scale


def V_value(u: RadialFunction, nl: Nonlinearity) -> float:
    """Constraint functional V(u) = int G(u)."""
    return integrate_values(u.grid, nl.G(u.values))


def T0_value(u: RadialFunction) -> float:
    """Constraint functional T0(u) = (1/2) int |grad u|^2."""
    return 0.5 * grad_norm_sq(u)
