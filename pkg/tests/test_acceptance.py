"""End-to-end acceptance battery.

Each test prints one summary line with its measured margins so a full run
reads as a checklist; tolerances are part of the contract of the suite.
"""

import math

import numpy as np
import pytest
from scipy.special import erf

from spgs import (
    RadialFunction,
    SOBOLEV_S_CLOSED_FORM,
    asymptotics_report,
    best_Cq,
    canonical_family,
    check_hypotheses,
    continuation,
    dilate,
    energy,
    find_t0,
    grad_norm_sq,
    gradient_residual,
    make_grid,
    minimize_on_M,
    mu_threshold,
    shoot_ground_state,
    sobolev_S,
    solve_phi,
    user_nonlinearity,
)
from spgs.functionals import pohozaev_P, pohozaev_residual_lambda
from spgs.poisson import coupling_scaling_check
from spgs.sp_solver import path_max_D


@pytest.fixture
def report(capsys):
    """Print one pass/fail line per criterion, bypassing output capture."""

    def _report(name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return _report


def test_criterion_1_poisson_gaussian_oracle(report):
    grid = make_grid(12.0, 4000)
    u = RadialFunction(grid, np.exp(-grid.nodes**2 / 2.0))
    sol = solve_phi(u, 1.0)
    r = grid.nodes
    exact = np.empty_like(r)
    exact[1:] = (math.sqrt(math.pi) / 4.0) * erf(r[1:]) / r[1:]
    exact[0] = 0.5
    window = r <= 8.0
    phi_err = float(np.max(np.abs(sol.phi.values[window] - exact[window])
                           / np.abs(exact[window])))
    coupling_exact = math.pi**1.5 / (2.0 * math.sqrt(2.0))
    cpl_err = abs(sol.coupling - coupling_exact) / coupling_exact
    report("criterion 1 (potential closed form)",
           phi_err <= 1e-5 and cpl_err <= 1e-6,
           f"phi max rel err {phi_err:.2e} (tol 1e-5), "
           f"coupling rel err {cpl_err:.2e} (tol 1e-6)")


def test_criterion_2_coupling_dilation_scaling(report):
    grid = make_grid(12.0, 4000)
    u = RadialFunction(grid, np.exp(-grid.nodes**2 / 2.0))
    errs = {t: abs(coupling_scaling_check(u, 1.0, t) - t**5) / t**5
            for t in (0.5, 2.0)}
    report("criterion 2 (t^5 interaction scaling)",
           all(e <= 1e-3 for e in errs.values()),
           ", ".join(f"t={t:g}: rel err {e:.2e}" for t, e in errs.items())
           + " (tol 1e-3)")


def test_criterion_3_limit_levels(report, ground_cubic, nl_cubic):
    gs = ground_cubic
    p_pred = (2.0 * math.sqrt(3.0) / 9.0) * gs.M_value**1.5
    p_err = abs(gs.p_value - p_pred) / p_pred
    A = grad_norm_sq(gs.omega)
    b_err = abs(gs.b_value - A / 3.0) / gs.b_value
    poh = abs(pohozaev_P(gs.omega, nl_cubic)) / A
    t_err = abs(gs.t_star - 1.0)
    bp_err = abs(gs.b_value - gs.p_value) / gs.p_value
    ok = (p_err <= 1e-6 and b_err <= 1e-4 and poh <= 1e-4
          and t_err <= 1e-3 and bp_err <= 1e-5)
    report("criterion 3 (limit level identities)", ok,
           f"p identity {p_err:.2e} (tol 1e-6), b vs A/3 {b_err:.2e} (tol 1e-4), "
           f"Pohozaev {poh:.2e} (tol 1e-4), |t*-1| {t_err:.2e} (tol 1e-3), "
           f"b vs p {bp_err:.2e} (tol 1e-5)")


def test_criterion_4_two_route_agreement(report, grid30):
    details = []
    ok = True
    for q in (3.0, 4.0, 5.0):
        nl = canonical_family(1.0, q, 0.0)
        gs = minimize_on_M(nl, grid30)
        w = shoot_ground_state(nl, grid30)
        i_shoot = energy(w, nl, 0.0).I_value
        rel = abs(i_shoot - gs.b_value) / gs.b_value
        ok = ok and rel <= 1e-3
        details.append(f"q={q:g}: rel {rel:.2e}")
    report("criterion 4 (flow vs shooting)", ok,
           ", ".join(details) + " (tol 1e-3)")


def test_criterion_5_constants_chain(report, grid30):
    S, _ = sobolev_S(grid30)
    s_err = abs(S - SOBOLEV_S_CLOSED_FORM) / SOBOLEV_S_CLOSED_FORM
    q = 4.0
    c4 = best_Cq(q, grid30)
    mu = 2.0 * mu_threshold(q, S, c4)
    gs = minimize_on_M(canonical_family(mu, q, 1.0), grid30)
    bound = (q - 2.0) / (2.0 * q) * mu ** (-2.0 / (q - 2.0)) * c4 ** (q / (q - 2.0))
    margin = (bound - gs.b_value) / bound
    ok = s_err <= 1e-2 and gs.b_value < bound
    report("criterion 5 (embedding constants and level bound)", ok,
           f"S rel err {s_err:.2e} (tol 1e-2), level {gs.b_value:.6f} < "
           f"bound {bound:.6f} (margin {margin:.1%}) at mu = 2 x threshold")


SCHEDULE = (0.2, 0.1, 0.05, 0.02, 0.01, 0.005)


@pytest.fixture(scope="module")
def branch(nl_cubic, ground_cubic):
    return continuation(nl_cubic, SCHEDULE, ground_cubic)


def test_criterion_6_small_coupling_asymptotics(report, branch, nl_cubic, ground_cubic):
    rep = asymptotics_report(branch, nl_cubic)
    t0 = find_t0(ground_cubic.omega, nl_cubic)
    D0 = path_max_D(ground_cubic.omega, nl_cubic, 0.0, t0)
    d0_err = abs(D0 - rep.b_ref) / rep.b_ref
    ok = (0.9 <= rep.slope_phi_d12 <= 1.1
          and 1.8 <= rep.slope_gamma_gap <= 2.2
          and 1.8 <= rep.slope_D_gap <= 2.2
          and rep.h1_dist_monotone
          and rep.energy_ordering_ok
          and d0_err <= 1e-6)
    report("criterion 6 (coupling asymptotics)", ok,
           f"slopes: potential {rep.slope_phi_d12:.3f} (in [0.9,1.1]), "
           f"energy gap {rep.slope_gamma_gap:.3f}, ceiling gap "
           f"{rep.slope_D_gap:.3f} (in [1.8,2.2]); distance monotone "
           f"{rep.h1_dist_monotone}; ceiling at zero rel err {d0_err:.2e} (tol 1e-6)")


def test_criterion_7_gradient_consistency(report, grid30, nl_cubic):
    rng = np.random.default_rng(20260823)
    eps = 1e-5
    worst = 0.0
    lams = (0.0, 0.1, 0.5)
    for k in range(20):
        lam = lams[k % 3]
        wu, wv = rng.uniform(0.8, 3.0, size=2)
        au, av = rng.uniform(0.3, 1.5, size=2)
        u_vals = au * np.exp(-grid30.nodes**2 / (2 * wu**2))
        v_vals = av * np.exp(-grid30.nodes**2 / (2 * wv**2)) \
            * (1.0 + 0.3 * np.sin(grid30.nodes))
        u_vals[-1] = v_vals[-1] = 0.0
        res = gradient_residual(RadialFunction(grid30, u_vals), nl_cubic, lam)
        pairing = float(np.dot(grid30.weights, res.values * v_vals))
        ep = energy(RadialFunction(grid30, u_vals + eps * v_vals), nl_cubic, lam).Gamma_value
        em = energy(RadialFunction(grid30, u_vals - eps * v_vals), nl_cubic, lam).Gamma_value
        fd = (ep - em) / (2.0 * eps)
        worst = max(worst, abs(fd - pairing) / max(abs(fd), 1e-12))
    report("criterion 7 (variational gradient consistency)", worst <= 1e-5,
           f"worst rel mismatch over 20 random triples {worst:.2e} (tol 1e-5)")


def test_criterion_8_dilation_stationarity(report, branch, nl_cubic):
    worst_rel = max(pt.pohozaev_res_rel for pt in branch.points)
    # independent cross-check: numerical dilation derivative at one point
    pt = branch.points[1]
    dt = 1e-4
    gp = energy(dilate(pt.u, 1.0 + dt), nl_cubic, pt.lam).Gamma_value
    gm = energy(dilate(pt.u, 1.0 - dt), nl_cubic, pt.lam).Gamma_value
    fd = (gp - gm) / (2.0 * dt)
    analytic = pohozaev_residual_lambda(pt.u, nl_cubic, pt.lam)
    fd_err = abs(fd - analytic) / abs(pt.gamma_energy)
    ok = worst_rel <= 1e-3 and fd_err <= 1e-3
    report("criterion 8 (coupled dilation balance)", ok,
           f"worst relative residual {worst_rel:.2e} (tol 1e-3), numerical "
           f"derivative cross-check {fd_err:.2e} (tol 1e-3)")


def test_criterion_9_grid_convergence(report, nl_cubic):
    # true-error orders for the potential oracle under factor-2 refinement
    errs = []
    coupling_exact = math.pi**1.5 / (2.0 * math.sqrt(2.0))
    for n in (1000, 2000, 4000):
        g = make_grid(12.0, n)
        u = RadialFunction(g, np.exp(-g.nodes**2 / 2.0))
        sol = solve_phi(u, 1.0)
        errs.append(abs(sol.coupling - coupling_exact) / coupling_exact)
    p_phi = min(math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2]))

    # Richardson orders for the solver levels
    Ms = []
    for n in (751, 1501, 3001):
        gs = minimize_on_M(nl_cubic, make_grid(30.0, n))
        Ms.append(gs.M_value)
    p_M = math.log2(abs(Ms[0] - Ms[1]) / abs(Ms[1] - Ms[2]))
    ok = p_phi >= 1.8 and p_M >= 1.8
    report("criterion 9 (grid convergence orders)", ok,
           f"interaction integral order {p_phi:.2f}, constrained minimum order "
           f"{p_M:.2f} (both >= 1.8)")


def test_criterion_10_hypothesis_screening(report):
    good = check_hypotheses(canonical_family(1.0, 4.0, 0.0))
    linear = user_nonlinearity(lambda s: np.maximum(s, 0.0), mu=1.0, q=4.0, kappa=1.0)
    bad1 = check_hypotheses(linear)
    signed = user_nonlinearity(lambda s: np.abs(s) ** 3, mu=1.0, q=4.0, kappa=0.5)
    bad2 = check_hypotheses(signed)
    ok = (good.all_passed
          and not bad1["vanishing_slope_at_zero"].passed
          and not bad2["vanishes_on_negatives"].passed)
    report("criterion 10 (admissibility screening)", ok,
           f"canonical passes: {good.all_passed}; linear-at-zero rejected: "
           f"{not bad1['vanishing_slope_at_zero'].passed}; signed growth rejected: "
           f"{not bad2['vanishes_on_negatives'].passed}")
