import math

import pytest

from spgs import (
    SOBOLEV_S_CLOSED_FORM,
    best_Cq,
    canonical_family,
    constants_report,
    minimize_on_M,
    mu_threshold,
    norm_lq,
    sobolev_S,
)


def test_closed_form_value():
    assert SOBOLEV_S_CLOSED_FORM == pytest.approx(
        3.0 * math.pi * (math.sqrt(math.pi) / 4.0) ** (2.0 / 3.0), rel=1e-15
    )


def test_sobolev_S_close_to_closed_form(grid30):
    S, _ = sobolev_S(grid30)
    assert S == pytest.approx(SOBOLEV_S_CLOSED_FORM, rel=1e-2)
    # truncation can only push the variational value up
    assert S >= SOBOLEV_S_CLOSED_FORM - 1e-10


def test_best_Cq_matches_ground_state_identity(grid30, ground_cubic):
    c4 = best_Cq(4.0, grid30)
    # the pure-power ground state attains the quotient: C_q = |w|_q^(q-2)
    attained = norm_lq(ground_cubic.omega, 4.0) ** 2
    assert c4 == pytest.approx(attained, rel=1e-4)
    assert c4 <= attained + 1e-12


def test_best_Cq_rejects_bad_exponent(grid30):
    with pytest.raises(ValueError):
        best_Cq(2.0, grid30)
    with pytest.raises(ValueError):
        best_Cq(6.0, grid30)


def test_mu_threshold_formula():
    S, Cq, q = 5.5, 8.7, 4.0
    expected = ((3.0 * q - 6.0) / (2.0 * q * S**1.5)) ** ((q - 2.0) / 2.0) * Cq ** (q / 2.0)
    assert mu_threshold(q, S, Cq) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        mu_threshold(4.0, -1.0, Cq)
    with pytest.raises(ValueError):
        mu_threshold(7.0, S, Cq)


def test_level_bound_above_threshold(grid30):
    # above the coupling threshold the least-energy level of the mixed
    # critical family stays strictly below the pure-power bound
    S, _ = sobolev_S(grid30)
    q = 4.0
    c4 = best_Cq(q, grid30)
    mu = 2.0 * mu_threshold(q, S, c4)
    gs = minimize_on_M(canonical_family(mu, q, 1.0), grid30)
    bound = (q - 2.0) / (2.0 * q) * mu ** (-2.0 / (q - 2.0)) * c4 ** (q / (q - 2.0))
    assert gs.b_value < bound
    assert gs.b_value > 0


def test_constants_report_structure(grid30):
    rep = constants_report(grid30, [3.0, 4.0])
    assert set(rep.Cq) == {3.0, 4.0}
    assert set(rep.mu_thresholds) == {3.0, 4.0}
    assert rep.S > 0
    assert all(v > 0 for v in rep.Cq.values())
    assert all(v > 0 for v in rep.mu_thresholds.values())
    assert "S" in rep.provenance
