"""Large-system deterministic equivalents.

The heterogeneous balanced level frozen below was computed with
mpmath.findroot at 40 digits on the defining equation; the homogeneous
case is checked against its quadratic closed form.
"""

import numpy as np
import pytest

from maxmin_mimo.asymptotic import (
    aolp_powers,
    asym_dl_sinr,
    asym_sinr_given_powers,
    asym_ul_sinr,
    asymptotic_params,
    p_bar_powers,
    q_bar_powers,
    solve_tau_bar,
    xi_and_mu,
)
from maxmin_mimo.errors import ConvergenceError

GAMMA5 = np.array([1.2, 1.9, 1.4, 1.7, 1.1])
BETA5 = np.array([3e-4, 8e-4, 1.5e-4, 6e-4, 2.4e-4])
# mpmath root of tau = (rho p_max / mean(gamma/beta)) (M/K - mean(gamma tau/(1+gamma tau)))
# at M=20, K=5, rho=100, p_max=5
TAU5 = 0.39337698453872310703


def test_homogeneous_tau_matches_quadratic_root():
    # gamma = beta = 1: tau solves tau^2 + (1 + c - c r) tau - c r = 0,
    # c = rho p_max, r = M/K
    M, K, rho, p_max = 96, 24, 50.0, 2.0
    c, r = rho * p_max, M / K
    root = 0.5 * (-(1 + c - c * r) + np.sqrt((1 + c - c * r) ** 2 + 4 * c * r))
    got = solve_tau_bar(np.ones(K), np.ones(K), M, K, rho, p_max)
    assert abs(got - root) / root < 1e-10


def test_heterogeneous_tau_frozen_value():
    got = solve_tau_bar(GAMMA5, BETA5, 20, 5, 100.0, 5.0)
    assert abs(got - TAU5) / TAU5 < 1e-11


def test_tau_solves_defining_equation():
    tau = solve_tau_bar(GAMMA5, BETA5, 20, 5, 100.0, 5.0)
    scale = 100.0 * 5.0 / np.mean(GAMMA5 / BETA5)
    rhs = scale * (20 / 5 - np.mean(GAMMA5 * tau / (1 + GAMMA5 * tau)))
    assert abs(tau - rhs) <= 1e-10 * tau


def test_tau_monotonicity():
    base = solve_tau_bar(GAMMA5, BETA5, 20, 5, 100.0, 5.0)
    assert solve_tau_bar(GAMMA5, BETA5, 20, 5, 100.0, 10.0) > base
    assert solve_tau_bar(GAMMA5, BETA5, 40, 5, 100.0, 5.0) > base


def test_power_formulas_and_budgets():
    q_bar = q_bar_powers(GAMMA5, BETA5, 5.0)
    assert abs(np.mean(q_bar) - 5.0) < 1e-12
    # proportional to gamma/beta
    ratio = q_bar / (GAMMA5 / BETA5)
    assert np.max(ratio) / np.min(ratio) - 1 < 1e-12

    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.0)
    assert abs(np.mean(params.p_bar) - 5.0) / 5.0 < 1e-10


def test_xi_and_mu_formulas():
    tau = 0.7
    xi, mu = xi_and_mu(GAMMA5, tau, 0.4, 20, 5)
    gt = GAMMA5 * tau
    assert abs(xi - (4.0 - np.mean(gt**2 / (1 + gt) ** 2))) < 1e-14
    expect = (1 + 2 * 0.16 * gt + 0.16 * gt**2) / (1 + gt) ** 2
    assert np.allclose(mu, expect, rtol=1e-14)
    # perfect CSI: mu collapses to 1/(1+gt)^2
    _, mu0 = xi_and_mu(GAMMA5, tau, 0.0, 20, 5)
    assert np.allclose(mu0, 1 / (1 + gt) ** 2, rtol=1e-14)


def test_perfect_csi_sinrs_reduce_to_gamma_tau():
    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.0)
    target = GAMMA5 * params.tau_bar
    assert np.max(np.abs(asym_dl_sinr(params, BETA5, 100.0) - target) / target) < 1e-12
    assert np.max(np.abs(asym_ul_sinr(params, BETA5, 100.0) - target) / target) < 1e-12


def test_plug_in_powers_equalize_only_under_perfect_csi():
    p0 = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.0)
    w0 = asym_dl_sinr(p0, BETA5, 100.0) / GAMMA5
    assert np.max(w0) / np.min(w0) - 1 < 1e-12
    p5 = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.5)
    w5 = asym_dl_sinr(p5, BETA5, 100.0) / GAMMA5
    assert np.max(w5) / np.min(w5) - 1 > 1e-3  # plug-in powers lose optimality


def test_direction_argument_is_validated():
    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.0)
    with pytest.raises(ValueError):
        asym_sinr_given_powers(params, BETA5, 100.0, params.q_bar, "sideways")


# ------------------------------------------------------------------- A-OLP

def test_aolp_equalizes_weighted_sinrs_and_budgets():
    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.5)
    ap = aolp_powers(params, GAMMA5, BETA5, 100.0, 5.0)
    for sinr in (ap.sinr_dl, ap.sinr_ul):
        w = sinr / GAMMA5
        assert np.max(w) / np.min(w) - 1 < 1e-12
    assert abs(np.mean(ap.p_tilde) - 5.0) / 5.0 < 1e-12
    assert abs(np.mean(ap.q_tilde) - 5.0) / 5.0 < 1e-12


def test_aolp_reduces_to_plug_in_at_perfect_csi():
    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.0)
    ap = aolp_powers(params, GAMMA5, BETA5, 100.0, 5.0)
    assert np.max(np.abs(ap.p_tilde - params.p_bar) / params.p_bar) < 1e-12
    assert np.max(np.abs(ap.q_tilde - params.q_bar) / params.q_bar) < 1e-12


def test_aolp_uplink_powers_equal_q_bar_for_scalar_eta():
    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=0.35)
    ap = aolp_powers(params, GAMMA5, BETA5, 100.0, 5.0)
    assert np.max(np.abs(ap.q_tilde - params.q_bar) / params.q_bar) < 1e-13


def test_aolp_matches_power_iteration_oracle():
    # equalizing the weighted asymptotic SINRs with the budget pinned to
    # p_max makes the powers fixed points of
    #   p_k <- gamma_k (mu_k mean(p) + 1/(rho beta_k)) / (1 - eta_k^2)
    #   q_k <- gamma_k (mean(beta mu q) + 1/rho) / (beta_k (1 - eta_k^2))
    # followed by renormalization (the constant xi cancels); iterate that
    eta = np.array([0.2, 0.5, 0.3, 0.6, 0.4])
    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=eta)
    ap = aolp_powers(params, GAMMA5, BETA5, 100.0, 5.0)

    p = np.ones(5)
    q = np.ones(5)
    for _ in range(50):
        p = GAMMA5 * (params.mu * np.mean(p) + 1 / (100.0 * BETA5)) / (1 - eta**2)
        p *= 5.0 / np.mean(p)
        q = GAMMA5 * (np.mean(BETA5 * params.mu * q) + 1 / 100.0) / (BETA5 * (1 - eta**2))
        q *= 5.0 / np.mean(q)
    assert np.max(np.abs(p - ap.p_tilde) / ap.p_tilde) < 1e-10
    assert np.max(np.abs(q - ap.q_tilde) / ap.q_tilde) < 1e-10
    # and equalization itself holds under heterogeneous eta
    for sinr in (ap.sinr_dl, ap.sinr_ul):
        w = sinr / GAMMA5
        assert np.max(w) / np.min(w) - 1 < 1e-12


def test_aolp_rejects_useless_estimates():
    params = asymptotic_params(GAMMA5, BETA5, 20, 5, 100.0, 5.0, eta=1.0)
    with pytest.raises(ConvergenceError):
        aolp_powers(params, GAMMA5, BETA5, 100.0, 5.0)
