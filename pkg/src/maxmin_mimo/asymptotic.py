"""Closed-form large-system approximations of the max-min transceivers.

In the regime M, K -> infinity at fixed ratio, the dual powers, balanced
level and downlink powers of the exact solver converge to deterministic
values that depend only on (gamma, beta, M, K, rho, p_max, eta):

    tau_bar : unique positive root of
              tau = (rho p_max / abar) (M/K - (1/K) sum_i gamma_i tau / (1 + gamma_i tau)),
              abar = (1/K) sum_i gamma_i / beta_i
    q_bar_k = (gamma_k / beta_k) p_max / abar
    xi      = M/K - (1/K) sum_i (gamma_i tau_bar)^2 / (1 + gamma_i tau_bar)^2
    mu_k    = (1 + 2 eta_k^2 gamma_k tau_bar + eta_k^2 gamma_k^2 tau_bar^2)
              / (1 + gamma_k tau_bar)^2
    p_bar_k = (gamma_k / beta_k)(tau_bar / xi)(beta_k p_max / (1 + gamma_k tau_bar)^2 + 1/rho)

With imperfect CSI the plug-in powers are no longer optimal; the
asymptotically optimal powers (the Perron vectors of the rank-one
asymptotic coupling matrices) are returned by aolp_powers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError


@dataclass(frozen=True)
class AsymptoticParams:
    """Deterministic equivalents at one operating point."""

    tau_bar: float
    q_bar: np.ndarray
    p_bar: np.ndarray
    xi: float
    mu: np.ndarray
    eta: np.ndarray  # per-user CSI error levels the equivalents were built for


@dataclass(frozen=True)
class AolpPowers:
    """Asymptotically optimal power vectors under imperfect CSI."""

    p_tilde: np.ndarray  # downlink
    q_tilde: np.ndarray  # uplink
    sinr_dl: np.ndarray  # asymptotic DL SINRs at p_tilde
    sinr_ul: np.ndarray  # asymptotic UL SINRs at q_tilde


def solve_tau_bar(gamma, beta, M, K, rho, p_max, tol=1e-12) -> float:
    """Bisection for the unique positive root of the tau_bar equation.

    The right-hand side is strictly decreasing in tau and positive at 0,
    so g(tau) = tau - rhs(tau) brackets a single sign change; the upper
    bracket is grown geometrically before bisecting down to |g| <= tol
    (or to floating-point interval exhaustion).
    """
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    abar = np.mean(gamma / beta)
    scale = rho * p_max / abar

    def g(tau):
        rhs = scale * (M / K - np.mean(gamma * tau / (1.0 + gamma * tau)))
        return tau - rhs

    hi = max(scale * M / K, 1.0)
    while g(hi) < 0:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = g(mid)
        if abs(val) <= tol:
            return mid
        if val < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)


def q_bar_powers(gamma, beta, p_max) -> np.ndarray:
    """Asymptotic dual uplink powers q_bar_k (independent of eta and rho)."""
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return (gamma / beta) * p_max / np.mean(gamma / beta)


def xi_and_mu(gamma, tau_bar, eta, M, K):
    """Interference functionals xi (scalar) and mu_k (length K)."""
    gamma = np.asarray(gamma, dtype=float)
    eta = np.asarray(eta, dtype=float) * np.ones_like(gamma)
    gt = gamma * tau_bar
    xi = M / K - np.mean(gt**2 / (1.0 + gt) ** 2)
    mu = (1.0 + 2.0 * eta**2 * gt + eta**2 * gt**2) / (1.0 + gt) ** 2
    return float(xi), mu


def p_bar_powers(gamma, beta, tau_bar, xi, rho, p_max) -> np.ndarray:
    """Asymptotic downlink powers of the plug-in precoder."""
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    gt = gamma * tau_bar
    return (gamma / beta) * (tau_bar / xi) * (beta * p_max / (1.0 + gt) ** 2 + 1.0 / rho)


def asymptotic_params(gamma, beta, M, K, rho, p_max, eta, tol=1e-12) -> AsymptoticParams:
    """Compose the full set of deterministic equivalents."""
    gamma = np.asarray(gamma, dtype=float)
    tau_bar = solve_tau_bar(gamma, beta, M, K, rho, p_max, tol=tol)
    q_bar = q_bar_powers(gamma, beta, p_max)
    xi, mu = xi_and_mu(gamma, tau_bar, eta, M, K)
    p_bar = p_bar_powers(gamma, beta, tau_bar, xi, rho, p_max)
    eta_vec = np.asarray(eta, dtype=float) * np.ones_like(gamma)
    return AsymptoticParams(tau_bar=float(tau_bar), q_bar=q_bar, p_bar=p_bar,
                            xi=xi, mu=mu, eta=eta_vec)


def asym_dl_sinr(params: AsymptoticParams, beta, rho) -> np.ndarray:
    """Asymptotic downlink SINRs of the plug-in precoder at p_bar."""
    return asym_sinr_given_powers(params, beta, rho, params.p_bar, "dl")


def asym_ul_sinr(params: AsymptoticParams, beta, rho) -> np.ndarray:
    """Asymptotic uplink SINRs of the plug-in receiver at q_bar."""
    return asym_sinr_given_powers(params, beta, rho, params.q_bar, "ul")


def asym_sinr_given_powers(params: AsymptoticParams, beta, rho, powers,
                           direction) -> np.ndarray:
    """Asymptotic SINRs for an arbitrary power vector.

    Downlink: SINR_k = p_k (1 - eta_k^2) xi / (mu_k (1/K) sum_i p_i + 1/(rho beta_k)).
    Uplink:   SINR_k = q_k (1 - eta_k^2) xi / ((1/K) sum_i (beta_i/beta_k) mu_i q_i
                                               + 1/(rho beta_k)).

    eta enters through mu (stored in params) and the (1 - eta^2) signal
    factor recovered from mu at tau_bar.
    """
    beta = np.asarray(beta, dtype=float)
    powers = np.asarray(powers, dtype=float)
    one_minus_eta2 = 1.0 - params.eta**2
    if direction == "dl":
        denom = params.mu * np.mean(powers) + 1.0 / (rho * beta)
    elif direction == "ul":
        denom = np.mean(beta * params.mu * powers) / beta + 1.0 / (rho * beta)
    else:
        raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")
    return powers * one_minus_eta2 * params.xi / denom


def aolp_powers(params: AsymptoticParams, gamma, beta, rho, p_max) -> AolpPowers:
    """Asymptotically optimal DL/UL powers under imperfect CSI.

    Both asymptotic coupling matrices are rank one, so their Perron
    eigenvectors are available in closed form:

        p_tilde_k proportional to [D (f + 1/(rho K p_max) 1)]_k,
        q_tilde_k proportional to [D 1]_k,

    with D = diag(gamma_k / (xi beta_k (1 - eta_k^2))) and f_i = beta_i mu_i / K,
    normalized to (1/K) sum = p_max. For scalar eta the (1 - eta^2) factor
    cancels and p_tilde reduces to

        (p_max gamma_k mu_k + gamma_k/(rho beta_k))
        / ((1/K) sum_i (gamma_i mu_i + gamma_i/(rho beta_i p_max)))

    while q_tilde coincides with q_bar.
    """
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    K = gamma.size
    eta = params.eta
    if np.any(eta >= 1.0):
        raise ConvergenceError("eta = 1 leaves no usable channel estimate")
    d_diag = gamma / (params.xi * beta * (1.0 - eta**2))
    f = beta * params.mu / K
    x = d_diag * (f + 1.0 / (rho * K * p_max))
    p_tilde = K * p_max * x / np.sum(x)
    y = d_diag
    q_tilde = K * p_max * y / np.sum(y)
    sinr_dl = asym_sinr_given_powers(params, beta, rho, p_tilde, "dl")
    sinr_ul = asym_sinr_given_powers(params, beta, rho, q_tilde, "ul")
    return AolpPowers(p_tilde=p_tilde, q_tilde=q_tilde, sinr_dl=sinr_dl, sinr_ul=sinr_ul)
