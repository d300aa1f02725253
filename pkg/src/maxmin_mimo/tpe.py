"""User-specific truncated polynomial expansion (TPE) transceivers.

Each user's beamformer is a degree-(J-1) matrix polynomial in
S = (1/K) Hhat diag(q_bar) Hhat^H applied to that user's channel estimate:

    v_k = sum_{l=0}^{J-1} w_{k,l} S^l hhat_k / sqrt(K).

The J weights per user are optimized against deterministic moment
surrogates that depend only on large-scale quantities:

    [a_bar_k]_l   = (-1)^l / l!  * sqrt(1 - eta_k^2) * Xbar_k^(l)(0)
    [E_bar_k]_lm  = (-1)^(l+m) / (l+m)! * Xbar_k^(l+m)(0)
    [B_bar_ki]_lm = (-1)^(l+m) / (l! m!) * d_t^l d_u^m Zbar_ki(0,0)

where Xbar_k(t) = beta_k delta(t) / (1 + t q_bar_k beta_k delta(t)) and
Zbar_ki(t,u) = beta_i fbar_k(t,u) alpha(t,u) g_i(t) g_i(u) are built with
jet arithmetic (see jets.py). A dual uplink fixed point in the J-dimensional
whitened space yields per-user powers and weights; downlink powers follow
from the same K x K balancing system as the exact solver.

Empirical counterparts of the moments are estimated per channel draw from
Krylov sequences {S^l hhat_k}, {S^l h_k} using matrix-vector products only;
they feed the quadratic-form route for realized SINRs, cross-checkable
against direct evaluation of the assembled beamformers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import ConditioningError, ConvergenceError, InfeasibleError
from .exact import FixedPointResult, Precoder, dl_sinr, ul_sinr
from .jets import BiJet, Jet, expand_delta

_COND_LIMIT = 1e12
_EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class DeterministicMoments:
    """Large-system moment surrogates for the TPE design."""

    a_bar: np.ndarray  # (K, J)
    e_bar: np.ndarray  # (K, J, J)
    b_bar: np.ndarray  # (K, K, J, J); [k, i] pairs victim k, interferer i
    x_jets: list  # per-user Jet of Xbar_k(t), order 2(J-1)
    f_grids: list  # per-user BiJet of fbar_k(t,u), order J-1
    alpha: BiJet  # BiJet of alpha(t,u), order J-1
    J: int


@dataclass(frozen=True)
class TpeSolution:
    """TPE design at one operating point."""

    c_star: np.ndarray  # (K, J) unit-norm whitened weights
    weights: np.ndarray  # (K, J) polynomial weights w_k = E_bar_k^{-1/2} c_k
    q_tpe: np.ndarray  # dual/uplink powers
    p_tpe: np.ndarray  # downlink powers
    tau_tpe: float  # balanced weighted SINR level
    iterations: int
    residual: float


@dataclass(frozen=True)
class EmpiricalMoments:
    """Per-draw moment estimates (complex)."""

    a: np.ndarray  # (K, J)
    e: np.ndarray  # (K, J, J)
    b: np.ndarray  # (K, K, J, J)


def build_deterministic_moments(gamma, beta, q_bar, eta, M, K, J) -> DeterministicMoments:
    """Assemble a_bar, E_bar, B_bar from the delta(t) expansion."""
    beta = np.asarray(beta, dtype=float)
    q_bar = np.asarray(q_bar, dtype=float)
    eta = np.asarray(eta, dtype=float) * np.ones(K)
    n_uni = 2 * (J - 1)  # X derivatives up to l+m
    n_bi = J - 1
    exp = expand_delta(q_bar, beta, M, K, n_uni)
    delta = exp.delta
    a_load = exp.a  # q_bar * beta
    g_full = exp.g_jets()  # order n_uni

    x_jets = []
    a_bar = np.zeros((K, J))
    e_bar = np.zeros((K, J, J))
    signs = (-1.0) ** np.arange(n_uni + 1)
    for k in range(K):
        x_k = float(beta[k]) * (delta * g_full[k])
        x_jets.append(x_k)
        sc = signs * x_k.coeffs
        a_bar[k] = np.sqrt(1.0 - eta[k] ** 2) * sc[:J]
        lm = np.add.outer(np.arange(J), np.arange(J))
        e_bar[k] = sc[lm]

    # bivariate pieces at order J-1 per variable
    delta_b = delta.truncate(n_bi)
    g_b = [g.truncate(n_bi) for g in g_full]
    w_jets = [(delta_b * g).shift() for g in g_b]  # t delta(t) g_i(t)
    den = BiJet.constant(M / K, n_bi)
    for ai, wi in zip(a_load, w_jets):
        den = den - (float(ai) ** 2 / K) * BiJet.outer(wi, wi)
    alpha = BiJet.outer(delta_b, delta_b) * den.reciprocal()

    f_grids = []
    ones = BiJet.constant(1.0, n_bi)
    for k in range(K):
        gg = BiJet.outer(g_b[k], g_b[k])
        f_k = float(beta[k]) * (float(eta[k] ** 2) * ones + float(1.0 - eta[k] ** 2) * gg)
        f_grids.append(f_k)

    b_bar = np.zeros((K, K, J, J))
    sign_grid = np.outer(signs[:J], signs[:J]) * np.ones((J, J))
    g_outer = [BiJet.outer(g, g) for g in g_b]
    for k in range(K):
        fa = f_grids[k] * alpha
        for i in range(K):
            z_ki = float(beta[i]) * (fa * g_outer[i])
            b_bar[k, i] = sign_grid * z_ki.coeffs
    return DeterministicMoments(a_bar=a_bar, e_bar=e_bar, b_bar=b_bar,
                                x_jets=x_jets, f_grids=f_grids, alpha=alpha, J=J)


def _inv_sqrt_psd(e, label="E_bar"):
    """Inverse square root of a symmetric positive definite matrix."""
    vals, vecs = np.linalg.eigh(e)
    floor = _EIG_FLOOR * float(vals[-1])
    if vals[0] <= floor:
        raise ConditioningError(
            f"{label} has eigenvalue {vals[0]:.3e} below floor {floor:.3e}; "
            "reduce J or improve conditioning"
        )
    return (vecs / np.sqrt(vals)) @ vecs.T


def _whitened_system(moments: DeterministicMoments):
    """Per-user b_k = E^-1/2 a_bar_k and pair matrices E^-1/2 B_bar_ik E^-1/2.

    m_pair[i, k] whitens B_bar_{i,k} with user k's E_bar (user k is the
    receiver/victim index of the uplink interference term).
    """
    K, J = moments.a_bar.shape
    e_isqrt = np.stack([_inv_sqrt_psd(moments.e_bar[k], f"E_bar[{k}]") for k in range(K)])
    b_vec = np.einsum("kij,kj->ki", e_isqrt, moments.a_bar)
    # m_pair[i, k] = E_bar_k^-1/2 B_bar[i, k] E_bar_k^-1/2 (whitened by the
    # second index; that user owns the estimate inside B_bar[i, k])
    m_pair = np.einsum("kab,ikbc,kcd->ikad", e_isqrt, moments.b_bar, e_isqrt)
    return e_isqrt, b_vec, m_pair


def solve_qtpe(moments: DeterministicMoments, gamma, rho, p_max,
               tol=1e-10, max_iter=10_000) -> FixedPointResult:
    """Dual fixed point for the TPE powers in the whitened J-dim space.

    psi_k(q) = b_k^T (sum_{i != k} (q_i/K) M_{i,k} + (1/rho) I_J)^{-1} b_k,
    q_k = gamma_k tau / psi_k, tau = K p_max / sum_n (gamma_n / psi_n),
    iterated exactly like the exact solver's Picard scheme.
    """
    gamma = np.asarray(gamma, dtype=float)
    K, J = moments.a_bar.shape
    _, b_vec, m_pair = _whitened_system(moments)

    def psi(q):
        out = np.empty(K)
        for k in range(K):
            a = np.tensordot(q / K, m_pair[:, k], axes=1)
            a -= (q[k] / K) * m_pair[k, k]
            a[np.diag_indices(J)] += 1.0 / rho
            out[k] = float(b_vec[k] @ np.linalg.solve(a, b_vec[k]))
        return out

    q = np.full(K, float(p_max))
    prev_resid = np.inf
    for it in range(1, max_iter + 1):
        d = psi(q)
        tau = K * p_max / np.sum(gamma / d)
        q_new = gamma * tau / d
        resid = float(np.max(np.abs(q_new - q) / q))
        if resid <= tol:
            q = q_new
            d = psi(q)
            tau = K * p_max / np.sum(gamma / d)
            resid = float(np.max(np.abs(gamma * tau / d - q) / q))
            return FixedPointResult(q=q, tau=float(tau), iterations=it, residual=resid)
        if resid >= prev_resid:
            q = 0.5 * (q + q_new)
        else:
            q = q_new
        prev_resid = resid
    raise ConvergenceError(
        f"TPE dual fixed point did not reach tol={tol} in {max_iter} iterations",
        residual=prev_resid, iterations=max_iter,
    )


def optimal_weights(moments: DeterministicMoments, q_tpe, rho):
    """Per-user optimal whitened weights c_k and polynomial weights w_k.

    c_k is the normalized solution of
    (sum_{i != k} (q_i/K) M_{i,k} + (1/rho) I_J) c = b_k, the maximizer of
    the generalized Rayleigh quotient behind the uplink SINR.
    """
    q = np.asarray(q_tpe, dtype=float)
    K, J = moments.a_bar.shape
    e_isqrt, b_vec, m_pair = _whitened_system(moments)
    c_star = np.empty((K, J))
    for k in range(K):
        a = np.tensordot(q / K, m_pair[:, k], axes=1)
        a -= (q[k] / K) * m_pair[k, k]
        a[np.diag_indices(J)] += 1.0 / rho
        c = np.linalg.solve(a, b_vec[k])
        c_star[k] = c / np.linalg.norm(c)
    weights = np.einsum("kij,kj->ki", e_isqrt, c_star)
    return c_star, weights


def tpe_dl_powers(moments: DeterministicMoments, c_star, gamma, tau_tpe, rho,
                  p_max=None) -> np.ndarray:
    """Downlink TPE powers equalizing the asymptotic weighted SINRs at tau_tpe.

    Same balancing system as the exact solver, with asymptotic gains:
    Gamma_k = gamma_k / |c_k^T b_k|^2 and
    [F]_{k,i} = (1/K) c_i^T (E_i^-1/2 B_bar_{k,i} E_i^-1/2) c_i, i != k.
    """
    gamma = np.asarray(gamma, dtype=float)
    K, J = moments.a_bar.shape
    _, b_vec, m_pair = _whitened_system(moments)
    sig = np.einsum("kj,kj->k", c_star, b_vec) ** 2
    if np.any(sig <= 0):
        raise InfeasibleError("a user has zero asymptotic TPE gain")
    # m_pair[k, i] = E_i^-1/2 B_bar[k, i] E_i^-1/2: interferer i's whitening
    f = np.einsum("ia,kiab,ib->ki", c_star, m_pair, c_star) / K
    np.fill_diagonal(f, 0.0)
    big_gamma = gamma / sig
    a = np.eye(K) - tau_tpe * big_gamma[:, None] * f
    if np.linalg.cond(a) > _COND_LIMIT:
        raise InfeasibleError(f"TPE power allocation ill-conditioned at tau={tau_tpe:g}")
    p = np.linalg.solve(a, (tau_tpe / rho) * big_gamma)
    if np.any(p <= 0):
        raise InfeasibleError("negative TPE downlink power")
    return p


def tpe_design(moments: DeterministicMoments, gamma, rho, p_max,
               tol=1e-10, max_iter=10_000, common_weights=False) -> TpeSolution:
    """Full TPE design: dual powers, weights, downlink powers.

    common_weights=True replaces the per-user weights by their average
    (a baseline that discards the user-specific structure).
    """
    fp = solve_qtpe(moments, gamma, rho, p_max, tol=tol, max_iter=max_iter)
    c_star, weights = optimal_weights(moments, fp.q, rho)
    if common_weights:
        w_mean = weights.mean(axis=0)
        weights = np.tile(w_mean, (weights.shape[0], 1))
        K = weights.shape[0]
        e_sqrt = []
        for k in range(K):
            vals, vecs = np.linalg.eigh(moments.e_bar[k])
            e_sqrt.append((vecs * np.sqrt(np.maximum(vals, 0.0))) @ vecs.T)
        c_star = np.stack([e_sqrt[k] @ w_mean for k in range(K)])
        c_star /= np.linalg.norm(c_star, axis=1, keepdims=True)
    p_tpe = tpe_dl_powers(moments, c_star, gamma, fp.tau, rho, p_max)
    return TpeSolution(c_star=c_star, weights=weights, q_tpe=fp.q, p_tpe=p_tpe,
                       tau_tpe=fp.tau, iterations=fp.iterations, residual=fp.residual)


def tpe_asymptotic_sinrs(moments: DeterministicMoments, weights, powers, rho, direction):
    """Deterministic TPE SINRs for given polynomial weights and powers.

    Downlink: signal p_k (w_k^T a_bar_k)^2 / (w_k^T E_bar_k w_k), interference
    sum_{i != k} (p_i/K) (w_i^T B_bar_ki w_i)/(w_i^T E_bar_i w_i), noise 1/rho.
    Uplink: signal q_k (w_k^T a_bar_k)^2, interference
    sum_{i != k} (q_i/K) w_k^T B_bar_ik w_k, noise (1/rho) w_k^T E_bar_k w_k.

    Returns (sinrs, p_bar_tx) with p_bar_tx = (1/K) sum_k w_k^T E_bar_k w_k,
    the deterministic equivalent of the unnormalized transmit power.
    """
    w = np.asarray(weights, dtype=float)
    powers = np.asarray(powers, dtype=float)
    K = w.shape[0]
    sig_amp = np.einsum("kj,kj->k", w, moments.a_bar)
    norms = np.einsum("ka,kab,kb->k", w, moments.e_bar, w)
    quad = np.einsum("ia,kiab,ib->ki", w, moments.b_bar, w)  # w_i^T B_bar[k,i] w_i
    p_bar_tx = float(np.mean(norms))
    if direction == "dl":
        signal = powers * sig_amp**2 / norms
        cross = quad / norms[None, :]  # [k, i]
        interference = (cross @ powers - np.diag(cross) * powers) / K
        return signal / (interference + 1.0 / rho), p_bar_tx
    if direction == "ul":
        signal = powers * sig_amp**2
        quad_ul = np.einsum("ka,ikab,kb->ki", w, moments.b_bar, w)  # w_k^T B_bar[i,k] w_k
        interference = (np.einsum("ki,i->k", quad_ul, powers)
                        - np.diag(quad_ul) * powers) / K
        return signal / (interference + norms / rho), p_bar_tx
    raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")


def _krylov(channel: ChannelRealization, q_bar, depth):
    """Krylov blocks [X, S X, ..., S^(depth-1) X] for X in {hhat, h}.

    S = (1/K) Hhat diag(q_bar) Hhat^H is applied as two skinny matmuls;
    S^l is never formed.
    """
    h_est, h = channel.h_est, channel.h_true
    K = h.shape[1]
    scaled = h_est * (np.asarray(q_bar, dtype=float) / K)

    def apply_s(x):
        return scaled @ (h_est.conj().T @ x)

    blocks_est, blocks_true = [h_est], [h]
    for _ in range(depth - 1):
        blocks_est.append(apply_s(blocks_est[-1]))
        blocks_true.append(apply_s(blocks_true[-1]))
    return blocks_est, blocks_true


def build_empirical_moments(channel: ChannelRealization, q_bar, J) -> EmpiricalMoments:
    """Per-draw estimates of the TPE moments from Krylov sequences.

    [a_k]_l    = (1/K) h_k^H S^l hhat_k
    [E_k]_lm   = (1/K) (S^l hhat_k)^H (S^m hhat_k)        (= hhat_k^H S^(l+m) hhat_k / K)
    [B_ki]_lm  = (1/K) (h_k^H S^l hhat_i)(hhat_i^H S^m h_k)
    """
    blocks_est, blocks_true = _krylov(channel, q_bar, J)
    K = channel.h_true.shape[1]
    est = np.stack(blocks_est)  # (J, M, K)
    true = np.stack(blocks_true)
    a = np.einsum("mk,lmk->kl", channel.h_true.conj(), est) / K
    e = np.einsum("lmk,nmk->kln", est.conj(), est) / K
    t = np.einsum("lmk,mi->lki", true.conj(), channel.h_est)  # (S^l h_k)^H hhat_i
    b = np.einsum("lki,nki->kiln", t, t.conj()) / K
    return EmpiricalMoments(a=a, e=e, b=b)


def tpe_beamformers(channel: ChannelRealization, weights, q_bar) -> np.ndarray:
    """Assemble v_k = sum_l w_{k,l} S^l hhat_k / sqrt(K)  (M x K).

    With this scaling ||v_k||^2 = w_k^T E_k w_k, so the average
    (1/K) sum_k ||v_k||^2 is directly comparable to the deterministic
    transmit power (1/K) sum_k w_k^T E_bar_k w_k.
    """
    w = np.asarray(weights, dtype=float)
    J = w.shape[1]
    K = channel.h_true.shape[1]
    blocks_est, _ = _krylov(channel, q_bar, J)
    est = np.stack(blocks_est)  # (J, M, K)
    return np.einsum("kl,lmk->mk", w, est) / np.sqrt(K)


def tpe_empirical_sinrs(channel: ChannelRealization, weights, powers, rho,
                        direction, q_bar) -> np.ndarray:
    """Realized SINRs of the TPE transceiver on one channel draw.

    Builds the beamformers explicitly (matrix-vector Krylov route) and
    evaluates the standard downlink/uplink SINR expressions on the true
    channel. powers is p_tpe for 'dl', q_tpe for 'ul'.
    """
    v = tpe_beamformers(channel, weights, q_bar)
    powers = np.asarray(powers, dtype=float)
    if direction == "dl":
        u = v / np.linalg.norm(v, axis=0)
        return dl_sinr(channel.h_true, Precoder(directions=u, dl_powers=powers), rho)
    if direction == "ul":
        return ul_sinr(channel.h_true, v, powers, rho)
    raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")


def tpe_sinrs_from_moments(emp: EmpiricalMoments, weights, powers, rho, direction):
    """Realized SINRs via the empirical quadratic-form route.

    Algebraically identical to tpe_empirical_sinrs (same beamformers,
    expressed through the moment matrices); kept separate as an
    independent evaluation path.
    """
    w = np.asarray(weights, dtype=float)
    powers = np.asarray(powers, dtype=float)
    K = w.shape[0]
    sig_amp2 = np.abs(np.einsum("kj,kj->k", w, emp.a.conj())) ** 2
    norms = np.einsum("ka,kab,kb->k", w, emp.e, w).real
    if direction == "dl":
        quad = np.einsum("ia,kiab,ib->ki", w, emp.b, w).real  # w_i^T B[k,i] w_i
        cross = quad / norms[None, :]
        interference = (cross @ powers - np.diag(cross) * powers) / K
        signal = powers * sig_amp2 / norms
        return signal / (interference + 1.0 / rho)
    if direction == "ul":
        quad_ul = np.einsum("ka,ikab,kb->ki", w, emp.b, w).real  # w_k^T B[i,k] w_k
        interference = (np.einsum("ki,i->k", quad_ul, powers)
                        - np.diag(quad_ul) * powers) / K
        signal = powers * sig_amp2
        return signal / (interference + norms / rho)
    raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")
