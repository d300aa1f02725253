"""Optimal linear precoder/receiver via the dual uplink fixed point.

The max-min weighted SINR problem under the average power budget
(1/K) sum_k p_k <= p_max is solved through its dual uplink: the optimal
dual powers q and balanced level tau satisfy

    d_k(q) = (1/K) h_k^H ( sum_{l != k} (q_l/K) h_l h_l^H + (1/rho) I )^{-1} h_k,
    q_k    = gamma_k * tau / d_k,        tau = K * p_max / sum_n (gamma_n / d_n).

The normalization keeps (1/K) sum_k q_k = p_max at every iterate. Receive
directions are the MMSE vectors v_k = A(q)^{-1} h_k (proportional to the
leave-one-out ones), and the downlink powers that equalize the weighted
downlink SINRs at level tau follow from a K x K linear system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConvergenceError, InfeasibleError

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class FixedPointResult:
    """Solution of a dual power fixed point."""

    q: np.ndarray  # dual uplink powers, length K
    tau: float  # balanced weighted SINR level
    iterations: int
    residual: float  # final sup-norm relative residual


@dataclass(frozen=True)
class Precoder:
    """Unit-norm transmit directions (M x K) and downlink powers (K,)."""

    directions: np.ndarray
    dl_powers: np.ndarray


@dataclass(frozen=True)
class SinrReport:
    """Per-user SINRs for one channel draw."""

    dl: np.ndarray | None
    ul: np.ndarray | None
    weighted_min: float

    @classmethod
    def build(cls, gamma, dl=None, ul=None):
        gamma = np.asarray(gamma, dtype=float)
        wmin = np.inf
        if dl is not None:
            wmin = min(wmin, float(np.min(dl / gamma)))
        if ul is not None:
            wmin = min(wmin, float(np.min(ul / gamma)))
        return cls(dl=dl, ul=ul, weighted_min=wmin)


def _quadforms_shared(h, q, rho):
    """All leave-one-out quadratic forms d_k from one shared factorization.

    Factor A(q) = (1/K) H diag(q) H^H + (1/rho) I once, then recover
    d_k = (1/K) h_k^H A_{-k}^{-1} h_k from the full-matrix forms via the
    rank-one downdate identity d_k = t_k / (1 - q_k t_k),
    t_k = (1/K) h_k^H A^{-1} h_k.
    """
    M, K = h.shape
    a = (h * (q / K)) @ h.conj().T
    a[np.diag_indices(M)] += 1.0 / rho
    factor = cho_factor(a, lower=False, check_finite=False)
    x = cho_solve(factor, h, check_finite=False)
    t = np.einsum("mk,mk->k", h.conj(), x).real / K
    denom = 1.0 - q * t
    if np.any(denom <= 0):
        raise ConvergenceError("rank-one downdate lost positivity; matrix nearly singular")
    return t / denom, x


def solve_dual_powers(h, gamma, rho, p_max, tol=1e-10, max_iter=10_000) -> FixedPointResult:
    """Solve the dual uplink max-min fixed point on channel matrix h (M x K).

    Picard iteration from q = p_max * 1 with the budget normalization applied
    every step; stops when the sup-norm relative change of q falls below tol.
    Applies 0.5 damping when the residual stalls. Raises ConvergenceError
    after max_iter iterations.
    """
    h = np.asarray(h)
    M, K = h.shape
    gamma = np.asarray(gamma, dtype=float)
    q = np.full(K, float(p_max))
    prev_resid = np.inf
    for it in range(1, max_iter + 1):
        d, _ = _quadforms_shared(h, q, rho)
        tau = K * p_max / np.sum(gamma / d)
        q_new = gamma * tau / d
        resid = float(np.max(np.abs(q_new - q) / q))
        if resid <= tol:
            q = q_new
            # report the residual of the returned iterate
            d, _ = _quadforms_shared(h, q, rho)
            tau = K * p_max / np.sum(gamma / d)
            resid = float(np.max(np.abs(gamma * tau / d - q) / q))
            return FixedPointResult(q=q, tau=float(tau), iterations=it, residual=resid)
        if resid >= prev_resid:
            q = 0.5 * (q + q_new)  # damp on stall
        else:
            q = q_new
        prev_resid = resid
    raise ConvergenceError(
        f"dual power fixed point did not reach tol={tol} in {max_iter} iterations",
        residual=prev_resid, iterations=max_iter,
    )


def compute_directions(h, q, rho, mode="full") -> np.ndarray:
    """Unit-norm MMSE directions for powers q.

    mode="full" uses one shared inverse, v_k = A(q)^{-1} h_k; mode="loo"
    builds each leave-one-out matrix explicitly. The two are proportional
    column by column, so the normalized outputs coincide.
    """
    h = np.asarray(h)
    M, K = h.shape
    q = np.asarray(q, dtype=float)
    if mode == "full":
        _, v = _quadforms_shared(h, q, rho)
    elif mode == "loo":
        v = np.empty_like(h)
        for k in range(K):
            mask = np.arange(K) != k
            a = (h[:, mask] * (q[mask] / K)) @ h[:, mask].conj().T
            a[np.diag_indices(M)] += 1.0 / rho
            v[:, k] = np.linalg.solve(a, h[:, k])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return v / np.linalg.norm(v, axis=0)


def allocate_dl_powers(h, directions, gamma, tau, rho, p_max=None) -> np.ndarray:
    """Downlink powers that equalize SINR_k / gamma_k = tau on channel h.

    Solves (I - tau * Gamma * F) p = (tau/rho) * Gamma * 1 with
    Gamma = diag(K gamma_k / |h_k^H u_k|^2) and
    [F]_{k,i} = (1/K) |h_k^H u_i|^2 for i != k (directions u are unit norm).
    Raises InfeasibleError when the system is singular at this tau or any
    power comes out non-positive.
    """
    h = np.asarray(h)
    u = np.asarray(directions)
    K = h.shape[1]
    gamma = np.asarray(gamma, dtype=float)
    cross = np.abs(h.conj().T @ u) ** 2  # [k, i] = |h_k^H u_i|^2
    sig = np.diag(cross).copy()
    if np.any(sig <= 0):
        raise InfeasibleError("a user has zero effective channel gain")
    f = cross / K
    np.fill_diagonal(f, 0.0)
    big_gamma = K * gamma / sig
    a = np.eye(K) - tau * big_gamma[:, None] * f
    if np.linalg.cond(a) > _COND_LIMIT:
        raise InfeasibleError(f"power allocation ill-conditioned at tau={tau:g}")
    p = np.linalg.solve(a, (tau / rho) * big_gamma)
    if np.any(p <= 0):
        raise InfeasibleError("negative downlink power: tau infeasible on this channel")
    return p


def dl_sinr(h_true, precoder: Precoder, rho) -> np.ndarray:
    """Downlink SINRs of precoder (unit directions u, powers p) on h_true.

    SINR_k = (p_k/K)|h_k^H u_k|^2 / ( sum_{i != k} (p_i/K)|h_k^H u_i|^2 + 1/rho ).
    """
    h = np.asarray(h_true)
    K = h.shape[1]
    p = np.asarray(precoder.dl_powers, dtype=float)
    cross = np.abs(h.conj().T @ precoder.directions) ** 2 * (p / K)
    sig = np.diag(cross).copy()
    interference = cross.sum(axis=1) - sig
    return sig / (interference + 1.0 / rho)


def ul_sinr(h_true, directions, q, rho) -> np.ndarray:
    """Uplink SINRs for receive directions v (any scale) and UE powers q.

    SINR_k = (q_k/K)|v_k^H h_k|^2 /
             ( (1/K) sum_{i != k} q_i |v_k^H h_i|^2 + ||v_k||^2 / rho ).
    """
    h = np.asarray(h_true)
    v = np.asarray(directions)
    q = np.asarray(q, dtype=float)
    K = h.shape[1]
    cross = np.abs(h.conj().T @ v) ** 2  # [i, k] = |h_i^H v_k|^2
    sig = np.diag(cross).copy() * q / K
    interference = (q @ cross - np.diag(cross) * q) / K
    noise = np.einsum("mk,mk->k", v.conj(), v).real / rho
    return sig / (interference + noise)
