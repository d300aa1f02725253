"""System configuration, cell geometry and channel generation.

Single-cell system: an M-antenna base station serves K single-antenna users.
User k at distance x_k from the base station has large-scale gain

    beta_k = 1 / (1 + (x_k / d0)^ple),

small-scale channel h_k = sqrt(beta_k) z_k with z_k standard circularly
symmetric complex Gaussian, and a Gauss-Markov channel estimate

    hhat_k = sqrt(1 - eta_k^2) h_k + sqrt(beta_k) eta_k w_k,

where w_k is an independent standard complex Gaussian vector and
eta_k in [0, 1] sets the estimation error (0 = perfect CSI, 1 = useless CSI).
hhat_k has the same distribution as h_k for any eta_k.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SystemConfig:
    """Operating point of the simulated system.

    gamma holds the K per-user priority weights (the max-min problem
    equalizes SINR_k / gamma_k). eta may be a scalar applied to every
    user or a length-K sequence of per-user values.
    """

    M: int  # base station antennas
    K: int  # single-antenna users
    rho: float  # effective SNR, linear scale
    p_max: float  # average power budget: (1/K) sum_k p_k <= p_max
    eta: float | tuple[float, ...]  # CSI error level(s), in [0, 1]
    gamma: tuple[float, ...]  # K positive priority weights
    J: int = 2  # TPE polynomial order (degree J-1)
    seed: int = 0  # experiment-level RNG seed
    cell_radius: float = 250.0  # cell radius in meters
    d0: float = 30.0  # path loss reference distance in meters
    ple: float = 3.8  # path loss exponent

    def __post_init__(self):
        if self.M <= 0 or self.K <= 0:
            raise ConfigError("M and K must be positive")
        if self.K > self.M:
            raise ConfigError(f"K={self.K} must not exceed M={self.M}")
        if self.rho <= 0:
            raise ConfigError("rho must be positive (linear scale)")
        if self.p_max <= 0:
            raise ConfigError("p_max must be positive")
        if self.J < 1:
            raise ConfigError("J must be at least 1")
        gamma = tuple(float(g) for g in self.gamma)
        if len(gamma) != self.K:
            raise ConfigError(f"gamma must have length K={self.K}, got {len(gamma)}")
        if any(g <= 0 for g in gamma):
            raise ConfigError("gamma entries must be positive")
        object.__setattr__(self, "gamma", gamma)
        eta = self.eta
        if np.isscalar(eta):
            eta_t = (float(eta),) * self.K
            object.__setattr__(self, "eta", float(eta))
        else:
            eta_t = tuple(float(e) for e in eta)
            if len(eta_t) != self.K:
                raise ConfigError(f"eta must be scalar or length K={self.K}")
            object.__setattr__(self, "eta", eta_t)
        if any(not 0.0 <= e <= 1.0 for e in eta_t):
            raise ConfigError("eta must lie in [0, 1]")
        if self.cell_radius <= 0 or self.d0 <= 0:
            raise ConfigError("cell_radius and d0 must be positive")

    def eta_vector(self) -> np.ndarray:
        """Per-user eta as a length-K array."""
        if np.isscalar(self.eta):
            return np.full(self.K, float(self.eta))
        return np.asarray(self.eta, dtype=float)

    def gamma_vector(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=float)


@dataclass(frozen=True)
class UeGeometry:
    """Distances (meters) and large-scale gains of the K users."""

    distances: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        b = np.asarray(self.betas, dtype=float)
        if d.shape != b.shape or d.ndim != 1:
            raise ConfigError("distances and betas must be 1-D arrays of equal length")
        if np.any(d < 0):
            raise ConfigError("distances must be non-negative")
        if np.any(b <= 0) or np.any(b > 1):
            raise ConfigError("betas must lie in (0, 1]")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "betas", b)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of true channels and their estimates, both M x K."""

    h_true: np.ndarray
    h_est: np.ndarray


def generate_pathloss(distances, d0: float = 30.0, ple: float = 3.8) -> np.ndarray:
    """beta = 1 / (1 + (x/d0)^ple). Equals 1 at x = 0 and decays monotonically."""
    x = np.asarray(distances, dtype=float)
    if np.any(x < 0):
        raise ConfigError("distances must be non-negative")
    return 1.0 / (1.0 + (x / d0) ** ple)


def sample_ue_positions(rng: np.random.Generator, K: int, cell_radius: float) -> np.ndarray:
    """Sample K distances uniformly over the disc of radius cell_radius.

    Uniform area density means the radial CDF is (x/R)^2, so x = R*sqrt(U).
    """
    u = rng.random(K)
    return cell_radius * np.sqrt(u)


def make_geometry(rng: np.random.Generator, config: SystemConfig,
                  distances=None) -> UeGeometry:
    """Build UeGeometry from explicit distances or by sampling the disc."""
    if distances is None:
        distances = sample_ue_positions(rng, config.K, config.cell_radius)
    distances = np.asarray(distances, dtype=float)
    if distances.shape != (config.K,):
        raise ConfigError(f"distances must have length K={config.K}")
    betas = generate_pathloss(distances, config.d0, config.ple)
    return UeGeometry(distances=distances, betas=betas)


def draw_channel(rng: np.random.Generator, geometry: UeGeometry,
                 config: SystemConfig) -> ChannelRealization:
    """Draw one (h, hhat) pair.

    The estimation noise w is always drawn, even for eta = 0, so that the
    generator stream advances identically across eta values: sweeping eta
    with a fixed per-trial seed reuses the same underlying (z, w).
    """
    M, K = config.M, config.K
    z = (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2.0)
    w = (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2.0)
    sqrt_beta = np.sqrt(geometry.betas)
    h = z * sqrt_beta
    eta = config.eta_vector()
    h_est = np.sqrt(1.0 - eta**2) * h + (eta * sqrt_beta) * w
    exact = eta == 0.0
    if np.any(exact):
        # bit-identical estimate under perfect CSI
        h_est[:, exact] = h[:, exact]
    return ChannelRealization(h_true=h, h_est=h_est)


def save_geometry_csv(path, geometry: UeGeometry) -> None:
    """Write geometry as CSV with columns ue_index, distance_m, beta."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["ue_index", "distance_m", "beta"])
        for k, (d, b) in enumerate(zip(geometry.distances, geometry.betas)):
            writer.writerow([k, f"{d:.12g}", f"{b:.12g}"])


def load_geometry_csv(path) -> UeGeometry:
    """Read geometry written by save_geometry_csv."""
    distances, betas = [], []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or set(reader.fieldnames) != {"ue_index", "distance_m", "beta"}:
            raise ConfigError(f"unexpected geometry CSV header in {path}")
        for row in reader:
            distances.append(float(row["distance_m"]))
            betas.append(float(row["beta"]))
    return UeGeometry(distances=np.asarray(distances), betas=np.asarray(betas))
