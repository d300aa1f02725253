"""Geometry, path loss and Gauss-Markov channel model checks.

Frozen reference numbers were produced with a 30-digit mpmath evaluation
of the closed-form expressions; statistical checks run on fixed seeds so
they are deterministic.
"""

import numpy as np
import pytest

from maxmin_mimo.channel import (
    ChannelRealization,
    SystemConfig,
    UeGeometry,
    draw_channel,
    generate_pathloss,
    load_geometry_csv,
    make_geometry,
    sample_ue_positions,
    save_geometry_csv,
)
from maxmin_mimo.errors import ConfigError


def _config(M=8, K=2, eta=0.0, **kw):
    kw.setdefault("gamma", (1.0,) * K)
    return SystemConfig(M=M, K=K, rho=100.0, p_max=5.0, eta=eta, **kw)


# ---------------------------------------------------------------- path loss

def test_pathloss_frozen_values():
    # mpmath: 1/(1 + (250/30)^3.8) and 1/(1 + (100/30)^3.8)
    got = generate_pathloss([250.0, 100.0], d0=30.0, ple=3.8)
    expected = np.array([3.1677517497392792e-04, 1.0200187037321906e-02])
    assert np.allclose(got, expected, rtol=1e-12, atol=0)


def test_pathloss_reference_points():
    x = np.array([0.0, 30.0])
    got = generate_pathloss(x, d0=30.0, ple=3.8)
    assert got[0] == 1.0
    assert abs(got[1] - 0.5) < 1e-15  # x = d0 halves the gain exactly
    grid = generate_pathloss(np.linspace(0.0, 400.0, 200))
    assert np.all(np.diff(grid) < 0)
    assert np.all((grid > 0) & (grid <= 1))


def test_pathloss_rejects_negative_distance():
    with pytest.raises(ConfigError):
        generate_pathloss([-1.0])


# ----------------------------------------------------------- disc sampling

def test_disc_sampling_statistics():
    rng = np.random.default_rng(11)
    R = 250.0
    x = sample_ue_positions(rng, 100_000, R)
    assert x.min() >= 0 and x.max() <= R
    # uniform area density: E[x] = 2R/3, P(x <= R/2) = 1/4
    assert abs(x.mean() - 2 * R / 3) / (2 * R / 3) < 0.01
    assert abs(np.mean(x <= R / 2) - 0.25) < 0.005


def test_make_geometry_resamples_and_respects_explicit_distances():
    cfg = _config(M=8, K=4, gamma=(1.0,) * 4)
    geo = make_geometry(np.random.default_rng(0), cfg)
    assert geo.distances.shape == (4,)
    assert np.allclose(geo.betas, generate_pathloss(geo.distances))

    fixed = [10.0, 50.0, 100.0, 200.0]
    geo2 = make_geometry(np.random.default_rng(0), cfg, distances=fixed)
    assert np.array_equal(geo2.distances, np.asarray(fixed))
    with pytest.raises(ConfigError):
        make_geometry(np.random.default_rng(0), cfg, distances=[10.0, 50.0])


# --------------------------------------------------------- channel moments

def test_channel_second_moment_matches_beta():
    cfg = _config(M=64, K=4, eta=0.4, gamma=(1.0,) * 4)
    geo = make_geometry(np.random.default_rng(5), cfg)
    rng = np.random.default_rng(6)
    n_draws = 2500
    acc_h = np.zeros(4)
    acc_hat = np.zeros(4)
    for _ in range(n_draws):
        ch = draw_channel(rng, geo, cfg)
        acc_h += np.sum(np.abs(ch.h_true) ** 2, axis=0) / cfg.M
        acc_hat += np.sum(np.abs(ch.h_est) ** 2, axis=0) / cfg.M
    acc_h /= n_draws
    acc_hat /= n_draws
    # the estimate has the same marginal distribution as the channel
    assert np.max(np.abs(acc_h - geo.betas) / geo.betas) < 0.02
    assert np.max(np.abs(acc_hat - geo.betas) / geo.betas) < 0.02


def test_estimate_cross_correlation():
    # (1/M) E[Re hhat_k^H h_k] = sqrt(1 - eta^2) beta_k
    eta = 0.6
    cfg = _config(M=256, K=2, eta=eta)
    geo = make_geometry(np.random.default_rng(7), cfg)
    rng = np.random.default_rng(8)
    acc = np.zeros(2)
    n_draws = 600
    for _ in range(n_draws):
        ch = draw_channel(rng, geo, cfg)
        acc += np.real(np.sum(ch.h_est.conj() * ch.h_true, axis=0)) / cfg.M
    acc /= n_draws
    target = np.sqrt(1 - eta**2) * geo.betas
    assert np.max(np.abs(acc - target) / target) < 0.02


def test_perfect_csi_estimate_is_bit_identical():
    cfg = _config(M=16, K=3, eta=(0.0, 0.5, 0.0), gamma=(1.0,) * 3)
    geo = make_geometry(np.random.default_rng(1), cfg)
    ch = draw_channel(np.random.default_rng(2), geo, cfg)
    assert np.array_equal(ch.h_est[:, 0], ch.h_true[:, 0])
    assert np.array_equal(ch.h_est[:, 2], ch.h_true[:, 2])
    assert not np.array_equal(ch.h_est[:, 1], ch.h_true[:, 1])


def test_rng_stream_is_stable_across_eta():
    # the same substream must yield the same (z, w) regardless of eta, so
    # eta sweeps reuse identical randomness
    geo = UeGeometry(distances=np.array([60.0, 120.0]),
                     betas=generate_pathloss([60.0, 120.0]))
    draws = {}
    for eta in (0.0, 0.5, 0.9):
        cfg = _config(M=12, K=2, eta=eta)
        draws[eta] = draw_channel(np.random.default_rng(99), geo, cfg)
    assert np.array_equal(draws[0.0].h_true, draws[0.5].h_true)
    assert np.array_equal(draws[0.0].h_true, draws[0.9].h_true)
    # recover w from two eta values; it must be the same vector
    sqrt_beta = np.sqrt(geo.betas)
    for eta in (0.5, 0.9):
        ch = draws[eta]
        w = (ch.h_est - np.sqrt(1 - eta**2) * ch.h_true) / (eta * sqrt_beta)
        if eta == 0.5:
            w_ref = w
        else:
            assert np.allclose(w, w_ref, rtol=1e-12, atol=1e-15)


def test_draws_are_deterministic_given_seed():
    cfg = _config(M=8, K=2, eta=0.3)
    geo = make_geometry(np.random.default_rng(3), cfg)
    a = draw_channel(np.random.default_rng(42), geo, cfg)
    b = draw_channel(np.random.default_rng(42), geo, cfg)
    assert np.array_equal(a.h_true, b.h_true)
    assert np.array_equal(a.h_est, b.h_est)


# ------------------------------------------------------------- persistence

def test_geometry_csv_roundtrip(tmp_path):
    geo = UeGeometry(distances=np.array([12.5, 88.0, 249.999]),
                     betas=generate_pathloss([12.5, 88.0, 249.999]))
    path = tmp_path / "geometry.csv"
    save_geometry_csv(path, geo)
    back = load_geometry_csv(path)
    assert np.allclose(back.distances, geo.distances, rtol=1e-10)
    assert np.allclose(back.betas, geo.betas, rtol=1e-10)


def test_geometry_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ConfigError):
        load_geometry_csv(path)


# -------------------------------------------------------------- validation

def test_config_validation_errors():
    with pytest.raises(ConfigError):
        _config(M=4, K=8, gamma=(1.0,) * 8)  # K > M
    with pytest.raises(ConfigError):
        SystemConfig(M=8, K=2, rho=-1.0, p_max=5.0, eta=0.0, gamma=(1.0, 1.0))
    with pytest.raises(ConfigError):
        SystemConfig(M=8, K=2, rho=100.0, p_max=0.0, eta=0.0, gamma=(1.0, 1.0))
    with pytest.raises(ConfigError):
        _config(eta=1.5)
    with pytest.raises(ConfigError):
        _config(eta=(0.1, 0.2, 0.3))  # wrong length
    with pytest.raises(ConfigError):
        _config(gamma=(1.0,))  # wrong length
    with pytest.raises(ConfigError):
        _config(gamma=(1.0, -1.0))
    with pytest.raises(ConfigError):
        _config(J=0)


def test_eta_and_gamma_vector_helpers():
    cfg = _config(eta=0.25, gamma=(1.0, 2.0))
    assert np.array_equal(cfg.eta_vector(), np.array([0.25, 0.25]))
    assert np.array_equal(cfg.gamma_vector(), np.array([1.0, 2.0]))
    cfg2 = _config(eta=(0.1, 0.2), gamma=(1.0, 2.0))
    assert np.array_equal(cfg2.eta_vector(), np.array([0.1, 0.2]))


def test_geometry_validation():
    with pytest.raises(ConfigError):
        UeGeometry(distances=np.array([1.0]), betas=np.array([1.5]))
    with pytest.raises(ConfigError):
        UeGeometry(distances=np.array([-1.0]), betas=np.array([0.5]))


def test_channel_realization_shapes():
    cfg = _config(M=8, K=2, eta=0.3)
    geo = make_geometry(np.random.default_rng(3), cfg)
    ch = draw_channel(np.random.default_rng(4), geo, cfg)
    assert isinstance(ch, ChannelRealization)
    assert ch.h_true.shape == (8, 2)
    assert ch.h_est.shape == (8, 2)
    assert ch.h_true.dtype == np.complex128
