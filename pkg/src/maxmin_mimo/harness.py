"""Monte Carlo experiment harness: sweeps, schemes, CSV output.

A sweep varies one of {eta, p_max, M} over a list of values while geometry
and priorities stay fixed. At each (value, scheme) pair n_trials channel
draws are evaluated; per-trial RNG substreams are keyed by (seed, trial)
only, so every scheme and every sweep value sees the same underlying
Gaussian draws at a given trial index (common random numbers), and results
are bit-reproducible regardless of execution order.

Monte Carlo schemes:
    OLP        exact downlink solver on the estimate, evaluated on the truth
    A-OLP      asymptotic directions (full-matrix MMSE at q_bar) + p_tilde
    OLR        exact uplink solver on the estimate, evaluated on the truth
    US-TPE-dl  user-specific TPE precoder, deterministic weights/powers
    US-TPE-ul  user-specific TPE receiver, deterministic weights/powers
"asymptotic-curves" expands to deterministic rows (no sampling, std 0):
    asym-OLP, asym-A-OLP, asym-OLR, asym-US-TPE-dl, asym-US-TPE-ul.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np

from . import asymptotic as asym
from . import tpe as tpe_mod
from .channel import ChannelRealization, SystemConfig, UeGeometry, draw_channel, make_geometry
from .errors import ConfigError, ConvergenceError, InfeasibleError
from .exact import Precoder, allocate_dl_powers, compute_directions, dl_sinr, solve_dual_powers, ul_sinr

MC_SCHEMES = ("OLP", "A-OLP", "US-TPE-dl", "OLR", "US-TPE-ul")
ASYM_EXPANSION = ("asym-OLP", "asym-A-OLP", "asym-OLR", "asym-US-TPE-dl", "asym-US-TPE-ul")
SWEEP_VARS = ("eta", "p_max", "M")

CSV_COLUMNS = ("sweep_var", "sweep_value", "scheme", "mean_rate_bps_hz", "std_rate",
               "n_trials", "n_failed", "min_weighted_sinr_mean")

_CONFIG_TYPES = {
    "M": int, "K": int, "rho": float, "p_max": float, "J": int, "seed": int,
    "cell_radius": float, "d0": float, "ple": float,
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep request."""

    base: SystemConfig
    sweep_var: str
    values: tuple
    schemes: tuple
    n_trials: int
    distances: np.ndarray | None = None  # fixed UE distances, else sampled from seed

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigError(f"sweep_var must be one of {SWEEP_VARS}, got {self.sweep_var!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if not self.schemes:
            raise ConfigError("scheme list must not be empty")
        known = set(MC_SCHEMES) | {"asymptotic-curves"}
        for s in self.schemes:
            if s not in known:
                raise ConfigError(f"unknown scheme {s!r}; choose from {sorted(known)}")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be positive")
        if self.sweep_var == "M":
            bad = [v for v in self.values if int(v) != v or v < self.base.K]
            if bad:
                raise ConfigError(f"swept M values must be integers >= K, got {bad}")
        if self.sweep_var == "eta":
            bad = [v for v in self.values if not 0.0 <= v <= 1.0]
            if bad:
                raise ConfigError(f"swept eta values must lie in [0, 1], got {bad}")
        if self.sweep_var == "p_max" and any(v <= 0 for v in self.values):
            raise ConfigError("swept p_max values must be positive")


@dataclass(frozen=True)
class ResultRow:
    """One output row: one scheme at one sweep value."""

    sweep_var: str
    sweep_value: float
    scheme: str
    mean_rate_bps_hz: float
    std_rate: float
    n_trials: int  # trials contributing to the mean
    n_failed: int
    min_weighted_sinr_mean: float


def rate_from_sinrs(sinrs) -> float:
    """Average user rate (1/K) sum log2(1 + SINR)."""
    return float(np.mean(np.log2(1.0 + np.asarray(sinrs))))


def _point_config(base: SystemConfig, sweep_var: str, value) -> SystemConfig:
    if sweep_var == "M":
        return dataclasses.replace(base, M=int(value))
    return dataclasses.replace(base, **{sweep_var: float(value)})


class _PointDesign:
    """Deterministic (large-scale-only) design shared by all trials at a point."""

    def __init__(self, config: SystemConfig, geometry: UeGeometry):
        self.config = config
        self.geometry = geometry
        self.gamma = config.gamma_vector()
        self.beta = geometry.betas
        self.eta = config.eta_vector()
        self._params = None
        self._aolp = None
        self._moments = None
        self._tpe = None

    @property
    def params(self) -> asym.AsymptoticParams:
        if self._params is None:
            c = self.config
            self._params = asym.asymptotic_params(self.gamma, self.beta, c.M, c.K,
                                                  c.rho, c.p_max, self.eta)
        return self._params

    @property
    def aolp(self) -> asym.AolpPowers:
        if self._aolp is None:
            c = self.config
            self._aolp = asym.aolp_powers(self.params, self.gamma, self.beta, c.rho, c.p_max)
        return self._aolp

    @property
    def moments(self) -> tpe_mod.DeterministicMoments:
        if self._moments is None:
            c = self.config
            self._moments = tpe_mod.build_deterministic_moments(
                self.gamma, self.beta, self.params.q_bar, self.eta, c.M, c.K, c.J)
        return self._moments

    @property
    def tpe(self) -> tpe_mod.TpeSolution:
        if self._tpe is None:
            c = self.config
            self._tpe = tpe_mod.tpe_design(self.moments, self.gamma, c.rho, c.p_max)
        return self._tpe


def _eval_scheme(scheme: str, ch: ChannelRealization, design: _PointDesign) -> np.ndarray:
    """Per-user SINRs of one scheme on one draw."""
    c = design.config
    if scheme == "OLP":
        fp = solve_dual_powers(ch.h_est, design.gamma, c.rho, c.p_max)
        u = compute_directions(ch.h_est, fp.q, c.rho)
        p = allocate_dl_powers(ch.h_est, u, design.gamma, fp.tau, c.rho)
        return dl_sinr(ch.h_true, Precoder(directions=u, dl_powers=p), c.rho)
    if scheme == "OLR":
        fp = solve_dual_powers(ch.h_est, design.gamma, c.rho, c.p_max)
        v = compute_directions(ch.h_est, fp.q, c.rho)
        return ul_sinr(ch.h_true, v, fp.q, c.rho)
    if scheme == "A-OLP":
        u = compute_directions(ch.h_est, design.params.q_bar, c.rho)
        return dl_sinr(ch.h_true, Precoder(directions=u, dl_powers=design.aolp.p_tilde), c.rho)
    if scheme == "US-TPE-dl":
        return tpe_mod.tpe_empirical_sinrs(ch, design.tpe.weights, design.tpe.p_tpe,
                                           c.rho, "dl", design.params.q_bar)
    if scheme == "US-TPE-ul":
        return tpe_mod.tpe_empirical_sinrs(ch, design.tpe.weights, design.tpe.q_tpe,
                                           c.rho, "ul", design.params.q_bar)
    raise ConfigError(f"unknown Monte Carlo scheme {scheme!r}")


def _asym_curve_sinrs(label: str, design: _PointDesign) -> np.ndarray:
    c = design.config
    if label == "asym-OLP":
        return asym.asym_dl_sinr(design.params, design.beta, c.rho)
    if label == "asym-OLR":
        return asym.asym_ul_sinr(design.params, design.beta, c.rho)
    if label == "asym-A-OLP":
        return design.aolp.sinr_dl
    if label == "asym-US-TPE-dl":
        sinrs, _ = tpe_mod.tpe_asymptotic_sinrs(design.moments, design.tpe.weights,
                                                design.tpe.p_tpe, c.rho, "dl")
        return sinrs
    if label == "asym-US-TPE-ul":
        sinrs, _ = tpe_mod.tpe_asymptotic_sinrs(design.moments, design.tpe.weights,
                                                design.tpe.q_tpe, c.rho, "ul")
        return sinrs
    raise ConfigError(f"unknown asymptotic curve {label!r}")


def run_point(config: SystemConfig, geometry: UeGeometry, scheme: str,
              n_trials: int, seed: int, sweep_var: str = "eta",
              sweep_value: float = 0.0) -> ResultRow:
    """Monte Carlo (or deterministic) evaluation of one scheme at one point."""
    design = _PointDesign(config, geometry)
    gamma = design.gamma
    if scheme in ASYM_EXPANSION:
        sinrs = _asym_curve_sinrs(scheme, design)
        return ResultRow(sweep_var=sweep_var, sweep_value=sweep_value, scheme=scheme,
                         mean_rate_bps_hz=rate_from_sinrs(sinrs), std_rate=0.0,
                         n_trials=0, n_failed=0,
                         min_weighted_sinr_mean=float(np.min(sinrs / gamma)))
    rates, wmins = [], []
    n_failed = 0
    for trial in range(n_trials):
        rng = np.random.default_rng(np.random.SeedSequence((seed, trial)))
        ch = draw_channel(rng, geometry, config)
        try:
            sinrs = _eval_scheme(scheme, ch, design)
        except (ConvergenceError, InfeasibleError):
            n_failed += 1
            continue
        rates.append(rate_from_sinrs(sinrs))
        wmins.append(float(np.min(sinrs / gamma)))
    if not rates:
        raise InfeasibleError(f"all {n_trials} trials failed for scheme {scheme}")
    rates = np.asarray(rates)
    std = float(np.std(rates, ddof=1)) if rates.size > 1 else 0.0
    return ResultRow(sweep_var=sweep_var, sweep_value=sweep_value, scheme=scheme,
                     mean_rate_bps_hz=float(np.mean(rates)), std_rate=std,
                     n_trials=len(rates), n_failed=n_failed,
                     min_weighted_sinr_mean=float(np.mean(wmins)))


def run_sweep(spec: ExperimentSpec) -> list[ResultRow]:
    """Run the full sweep; geometry and gamma are fixed across all points."""
    base = spec.base
    rng_geo = np.random.default_rng(np.random.SeedSequence((base.seed, 3)))
    geometry = make_geometry(rng_geo, base, distances=spec.distances)
    schemes = []
    for s in spec.schemes:
        if s == "asymptotic-curves":
            schemes.extend(ASYM_EXPANSION)
        else:
            schemes.append(s)
    rows = []
    for value in spec.values:
        config = _point_config(base, spec.sweep_var, value)
        for scheme in schemes:
            rows.append(run_point(config, geometry, scheme, spec.n_trials, base.seed,
                                  sweep_var=spec.sweep_var, sweep_value=float(value)))
    return rows


def draw_gamma(rng: np.random.Generator, K: int) -> np.ndarray:
    """Priorities gamma_k ~ U[1, 2], drawn once per experiment."""
    return 1.0 + rng.random(K)


def write_results_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([
                r.sweep_var, f"{r.sweep_value:.10g}", r.scheme,
                f"{r.mean_rate_bps_hz:.10g}", f"{r.std_rate:.10g}",
                r.n_trials, r.n_failed, f"{r.min_weighted_sinr_mean:.10g}",
            ])


def parse_config_text(text: str):
    """Parse `key = value` lines into a raw dict (types applied, keys checked).

    Returns (fields, distances) where fields feed SystemConfig and distances
    is an optional explicit geometry. gamma may be omitted (drawn from the
    seed at experiment build time). '#' starts a comment; blank lines ignored.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    known = set(_CONFIG_TYPES) | {"eta", "gamma", "distances"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    fields = {}
    for key, conv in _CONFIG_TYPES.items():
        if key in raw:
            try:
                fields[key] = conv(raw[key])
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
    for key in ("eta", "gamma", "distances"):
        if key in raw:
            try:
                vals = tuple(float(v) for v in raw[key].split(",") if v.strip())
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
            if key == "eta":
                fields["eta"] = vals[0] if len(vals) == 1 else vals
            else:
                fields[key] = vals
    distances = fields.pop("distances", None)
    return fields, distances


def load_config(path):
    """Read a config file into (SystemConfig, distances or None).

    Required keys: M, K, rho, p_max, eta. SystemConfig defaults cover the
    rest; gamma is drawn as U[1, 2] from the seed when absent.
    """
    with open(path) as f:
        fields, distances = parse_config_text(f.read())
    for key in ("M", "K", "rho", "p_max", "eta"):
        if key not in fields:
            raise ConfigError(f"config is missing required key {key!r}")
    if "gamma" not in fields:
        seed = fields.get("seed", 0)
        rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))
        fields["gamma"] = tuple(draw_gamma(rng, fields["K"]))
    if distances is not None and len(distances) != fields["K"]:
        raise ConfigError(f"distances must have length K={fields['K']}")
    config = SystemConfig(**fields)
    return config, (np.asarray(distances) if distances is not None else None)
