"""Command line interface.

    maxmin-mimo simulate --config cfg.txt --sweep eta --values 0,0.3,0.6 \
        --schemes OLP,A-OLP --trials 200 --seed 7 --out results.csv
    maxmin-mimo validate --config cfg.txt

Exit codes: 0 success, 2 configuration error, 3 solver infeasibility.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import asymptotic as asym
from .channel import draw_channel, make_geometry, save_geometry_csv
from .errors import ConfigError, ConvergenceError, InfeasibleError
from .exact import Precoder, allocate_dl_powers, compute_directions, dl_sinr, solve_dual_powers
from .harness import (ExperimentSpec, load_config, run_sweep, write_results_csv)
from .jets import expand_delta

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="maxmin-mimo",
        description="Max-min SINR transceiver simulation for single-cell MU-MIMO",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo sweep and write a CSV")
    sim.add_argument("--config", required=True, help="key=value config file")
    sim.add_argument("--sweep", required=True, choices=["eta", "p_max", "M"])
    sim.add_argument("--values", required=True,
                     help="comma-separated sweep values, e.g. 0,0.3,0.6,0.9")
    sim.add_argument("--schemes", required=True,
                     help="comma-separated scheme names (OLP, A-OLP, US-TPE-dl, "
                          "OLR, US-TPE-ul, asymptotic-curves)")
    sim.add_argument("--trials", type=int, default=200, help="Monte Carlo trials per point")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--geometry-out", default=None,
                     help="optional path to dump the sampled geometry CSV")

    val = sub.add_parser("validate", help="check a config and run quick invariant checks")
    val.add_argument("--config", required=True)
    return parser


def _cmd_simulate(args) -> int:
    config, distances = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    try:
        values = tuple(float(v) for v in args.values.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"--values: {exc}") from exc
    schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    spec = ExperimentSpec(base=config, sweep_var=args.sweep, values=values,
                          schemes=schemes, n_trials=args.trials, distances=distances)
    rows = run_sweep(spec)
    write_results_csv(args.out, rows)
    if args.geometry_out:
        rng_geo = np.random.default_rng(np.random.SeedSequence((config.seed, 3)))
        save_geometry_csv(args.geometry_out, make_geometry(rng_geo, config, distances))
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _check(name, ok, detail=""):
    status = "ok" if ok else "FAIL"
    print(f"  [{status}] {name}" + (f" ({detail})" if detail else ""))
    return ok


def _cmd_validate(args) -> int:
    """Config sanity plus fast numeric invariants at the configured point."""
    config, distances = load_config(args.config)
    print(f"config: M={config.M} K={config.K} rho={config.rho:g} p_max={config.p_max:g} "
          f"J={config.J} seed={config.seed}")
    rng_geo = np.random.default_rng(np.random.SeedSequence((config.seed, 3)))
    geometry = make_geometry(rng_geo, config, distances=distances)
    gamma = config.gamma_vector()
    beta = geometry.betas
    eta = config.eta_vector()
    all_ok = True

    params = asym.asymptotic_params(gamma, beta, config.M, config.K,
                                    config.rho, config.p_max, eta)
    abar = np.mean(gamma / beta)
    rhs = (config.rho * config.p_max / abar) * (
        config.M / config.K - np.mean(gamma * params.tau_bar / (1 + gamma * params.tau_bar)))
    all_ok &= _check("tau_bar fixed point residual < 1e-9",
                     abs(params.tau_bar - rhs) < 1e-9,
                     f"residual {abs(params.tau_bar - rhs):.2e}")
    all_ok &= _check("uplink power budget (1/K) sum q_bar = p_max",
                     abs(np.mean(params.q_bar) - config.p_max) < 1e-9 * config.p_max)
    all_ok &= _check("downlink power budget (1/K) sum p_bar = p_max",
                     abs(np.mean(params.p_bar) - config.p_max) < 1e-6 * config.p_max,
                     f"mean p_bar {np.mean(params.p_bar):.6g}")

    exp = expand_delta(params.q_bar, beta, config.M, config.K, 2 * (config.J - 1))
    all_ok &= _check("delta(t) expansion residual < 1e-10",
                     float(np.max(np.abs(exp.residual()))) < 1e-10)

    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1, 0)))
    ch = draw_channel(rng, geometry, config)
    try:
        fp = solve_dual_powers(ch.h_est, gamma, config.rho, config.p_max)
        all_ok &= _check("dual fixed point converged",
                         True, f"{fp.iterations} iterations, residual {fp.residual:.2e}")
        all_ok &= _check("dual budget (1/K) sum q_hat = p_max",
                         abs(np.mean(fp.q) - config.p_max) < 1e-8 * config.p_max)
        u = compute_directions(ch.h_est, fp.q, config.rho)
        p = allocate_dl_powers(ch.h_est, u, gamma, fp.tau, config.rho)
        sinr = dl_sinr(ch.h_est, Precoder(directions=u, dl_powers=p), config.rho)
        spread = np.ptp(sinr / gamma) / fp.tau
        all_ok &= _check("downlink weighted SINRs equalized on the estimate",
                         spread < 1e-6, f"relative spread {spread:.2e}")
        all_ok &= _check("downlink budget (1/K) sum p_hat = p_max",
                         abs(np.mean(p) - config.p_max) < 1e-6 * config.p_max,
                         f"mean p_hat {np.mean(p):.6g}")
    except (ConvergenceError, InfeasibleError) as exc:
        all_ok &= _check("exact solver on one draw", False, str(exc))

    if not all_ok:
        print("validation FAILED")
        return EXIT_INFEASIBLE
    print("validation passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, ConvergenceError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
