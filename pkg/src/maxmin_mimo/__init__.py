"""Max-min SINR transceiver design and simulation for single-cell MU-MIMO.

Library layout:
    channel     system config, geometry, path loss, channel + estimate draws
    exact       optimal linear precoder/receiver via the dual fixed point
    asymptotic  closed-form large-system equivalents and optimal powers
    jets        truncated Taylor (jet) arithmetic and the delta(t) expansion
    tpe         user-specific truncated polynomial expansion transceivers
    harness     Monte Carlo sweeps, schemes, CSV output
    cli         `maxmin-mimo simulate` / `maxmin-mimo validate`
"""

from .channel import (ChannelRealization, SystemConfig, UeGeometry, draw_channel,
                      generate_pathloss, make_geometry, sample_ue_positions)
from .errors import (ConditioningError, ConfigError, ConvergenceError, InfeasibleError)
from .exact import (FixedPointResult, Precoder, SinrReport, allocate_dl_powers,
                    compute_directions, dl_sinr, solve_dual_powers, ul_sinr)
from .asymptotic import (AolpPowers, AsymptoticParams, aolp_powers, asym_dl_sinr,
                         asym_sinr_given_powers, asym_ul_sinr, asymptotic_params,
                         solve_tau_bar)
from .jets import BiJet, DeltaExpansion, Jet, expand_delta
from .tpe import (DeterministicMoments, EmpiricalMoments, TpeSolution,
                  build_deterministic_moments, build_empirical_moments, optimal_weights,
                  solve_qtpe, tpe_asymptotic_sinrs, tpe_design, tpe_dl_powers,
                  tpe_empirical_sinrs, tpe_sinrs_from_moments)
from .harness import (ExperimentSpec, ResultRow, load_config, run_point, run_sweep,
                      write_results_csv)

__version__ = "0.1.0"
