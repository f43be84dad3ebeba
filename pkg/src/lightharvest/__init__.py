"""Resource allocation for indoor lightwave-powered networks.

Optical LOS channel modeling, uplink time-share allocation for light-energy
harvesting users, joint downlink/uplink allocation with per-slot DC biasing,
weighted min-max trade-off fronts, and the Monte Carlo experiments that
regenerate the packaged result tables.

The per-scenario sum-rate evaluators keep their short names inside their
modules (wpcn.ul_sum_rate, slipt.dl_sum_rate, slipt.ul_sum_rate); import
them from there.
"""

from lightharvest.channels import (
    ChannelRealization,
    OpticalFrontend,
    RoomGeometry,
    UserDrop,
    concentrator_gain,
    lambertian_order,
    place_users_uniform,
    realize_channels,
    rf_power_gain,
    vlc_gain,
)
from lightharvest.config import SystemConfig, default_config
from lightharvest.experiments import (
    EXPERIMENTS,
    ExperimentResult,
    ExperimentRow,
    read_rows_csv,
    run_fig4,
    run_fig5,
    run_fig6,
    run_fig7,
    write_rows_csv,
)
from lightharvest.kernels import clamp, f_aux, f_inverse, rate_term, rate_term_slope
from lightharvest.slipt import (
    InfeasibleError,
    ParetoPoint,
    SliptInstance,
    SliptSolution,
    SubstitutedVars,
    enforce_global_offset,
    harvested_energy,
    pareto_front,
    solve_dl_max,
    solve_moop_point,
    solve_ul_max,
    utopia_points,
)
from lightharvest.wpcn import (
    WpcnInstance,
    WpcnSolution,
    brute_force_oracle,
    equal_time_baseline,
    solve_time_allocation,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "OpticalFrontend",
    "RoomGeometry",
    "UserDrop",
    "concentrator_gain",
    "lambertian_order",
    "place_users_uniform",
    "realize_channels",
    "rf_power_gain",
    "vlc_gain",
    "SystemConfig",
    "default_config",
    "EXPERIMENTS",
    "ExperimentResult",
    "ExperimentRow",
    "read_rows_csv",
    "run_fig4",
    "run_fig5",
    "run_fig6",
    "run_fig7",
    "write_rows_csv",
    "clamp",
    "f_aux",
    "f_inverse",
    "rate_term",
    "rate_term_slope",
    "InfeasibleError",
    "ParetoPoint",
    "SliptInstance",
    "SliptSolution",
    "SubstitutedVars",
    "enforce_global_offset",
    "harvested_energy",
    "pareto_front",
    "solve_dl_max",
    "solve_moop_point",
    "solve_ul_max",
    "utopia_points",
    "WpcnInstance",
    "WpcnSolution",
    "brute_force_oracle",
    "equal_time_baseline",
    "solve_time_allocation",
    "__version__",
]
