"""Weighted sum-rate beamforming for multicell OFDMA downlinks."""

from ._wsrm import (
    NetworkConfig,
    SpcaOptions,
    WaterFilling,
    __version__,
    drop_and_run,
    load_config,
    oracle_waterfilling,
    run_experiment,
    solve_text,
    trial_seed,
    upper_estimate,
)

__all__ = [
    "NetworkConfig",
    "SpcaOptions",
    "WaterFilling",
    "__version__",
    "drop_and_run",
    "load_config",
    "oracle_waterfilling",
    "run_experiment",
    "solve_text",
    "trial_seed",
    "upper_estimate",
]
