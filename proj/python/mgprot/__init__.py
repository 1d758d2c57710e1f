"""Negative-sequence superimposed directional protection for microgrids."""

from ._core import (
    ConfigError,
    NetworkError,
    UndefinedRatio,
    adaptive_fault_current,
    classify,
    delta_y2,
    estimate_phasor,
    from_sequence,
    impact_factor,
    run_scenario,
    run_suite,
    solve_fault,
    start_check,
    synthesize,
    thevenin,
    to_sequence,
)

__all__ = [
    "ConfigError",
    "NetworkError",
    "UndefinedRatio",
    "adaptive_fault_current",
    "classify",
    "delta_y2",
    "estimate_phasor",
    "from_sequence",
    "impact_factor",
    "run_scenario",
    "run_suite",
    "solve_fault",
    "start_check",
    "synthesize",
    "thevenin",
    "to_sequence",
]
