"""Python bindings for the wqfl C++ core."""

from ._core import (
    BoundConstants,
    ConfigError,
    Multipliers,
    PhysicsConfig,
    QuantizedUpdate,
    RoundAllocation,
    RoundInputs,
    SolverOptions,
    Status,
    UserProfile,
    allocate_fixed_bits,
    baseline_equal_energy,
    baseline_equal_slots,
    baseline_fixed_bits,
    compute_U,
    convergence_bound,
    default_config,
    dequantize,
    discount_weights,
    lambert_w0,
    metrics_csv,
    min_uplink_time,
    pathloss,
    payload_bits,
    quantize,
    run_experiment,
    solve_round,
    solve_round_continuous,
    tolerance_usage,
    uplink_bits,
    variance_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
