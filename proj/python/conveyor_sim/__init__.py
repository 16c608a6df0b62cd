"""Optical conveyor transport simulator (density-matrix engine and grid oracle)."""

from ._conveyor import (
    BoostSchedule,
    BoundSpectrum,
    ConfigError,
    ConveyorError,
    GridOracle,
    MaxAccelerationExceeded,
    ParameterError,
    PhysicalParams,
    RangeError,
    VerificationError,
    aom_frequency_difference,
    boost_operator_exact,
    dephasing_rates,
    discretize,
    estimate_gamma0,
    evolve,
    frame_transform_exact,
    free_propagator,
    min_transport_time,
    oracle_check,
    preset_config,
    preset_names,
    run_sweep,
    solve_bound_spectrum,
    trap_constants,
    validate_config,
    __version__,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
