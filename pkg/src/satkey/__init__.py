"""Satellite-to-ground decoy-state BB84 finite-key simulator and optimizer."""

from .orbit import OrbitConfig, OverpassGeometry, orbital_period, pass_geometry, theta_max_from_dmin, dmin_from_theta_max
from .link import LinkModel, receiver_scaling_db
from .counts import (
    ProtocolParams,
    ErrorModel,
    BlockTallies,
    detection_prob,
    error_prob,
    accumulate_window,
    aggregate,
)
from .finitekey import (
    SecurityParams,
    SklResult,
    binary_entropy,
    chernoff_delta,
    corrected_tallies,
    decoy_estimates,
    lambda_ec,
    skl_finite,
    skl_asymptotic,
    skl_standard_bb84,
)
from .optimizer import OptSpace, OptConfig, OptResult, optimize_single_pass, optimize_multi_pass
from .campaign import (
    SystemConfig,
    FootprintCurve,
    AnnualEstimate,
    footprint_sweep,
    annual_volume,
    sensitivity_grid,
    continuous_asymptotic_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "OrbitConfig",
    "OverpassGeometry",
    "orbital_period",
    "pass_geometry",
    "theta_max_from_dmin",
    "dmin_from_theta_max",
    "LinkModel",
    "receiver_scaling_db",
    "ProtocolParams",
    "ErrorModel",
    "BlockTallies",
    "detection_prob",
    "error_prob",
    "accumulate_window",
    "aggregate",
    "SecurityParams",
    "SklResult",
    "binary_entropy",
    "chernoff_delta",
    "corrected_tallies",
    "decoy_estimates",
    "lambda_ec",
    "skl_finite",
    "skl_asymptotic",
    "skl_standard_bb84",
    "OptSpace",
    "OptConfig",
    "OptResult",
    "optimize_single_pass",
    "optimize_multi_pass",
    "SystemConfig",
    "FootprintCurve",
    "AnnualEstimate",
    "footprint_sweep",
    "annual_volume",
    "sensitivity_grid",
    "continuous_asymptotic_oracle",
]
