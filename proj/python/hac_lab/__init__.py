"""Concept removal by alignment calibration in Euclidean and hyperbolic dual encoders."""

from ._hac_lab import (
    Config,
    DomainError,
    HacError,
    IoError,
    Model,
    NumericalError,
    Pipeline,
    ShapeError,
    ValidationError,
    distance_to_origin,
    exp_map_origin,
    exterior_angle,
    gradient_suite,
    half_aperture,
    lorentz_distance,
    lorentz_inner,
    loss_breakdown,
    run_command,
)

__all__ = [
    "Config",
    "DomainError",
    "HacError",
    "IoError",
    "Model",
    "NumericalError",
    "Pipeline",
    "ShapeError",
    "ValidationError",
    "distance_to_origin",
    "exp_map_origin",
    "exterior_angle",
    "gradient_suite",
    "half_aperture",
    "lorentz_distance",
    "lorentz_inner",
    "loss_breakdown",
    "run_command",
]
