"""Finite-dimensional SLH models, exact unitary distances on exponential states, and
convergence experiments for sequences related by right series perturbations."""

from .errors import DimensionMismatch, NumericalBreakdown, SLHError, ValidationError
from .experiment import ConvergenceReport, convergence_experiment, default_state
from .families import (
    FaradaySpec,
    LANSpec,
    SqueezingSpec,
    faraday_family,
    lan_family,
    polynomial_family,
    squeezing_family,
    virtual_rotation,
)
from .oracle import SliceConfig, oracle_distance
from .semigroup import (
    ExponentialState,
    delta_generator_on_identity,
    distance,
    overlap,
    transfer_generator,
)
from .slh import (
    DampingForm,
    GaugeElement,
    SLHModel,
    damping,
    displace,
    gauge_transform,
    identity_model,
    inverse,
    left_residual,
    lindblad,
    perturbation_between,
    series,
    validate,
    virtual_work,
)

__all__ = [
    "ConvergenceReport",
    "DampingForm",
    "DimensionMismatch",
    "ExponentialState",
    "FaradaySpec",
    "GaugeElement",
    "LANSpec",
    "NumericalBreakdown",
    "SLHError",
    "SLHModel",
    "SliceConfig",
    "SqueezingSpec",
    "ValidationError",
    "convergence_experiment",
    "damping",
    "default_state",
    "delta_generator_on_identity",
    "displace",
    "distance",
    "faraday_family",
    "gauge_transform",
    "identity_model",
    "inverse",
    "lan_family",
    "left_residual",
    "lindblad",
    "oracle_distance",
    "overlap",
    "perturbation_between",
    "polynomial_family",
    "series",
    "squeezing_family",
    "transfer_generator",
    "validate",
    "virtual_rotation",
    "virtual_work",
]
