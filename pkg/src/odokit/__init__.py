"""Operational diversity order of fading channels: closed forms, a generic
plug-in engine, Monte-Carlo estimators and a CSV-producing command line."""

__version__ = "0.1.0"

from odokit.channels import FadingModel, cascaded, mrc, rayleigh, rician, sc, twdp  # noqa: E402
from odokit.errors import (  # noqa: E402
    DomainError,
    InsufficientSamplesError,
    NumericRangeError,
    QuadratureError,
)
from odokit.odo_engine import OdoResult, OperatingPoint, odo, op_linear_approx, op_ratio  # noqa: E402

__all__ = [
    "DomainError",
    "FadingModel",
    "InsufficientSamplesError",
    "NumericRangeError",
    "OdoResult",
    "OperatingPoint",
    "QuadratureError",
    "cascaded",
    "mrc",
    "odo",
    "op_linear_approx",
    "op_ratio",
    "rayleigh",
    "rician",
    "sc",
    "twdp",
]
