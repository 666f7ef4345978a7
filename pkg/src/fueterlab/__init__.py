"""Numerical verification of Laplacian regularity for quaternionic fields ``u + iota v``."""

from .errors import (
    BackendError,
    ConfigError,
    DegenerateFrameError,
    DomainError,
    EmptySampleError,
    NumericError,
    PoleError,
)
from .fields import StructuredField, catalog, fueter_map, get_field, mercator_pair, product_field
from .operators import DerivativeEngine, fueter_left, fueter_right, laplacian, laplacian_via_dbar
from .quat_core import Quaternion, SphericalPoint
from .verify import ResidualReport, SamplingPlan, sample_points

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "ConfigError",
    "DegenerateFrameError",
    "DerivativeEngine",
    "DomainError",
    "EmptySampleError",
    "NumericError",
    "PoleError",
    "Quaternion",
    "ResidualReport",
    "SamplingPlan",
    "SphericalPoint",
    "StructuredField",
    "catalog",
    "fueter_left",
    "fueter_map",
    "fueter_right",
    "get_field",
    "laplacian",
    "laplacian_via_dbar",
    "mercator_pair",
    "product_field",
    "sample_points",
    "__version__",
]
