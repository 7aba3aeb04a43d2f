"""roadforge: road-model building blocks for vehicle-borne laser scans.

Ground/non-ground separation by progressive densification of a seeded
triangulated surface, DEM rasterization, intensity imaging and tiling for
road-marking extraction, degraded-glyph dataset generation, and
plane-induced-homography camera pose refinement.
"""

from .errors import (
    BehindCameraError,
    ConfigError,
    DegenerateConfigurationError,
    DegenerateHistogramError,
    DegenerateInputError,
    DivergenceError,
    DuplicateVertexError,
    EmptyInputError,
    EstimationError,
    InconsistentHomographyError,
    InsufficientDataError,
    LocationError,
    ParameterError,
    ParseError,
    RoadforgeError,
    RobustFailureError,
)

__version__ = "0.1.0"

__all__ = [
    "BehindCameraError",
    "ConfigError",
    "DegenerateConfigurationError",
    "DegenerateHistogramError",
    "DegenerateInputError",
    "DivergenceError",
    "DuplicateVertexError",
    "EmptyInputError",
    "EstimationError",
    "InconsistentHomographyError",
    "InsufficientDataError",
    "LocationError",
    "ParameterError",
    "ParseError",
    "RoadforgeError",
    "RobustFailureError",
    "__version__",
]
