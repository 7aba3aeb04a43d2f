"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: parameter/config problems exit 1,
unreadable or malformed inputs exit 2, and numerically degenerate or
failed computations exit 3.
"""


class RoadforgeError(Exception):
    """Base class for everything raised deliberately by this package."""


class ParameterError(RoadforgeError, ValueError):
    """A parameter value violates its documented range or relation."""


class ConfigError(ParameterError):
    """Bad configuration file: unknown key, wrong type, bad value."""


class ParseError(RoadforgeError):
    """Malformed input file."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class EmptyInputError(RoadforgeError):
    """An input that must contain data is empty."""


class DegenerateInputError(RoadforgeError):
    """Input is structurally unusable (collinear points, constant data, ...)."""


class DuplicateVertexError(DegenerateInputError):
    """Two vertices share an identical (x, y) position."""


class LocationError(RoadforgeError):
    """A query point lies outside the triangulation hull."""


class DegenerateHistogramError(DegenerateInputError):
    """Histogram has a single occupied bin; no threshold separates it."""


class BehindCameraError(DegenerateInputError):
    """A point to be projected lies on or behind the camera plane."""


class EstimationError(RoadforgeError):
    """A geometric estimation problem could not be solved."""


class InsufficientDataError(EstimationError):
    """Fewer samples than the minimum the estimator needs."""


class DegenerateConfigurationError(EstimationError):
    """The sample configuration does not determine a unique solution."""


class RobustFailureError(EstimationError):
    """RANSAC found no model with the minimum number of inliers."""


class InconsistentHomographyError(EstimationError):
    """Homography is not compatible with a rigid motion over the given plane."""


class DivergenceError(RoadforgeError):
    """Iterative refinement made the error worse for several iterations."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
