"""2.5D Delaunay TIN: exact predicates, incremental kernel, DEM sampling."""

from .dem import NODATA, RasterGrid, rasterize_dem, write_esri_ascii
from .mesh import TIN, VIRTUAL, Vertex, delaunay_triangulate
from .predicates import incircle, orient2d

__all__ = [
    "NODATA",
    "RasterGrid",
    "TIN",
    "VIRTUAL",
    "Vertex",
    "delaunay_triangulate",
    "incircle",
    "orient2d",
    "rasterize_dem",
    "write_esri_ascii",
]
