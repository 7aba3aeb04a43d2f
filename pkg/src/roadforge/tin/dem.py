"""DEM rasterization of a TIN and Esri ASCII grid output."""

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import EmptyInputError, ParameterError
from . import engine

NODATA = -9999.0


@dataclass
class RasterGrid:
    """Row-major elevation grid, row 0 northernmost (north-up).

    ``x0, y0`` is the lower-left corner of the lower-left cell; the center
    of storage cell (row, col) sits at
    ``(x0 + (col + 0.5) * cell, y0 + (n_rows - 1 - row + 0.5) * cell)``.
    Cells whose center falls outside the TIN hull hold ``nodata``.
    """

    x0: float
    y0: float
    cell: float
    values: np.ndarray
    nodata: float = NODATA

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    def cell_center(self, row, col):
        x = self.x0 + (col + 0.5) * self.cell
        y = self.y0 + (self.n_rows - 1 - row + 0.5) * self.cell
        return x, y


@njit(cache=True)
def _sample_grid(px, py, pz, tv, tn, counts, x0, y0, cell, nrows, ncols,
                 nodata, out):
    hint = counts[engine.C_LAST]
    for r in range(nrows):
        y = y0 + (nrows - 1 - r + 0.5) * cell
        for c in range(ncols):
            x = x0 + (c + 0.5) * cell
            t, flag = engine._locate(px, py, tv, tn, counts, x, y, hint)
            if flag == 0:
                out[r, c] = engine._barycentric_z(px, py, pz, tv, t, x, y)
                hint = t
            else:
                out[r, c] = nodata
                # a ghost is a fine walk start; keep it as the hint
                if flag == 1:
                    hint = t


def rasterize_dem(tin, cell):
    """Sample ``tin`` on a square grid of pitch ``cell`` covering its hull.

    Cell centers inside or on the hull get barycentric-linear elevations,
    so a TIN sampled from any affine surface reproduces it exactly; centers
    outside get NODATA.
    """
    cell = float(cell)
    if not np.isfinite(cell) or cell <= 0.0:
        raise ParameterError(f"rasterize_dem: cell must be > 0, got {cell!r}")
    if tin.n_triangles == 0:
        raise EmptyInputError("rasterize_dem: empty TIN")
    n = tin.n_vertices
    x0 = float(np.min(tin._px[:n]))
    y0 = float(np.min(tin._py[:n]))
    xmax = float(np.max(tin._px[:n]))
    ymax = float(np.max(tin._py[:n]))
    ncols = int(np.floor((xmax - x0) / cell)) + 1
    nrows = int(np.floor((ymax - y0) / cell)) + 1
    values = np.empty((nrows, ncols), np.float64)
    _sample_grid(tin._px, tin._py, tin._pz, tin._tv, tin._tn, tin._counts,
                 x0, y0, cell, nrows, ncols, NODATA, values)
    return RasterGrid(x0=x0, y0=y0, cell=cell, values=values)


def write_esri_ascii(grid, path):
    """Write ``grid`` as an Esri ASCII raster (.asc)."""
    lines = [
        f"ncols {grid.n_cols}",
        f"nrows {grid.n_rows}",
        f"xllcorner {grid.x0:.6f}",
        f"yllcorner {grid.y0:.6f}",
        f"cellsize {grid.cell:.6f}",
        "NODATA_value -9999",
    ]
    nodata = grid.nodata
    for r in range(grid.n_rows):
        row = grid.values[r]
        cells = ["-9999" if v == nodata else f"{v:.6f}" for v in row]
        lines.append(" ".join(cells))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
