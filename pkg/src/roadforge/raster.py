"""Ground-intensity imaging: histogram thresholding, rasterization,
smoothing, and edge-pruned tiling.

The pipeline mirrors how bright road markings are pulled out of a ground
cloud: drop low-intensity returns (markings reflect strongly), grid the
survivors into a 2D image, smooth, and cut the image into fixed windows
keeping only those with enough edge response to contain anything.

Images here are south-up: pixel row 0 covers the minimum-y strip, pixel
(r, c) covers the world square [x0 + c*res, x0 + (c+1)*res) x
[y0 + r*res, y0 + (r+1)*res).  PGM files are written in this row order and
carry the origin in a header comment.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d

from .errors import (
    DegenerateHistogramError,
    EmptyInputError,
    ParameterError,
    ParseError,
)

_AGGREGATORS = ("max", "mean")


@dataclass
class IntensityImage:
    """Gridded intensity raster; 0 marks a cell no point fell into."""

    x0: float
    y0: float
    resolution: float
    pixels: np.ndarray

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


@dataclass(frozen=True)
class RasterParams:
    """Knobs of the intensity-image pipeline."""

    resolution: float = 0.05
    aggregator: str = "max"
    threshold_method: object = "otsu"
    sigma: float = 1.0
    window: int = 256
    stride: int = 256
    edge_mag_thresh: float = 64.0
    min_edge_density: float = 0.01

    def validate(self):
        if not (np.isfinite(self.resolution) and self.resolution > 0.0):
            raise ParameterError(
                f"RasterParams: resolution must be > 0, got {self.resolution!r}")
        if self.aggregator not in _AGGREGATORS:
            raise ParameterError(
                f"RasterParams: aggregator must be one of {_AGGREGATORS}, "
                f"got {self.aggregator!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0.0):
            raise ParameterError(
                f"RasterParams: sigma must be > 0, got {self.sigma!r}")
        if not (self.window >= self.stride >= 1):
            raise ParameterError(
                "RasterParams: need window >= stride >= 1, got "
                f"window={self.window!r} stride={self.stride!r}")
        if not 0.0 < self.min_edge_density < 1.0:
            raise ParameterError(
                "RasterParams: min_edge_density must be in (0, 1), got "
                f"{self.min_edge_density!r}")
        if not (np.isfinite(self.edge_mag_thresh)
                and self.edge_mag_thresh >= 0.0):
            raise ParameterError(
                "RasterParams: edge_mag_thresh must be >= 0, got "
                f"{self.edge_mag_thresh!r}")
        _parse_method(self.threshold_method)


@dataclass
class TileSet:
    """Windows kept by the edge-density filter, plus what was dropped."""

    kept: list
    dropped: int
    window: int
    stride: int
    dropped_cells: list = field(default_factory=list)


# -- thresholding -------------------------------------------------------------


def _parse_method(method):
    """Normalize a threshold method spec to ('otsu',) or ('percentile', p)."""
    if method == "otsu":
        return ("otsu",)
    if isinstance(method, str) and method.startswith("percentile:"):
        method = ("percentile", float(method.split(":", 1)[1]))
    if (isinstance(method, (tuple, list)) and len(method) == 2
            and method[0] == "percentile"):
        p = float(method[1])
        if not 0.0 <= p <= 100.0:
            raise ParameterError(
                f"percentile must be in [0, 100], got {p!r}")
        return ("percentile", p)
    raise ParameterError(
        f"unknown threshold method {method!r}; "
        "use 'otsu' or ('percentile', p)")


def otsu_threshold(values):
    """Otsu's threshold in the input units.

    Values are min-max scaled into 256 bins (round-half-up); the between-
    class variance is maximized over the 255 possible splits, ties going to
    the lowest split; the winning bin edge is mapped back to input units.
    Retention is `value >= threshold`.
    """
    v = np.asarray(values, np.float64)
    if v.size == 0:
        raise EmptyInputError("otsu_threshold: no values")
    vmin = float(v.min())
    vmax = float(v.max())
    if vmax == vmin:
        raise DegenerateHistogramError(
            "otsu_threshold: all intensities equal; "
            "use a percentile threshold instead")
    span = vmax - vmin
    bins = np.floor((v - vmin) / span * 255.0 + 0.5).astype(np.int64)
    hist = np.bincount(bins, minlength=256).astype(np.float64)
    n = v.size
    w0 = np.cumsum(hist)[:-1]              # class sizes for t = 0..254
    w1 = n - w0
    mu0 = np.cumsum(hist * np.arange(256))[:-1]
    mu_total = mu0[-1] + hist[255] * 255.0
    valid = (w0 > 0) & (w1 > 0)
    sigma_b = np.zeros(255)
    m0 = np.where(valid, mu0 / np.where(w0 > 0, w0, 1.0), 0.0)
    m1 = np.where(valid, (mu_total - mu0) / np.where(w1 > 0, w1, 1.0), 0.0)
    sigma_b[valid] = (w0 * w1)[valid] * (m0 - m1)[valid] ** 2
    t_star = int(np.argmax(sigma_b))       # argmax takes the lowest tie
    return vmin + (t_star + 0.5) * span / 255.0


def percentile_threshold(values, p):
    """The p-th percentile (linear interpolation) in input units."""
    v = np.asarray(values, np.float64)
    if v.size == 0:
        raise EmptyInputError("percentile_threshold: no values")
    return float(np.percentile(v, p))


def compute_threshold(values, method):
    m = _parse_method(method)
    if m[0] == "otsu":
        return otsu_threshold(values)
    return percentile_threshold(values, m[1])


def threshold_points(cloud, method="otsu"):
    """Retain the points whose intensity is >= the method's threshold."""
    if len(cloud) == 0:
        raise EmptyInputError("threshold_points: empty cloud")
    t = compute_threshold(cloud.intensity, method)
    return cloud.select(cloud.intensity >= t)


# -- rasterization ------------------------------------------------------------


def rasterize_intensity(cloud, params=None):
    """Grid point intensities into an IntensityImage.

    Cell (r, c) aggregates (max or mean) the intensities of the points in
    its world square; cells without points are 0.
    """
    if params is None:
        params = RasterParams()
    params.validate()
    if len(cloud) == 0:
        raise EmptyInputError("rasterize_intensity: empty cloud")
    res = params.resolution
    x = cloud.xyz[:, 0]
    y = cloud.xyz[:, 1]
    x0 = float(x.min())
    y0 = float(y.min())
    ncols = int(math.floor((float(x.max()) - x0) / res)) + 1
    nrows = int(math.floor((float(y.max()) - y0) / res)) + 1
    col = np.clip(np.floor((x - x0) / res).astype(np.int64), 0, ncols - 1)
    row = np.clip(np.floor((y - y0) / res).astype(np.int64), 0, nrows - 1)
    img = np.zeros((nrows, ncols), np.float64)
    if params.aggregator == "max":
        np.maximum.at(img, (row, col), cloud.intensity)
    else:
        counts = np.zeros((nrows, ncols), np.float64)
        np.add.at(img, (row, col), cloud.intensity)
        np.add.at(counts, (row, col), 1.0)
        nonzero = counts > 0
        img[nonzero] /= counts[nonzero]
    return IntensityImage(x0=x0, y0=y0, resolution=res, pixels=img)


# -- smoothing ----------------------------------------------------------------


def gaussian_kernel(sigma):
    """1D Gaussian taps truncated at radius ceil(3*sigma), renormalized."""
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise ParameterError(f"gaussian kernel: sigma must be > 0, got {sigma!r}")
    radius = int(math.ceil(3.0 * sigma))
    k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(image, sigma=1.0):
    """Separable Gaussian blur with reflected borders.

    Border samples are mirrored edge-inclusive (..., p1, p0 | p0, p1, ...),
    which keeps the image mean exactly and never raises the maximum.
    Accepts an IntensityImage (metadata preserved) or a bare array.
    """
    k = gaussian_kernel(sigma)
    pixels = image.pixels if isinstance(image, IntensityImage) else image
    pixels = np.asarray(pixels, np.float64)
    out = convolve1d(pixels, k, axis=0, mode="reflect")
    out = convolve1d(out, k, axis=1, mode="reflect")
    if isinstance(image, IntensityImage):
        return IntensityImage(image.x0, image.y0, image.resolution, out)
    return out


# -- edges and tiling ----------------------------------------------------------


def sobel_magnitude(pixels):
    """Gradient magnitude of the interior, (H-2) x (W-2).

    3x3 Sobel operators, evaluated only where the full stencil fits.
    """
    a = np.asarray(pixels, np.float64)
    if a.ndim != 2 or a.shape[0] < 3 or a.shape[1] < 3:
        raise ParameterError("sobel_magnitude: region must be at least 3x3")
    # vertical [1,2,1] smoothing of the horizontal difference, and vice versa
    dx = a[:, 2:] - a[:, :-2]
    gx = dx[:-2, :] + 2.0 * dx[1:-1, :] + dx[2:, :]
    dy = a[2:, :] - a[:-2, :]
    gy = dy[:, :-2] + 2.0 * dy[:, 1:-1] + dy[:, 2:]
    return np.hypot(gx, gy)


def edge_density(pixels, edge_mag_thresh=64.0):
    """Fraction of interior pixels with Sobel magnitude >= the threshold."""
    mag = sobel_magnitude(pixels)
    return float(np.count_nonzero(mag >= edge_mag_thresh) / mag.size)


def split_tiles(image, params=None):
    """Cut an image into window x window tiles and keep the edgy ones.

    Windows start at multiples of the stride and are zero-padded past the
    image edge.  Edge density is measured on a single whole-image min-max
    scaling to 0-255 so the keep/drop decision is exposure-invariant;
    kept tiles carry the ORIGINAL (unscaled) pixel values.
    """
    if params is None:
        params = RasterParams()
    params.validate()
    pixels = image.pixels
    h, w = pixels.shape
    if h == 0 or w == 0:
        raise EmptyInputError("split_tiles: empty image")
    vmin = float(pixels.min())
    vmax = float(pixels.max())
    scaled = (np.zeros_like(pixels) if vmax == vmin
              else (pixels - vmin) / (vmax - vmin) * 255.0)
    win = params.window
    stride = params.stride
    n_tr = (h + stride - 1) // stride
    n_tc = (w + stride - 1) // stride
    kept = []
    dropped_cells = []
    for tr in range(n_tr):
        r0 = tr * stride
        for tc in range(n_tc):
            c0 = tc * stride
            raw = np.zeros((win, win), np.float64)
            sc = np.zeros((win, win), np.float64)
            rs = min(win, h - r0)
            cs = min(win, w - c0)
            raw[:rs, :cs] = pixels[r0:r0 + rs, c0:c0 + cs]
            sc[:rs, :cs] = scaled[r0:r0 + rs, c0:c0 + cs]
            density = edge_density(sc, params.edge_mag_thresh)
            tile = IntensityImage(
                x0=image.x0 + c0 * image.resolution,
                y0=image.y0 + r0 * image.resolution,
                resolution=image.resolution,
                pixels=raw)
            if density >= params.min_edge_density:
                kept.append((tr, tc, tile))
            else:
                dropped_cells.append((tr, tc, tile.x0, tile.y0))
    return TileSet(kept=kept, dropped=len(dropped_cells), window=win,
                   stride=stride, dropped_cells=dropped_cells)


# -- PGM I/O -------------------------------------------------------------------


def _quantize(pixels):
    vmin = float(pixels.min())
    vmax = float(pixels.max())
    if vmax == vmin:
        return np.zeros(pixels.shape, np.uint8)
    levels = np.floor((pixels - vmin) / (vmax - vmin) * 255.0 + 0.5)
    return levels.astype(np.uint8)


def write_pgm(image, path, binary=True):
    """Write an IntensityImage as 8-bit PGM (P5 binary or P2 ASCII).

    Values are min-max scaled onto 0-255.  The world origin and resolution
    ride in a comment line; rows are emitted south-up (row 0 = minimum y),
    matching the in-memory layout.
    """
    levels = _quantize(image.pixels)
    h, w = levels.shape
    header = (f"{'P5' if binary else 'P2'}\n"
              f"# origin {image.x0:.6f} {image.y0:.6f} "
              f"res {image.resolution:.6f}\n"
              f"{w} {h}\n255\n")
    if binary:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(levels.tobytes())
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(header)
            for r in range(h):
                fh.write(" ".join(str(int(v)) for v in levels[r]) + "\n")


def read_pgm(path):
    """Read a P2/P5 PGM back into an IntensityImage (pixel values are the
    stored 0-255 levels; origin/resolution parsed from the comment)."""
    with open(path, "rb") as fh:
        data = fh.read()
    x0 = y0 = 0.0
    res = 1.0
    pos = 0

    def next_token():
        nonlocal pos, x0, y0, res
        while pos < len(data):
            if data[pos:pos + 1].isspace():
                pos += 1
                continue
            if data[pos:pos + 1] == b"#":
                end = data.find(b"\n", pos)
                end = len(data) if end < 0 else end
                comment = data[pos + 1:end].split()
                if len(comment) == 5 and comment[0] == b"origin":
                    x0 = float(comment[1])
                    y0 = float(comment[2])
                    res = float(comment[4])
                pos = end + 1
                continue
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            return data[start:pos]
        raise ParseError(str(path), 0, "truncated PGM header")

    magic = next_token()
    if magic not in (b"P2", b"P5"):
        raise ParseError(str(path), 1, f"not a PGM file (magic {magic!r})")
    w = int(next_token())
    h = int(next_token())
    maxval = int(next_token())
    if maxval != 255:
        raise ParseError(str(path), 1, f"unsupported maxval {maxval}")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raw = data[pos:pos + w * h]
        if len(raw) != w * h:
            raise ParseError(str(path), 0, "truncated P5 payload")
        levels = np.frombuffer(raw, np.uint8).reshape(h, w)
    else:
        vals = data[pos:].split()
        if len(vals) != w * h:
            raise ParseError(str(path), 0,
                             f"expected {w * h} samples, got {len(vals)}")
        levels = np.array([int(v) for v in vals],
                          np.uint8).reshape(h, w)
    return IntensityImage(x0=x0, y0=y0, resolution=res,
                          pixels=levels.astype(np.float64))


def save_tiles(tileset, directory, binary=True):
    """Write kept tiles as tile_{row}_{col}.pgm plus manifest.json.

    The manifest records window geometry and the world origin of every
    kept and dropped tile, sorted, with no timestamps, so identical inputs
    produce identical bytes.
    """
    os.makedirs(directory, exist_ok=True)
    kept_entries = []
    for tr, tc, tile in sorted(tileset.kept, key=lambda t: (t[0], t[1])):
        name = f"tile_{tr}_{tc}.pgm"
        write_pgm(tile, os.path.join(directory, name), binary=binary)
        kept_entries.append({"row": tr, "col": tc, "file": name,
                             "x0": tile.x0, "y0": tile.y0})
    dropped_entries = [{"row": tr, "col": tc, "x0": x0, "y0": y0}
                       for tr, tc, x0, y0 in sorted(tileset.dropped_cells)]
    manifest = {
        "schema_version": 1,
        "window": tileset.window,
        "stride": tileset.stride,
        "kept": kept_entries,
        "dropped": dropped_entries,
    }
    path = os.path.join(directory, "manifest.json")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
