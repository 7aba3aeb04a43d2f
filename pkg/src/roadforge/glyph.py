"""Degraded-glyph generator for recognizer training data.

Clean binary glyph bitmaps are roughed up the way scanned road markings
come out of an intensity raster: contour pixels are eroded (or, in the
optimized mode, also protruded), a median filter smooths the damage,
salt-and-pepper noise is sprinkled on, and the result is downsampled to
the working resolution.  Five presets bundle the combinations used when
comparing training recipes.

All randomness flows through numpy Generators; a given seed and config
reproduce output bit for bit.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyInputError, ParameterError
from .raster import read_pgm

DISTORT_MODES = ("basic", "optimized")
_N4 = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass
class BinaryImage:
    """A foreground/background bitmap; bits is a bool (H, W) array."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.dtype != np.bool_:
            bits = bits.astype(np.bool_)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ParameterError("BinaryImage: bits must be a 2D array "
                                 "with both dimensions >= 1")
        self.bits = bits

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    def copy(self):
        return BinaryImage(self.bits.copy())


@dataclass(frozen=True)
class DegradeConfig:
    """Pipeline knobs; see ``PRESETS`` for the standard Table-style rows."""

    p_distort: float = 0.3
    distort_mode: str = "basic"
    median_passes: int = 0
    noise_density: float = 0.02
    target_size: int = 32
    rng_seed: int = 0

    def validate(self):
        if not 0.0 <= self.p_distort <= 1.0:
            raise ParameterError(
                f"DegradeConfig: p_distort must be in [0, 1], got "
                f"{self.p_distort!r}")
        if self.distort_mode not in DISTORT_MODES:
            raise ParameterError(
                f"DegradeConfig: distort_mode must be one of "
                f"{DISTORT_MODES}, got {self.distort_mode!r}")
        if self.median_passes not in (0, 1, 2):
            raise ParameterError(
                f"DegradeConfig: median_passes must be 0, 1 or 2, got "
                f"{self.median_passes!r}")
        if not 0.0 <= self.noise_density <= 1.0:
            raise ParameterError(
                f"DegradeConfig: noise_density must be in [0, 1], got "
                f"{self.noise_density!r}")
        if int(self.target_size) < 8:
            raise ParameterError(
                f"DegradeConfig: target_size must be >= 8, got "
                f"{self.target_size!r}")


PRESETS = {
    "plain": DegradeConfig(p_distort=0.0, distort_mode="basic",
                           median_passes=0, noise_density=0.0),
    "distort": DegradeConfig(p_distort=0.3, distort_mode="basic",
                             median_passes=0, noise_density=0.0),
    "standard": DegradeConfig(p_distort=0.3, distort_mode="basic",
                              median_passes=1, noise_density=0.02),
    "optimized1": DegradeConfig(p_distort=0.3, distort_mode="optimized",
                                median_passes=1, noise_density=0.02),
    "optimized2": DegradeConfig(p_distort=0.3, distort_mode="optimized",
                                median_passes=2, noise_density=0.02),
}


def preset(name, rng_seed=0, target_size=32):
    """A named preset config with the seed and target size filled in."""
    if name not in PRESETS:
        raise ParameterError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return replace(PRESETS[name], rng_seed=int(rng_seed),
                   target_size=int(target_size))


def extract_contour(img):
    """Coordinates of foreground pixels with a background 4-neighbor.

    The image border counts as background.  Returns an (k, 2) int array of
    (row, col) pairs in row-major order.
    """
    bits = img.bits
    if not bits.any():
        raise EmptyInputError("extract_contour: no foreground pixels")
    padded = np.zeros((bits.shape[0] + 2, bits.shape[1] + 2), np.bool_)
    padded[1:-1, 1:-1] = bits
    open_side = (~padded[:-2, 1:-1] | ~padded[2:, 1:-1]
                 | ~padded[1:-1, :-2] | ~padded[1:-1, 2:])
    contour = bits & open_side
    rows, cols = np.nonzero(contour)
    return np.column_stack([rows, cols])


def distort_contour(img, p, mode="basic", rng=None):
    """Randomly roughen the glyph contour.

    basic: each contour pixel flips to background independently with
    probability p.  optimized: each contour pixel, with probability p,
    either flips itself or (50/50) flips one uniformly-chosen in-image
    background 4-neighbor to foreground, eroding and protruding in equal
    measure; a pixel with no background neighbor in the image erodes.
    Contour membership and neighbor backgrounds are all judged on the
    input image, so the outcome does not depend on visit order.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"distort_contour: p must be in [0, 1], got {p!r}")
    if mode not in DISTORT_MODES:
        raise ParameterError(f"distort_contour: unknown mode {mode!r}")
    if rng is None:
        rng = np.random.default_rng()
    out = img.bits.copy()
    if not img.bits.any():
        return BinaryImage(out)
    contour = extract_contour(img)
    h, w = img.bits.shape
    for r, c in contour:
        if rng.random() >= p:
            continue
        if mode == "basic" or rng.random() < 0.5:
            out[r, c] = False
            continue
        bg = [(r + dr, c + dc) for dr, dc in _N4
              if 0 <= r + dr < h and 0 <= c + dc < w
              and not img.bits[r + dr, c + dc]]
        if not bg:
            out[r, c] = False
            continue
        rr, cc = bg[int(rng.integers(len(bg)))]
        out[rr, cc] = True
    return BinaryImage(out)


def median_filter(img, passes=1):
    """Majority vote over each pixel's 3x3 neighborhood, repeated.

    A pixel becomes foreground when at least 5 of the 9 cells (itself
    included; outside the border counts background) are foreground.
    """
    passes = int(passes)
    if passes < 0:
        raise ParameterError(f"median_filter: passes must be >= 0, got {passes}")
    bits = img.bits
    for _ in range(passes):
        padded = np.zeros((bits.shape[0] + 2, bits.shape[1] + 2), np.int8)
        padded[1:-1, 1:-1] = bits
        acc = np.zeros(bits.shape, np.int8)
        for dr in (0, 1, 2):
            for dc in (0, 1, 2):
                acc += padded[dr:dr + bits.shape[0], dc:dc + bits.shape[1]]
        bits = acc >= 5
    return BinaryImage(bits.copy() if bits is img.bits else bits)


def add_salt_pepper(img, density, rng=None):
    """Flip each pixel independently with probability ``density``."""
    if not 0.0 <= density <= 1.0:
        raise ParameterError(
            f"add_salt_pepper: density must be in [0, 1], got {density!r}")
    if rng is None:
        rng = np.random.default_rng()
    flips = rng.random(img.bits.shape) < density
    return BinaryImage(img.bits ^ flips)


def _axis_weights(n_out, n_in):
    """Overlap weights of output intervals against input pixels, rows
    (n_out, n_in); each row sums to 1."""
    w = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for o in range(n_out):
        lo = o * scale
        hi = (o + 1) * scale
        i0 = int(np.floor(lo))
        i1 = min(int(np.ceil(hi)), n_in)
        for i in range(i0, i1):
            w[o, i] = min(hi, i + 1) - max(lo, i)
    return w / scale


def downsample(img, target=32):
    """Shrink so the longest side equals ``target``, preserving aspect.

    Each output pixel takes the exact area-average coverage of its input
    rectangle; coverage >= 0.5 becomes foreground (so an exact half, as a
    2x2-checkerboard 2:1 reduction produces, lands on foreground).
    """
    target = int(target)
    h, w = img.bits.shape
    longest = max(h, w)
    if target < 1:
        raise ParameterError(f"downsample: target too small: {target}")
    if target > longest:
        raise ParameterError(
            f"downsample: target {target} exceeds the longest side {longest}")
    out_h = max(1, int(round(h * target / longest)))
    out_w = max(1, int(round(w * target / longest)))
    wr = _axis_weights(out_h, h)
    wc = _axis_weights(out_w, w)
    coverage = wr @ img.bits.astype(np.float64) @ wc.T
    return BinaryImage(coverage >= 0.5)


def degrade(img, config):
    """Full pipeline: distort -> median -> noise -> downsample."""
    config.validate()
    rng = np.random.default_rng(config.rng_seed)
    cur = distort_contour(img, config.p_distort, config.distort_mode, rng)
    cur = median_filter(cur, config.median_passes)
    cur = add_salt_pepper(cur, config.noise_density, rng)
    if config.target_size <= max(cur.height, cur.width):
        cur = downsample(cur, config.target_size)
    return cur


def degrade_batch(images, config):
    """Degrade a sequence of glyphs, seeding glyph i with seed XOR i so
    identical glyphs in one batch still degrade differently."""
    config.validate()
    out = []
    for i, img in enumerate(images):
        cfg = replace(config, rng_seed=int(config.rng_seed) ^ i)
        out.append(degrade(img, cfg))
    return out


def roughness(img):
    """Contour roughness: (4-adjacency perimeter)^2 / foreground area."""
    bits = img.bits
    area = int(bits.sum())
    if area == 0:
        raise EmptyInputError("roughness: no foreground pixels")
    padded = np.zeros((bits.shape[0] + 2, bits.shape[1] + 2), np.bool_)
    padded[1:-1, 1:-1] = bits
    perim = 0
    for dr, dc in _N4:
        shifted = padded[1 + dr:bits.shape[0] + 1 + dr,
                         1 + dc:bits.shape[1] + 1 + dc]
        perim += int((bits & ~shifted).sum())
    return perim * perim / area


def read_glyph_pgm(path):
    """Load a PGM as a BinaryImage (level >= 128 is foreground)."""
    img = read_pgm(path)
    return BinaryImage(img.pixels >= 128.0)


def write_glyph_pgm(img, path):
    """Write a BinaryImage as binary PGM, background 0 / foreground 255."""
    levels = np.where(img.bits, 255, 0).astype(np.uint8)
    h, w = levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(levels.tobytes())
