"""Intensity raster pipeline: thresholding, gridding, smoothing, tiling."""

import json

import numpy as np
import pytest

from roadforge.cloud import PointCloud
from roadforge.errors import (
    DegenerateHistogramError,
    EmptyInputError,
    ParameterError,
    ParseError,
)
from roadforge.raster import (
    IntensityImage,
    RasterParams,
    compute_threshold,
    edge_density,
    gaussian_kernel,
    gaussian_smooth,
    otsu_threshold,
    percentile_threshold,
    rasterize_intensity,
    read_pgm,
    save_tiles,
    sobel_magnitude,
    split_tiles,
    threshold_points,
    write_pgm,
)


def _otsu_exhaustive(values):
    """Reference Otsu: try all 255 splits on the 256-bin scaled histogram,
    maximize between-class variance, lowest split wins ties."""
    v = np.asarray(values, np.float64)
    vmin, vmax = v.min(), v.max()
    bins = np.floor((v - vmin) / (vmax - vmin) * 255.0 + 0.5).astype(int)
    best_t, best_s = 0, -1.0
    for t in range(255):
        lo = bins[bins <= t]
        hi = bins[bins > t]
        if lo.size == 0 or hi.size == 0:
            continue
        s = lo.size * hi.size * (lo.mean() - hi.mean()) ** 2
        if s > best_s:
            best_s, best_t = s, t
    return vmin + (best_t + 0.5) * (vmax - vmin) / 255.0


# -- thresholding -------------------------------------------------------------


def test_otsu_bimodal_split():
    values = np.array([5.0] * 10 + [200.0] * 10)
    t = otsu_threshold(values)
    assert 5.0 < t <= 200.0
    assert np.count_nonzero(values >= t) == 10


def test_otsu_matches_exhaustive_search():
    rng = np.random.default_rng(21)
    for _ in range(20):
        values = np.concatenate([rng.normal(40, 8, 300),
                                 rng.normal(180, 15, 80)])
        values = np.clip(values, 0, 255)
        assert otsu_threshold(values) == pytest.approx(
            _otsu_exhaustive(values), abs=1e-9)
    # uniform data too; the split is arbitrary but must match the oracle
    values = rng.uniform(0, 100, 500)
    assert otsu_threshold(values) == pytest.approx(
        _otsu_exhaustive(values), abs=1e-9)


def test_otsu_constant_input_raises():
    with pytest.raises(DegenerateHistogramError):
        otsu_threshold(np.full(50, 7.0))
    with pytest.raises(EmptyInputError):
        otsu_threshold(np.array([]))


def test_percentile_threshold():
    values = np.arange(1.0, 101.0)
    assert percentile_threshold(values, 0) == 1.0
    t = percentile_threshold(values, 50)
    assert np.count_nonzero(values >= t) == 50
    # constant data is fine here, unlike otsu
    assert percentile_threshold(np.full(9, 3.0), 50) == 3.0


def test_threshold_points_retention():
    xyz = np.zeros((20, 3))
    xyz[:, 0] = np.arange(20)
    inten = np.array([10.0] * 10 + [200.0] * 10)
    pc = PointCloud(xyz, inten)
    bright = threshold_points(pc, method="otsu")
    assert len(bright) == 10
    assert np.all(bright.intensity == 200.0)
    everything = threshold_points(pc, method="percentile:0")
    assert len(everything) == 20
    with pytest.raises(EmptyInputError):
        threshold_points(PointCloud(np.zeros((0, 3))), "otsu")
    with pytest.raises(ParameterError):
        compute_threshold(inten, "median")


# -- rasterization ------------------------------------------------------------


def test_rasterize_single_point():
    pc = PointCloud(np.array([[12.0, 7.0, 0.0]]), np.array([42.0]))
    img = rasterize_intensity(pc, RasterParams(resolution=0.5))
    assert img.pixels.shape == (1, 1)
    assert img.pixels[0, 0] == 42.0
    assert (img.x0, img.y0) == (12.0, 7.0)


def test_rasterize_aggregators():
    xyz = np.array([[0.1, 0.1, 0], [0.2, 0.2, 0]])     # same 0.5 m cell
    pc = PointCloud(xyz, np.array([10.0, 30.0]))
    img_max = rasterize_intensity(pc, RasterParams(resolution=0.5,
                                                   aggregator="max"))
    img_mean = rasterize_intensity(pc, RasterParams(resolution=0.5,
                                                    aggregator="mean"))
    assert img_max.pixels[0, 0] == 30.0
    assert img_mean.pixels[0, 0] == 20.0


def test_rasterize_hash_group_oracle():
    rng = np.random.default_rng(22)
    xyz = np.column_stack([rng.uniform(0, 10, (300, 2)), np.zeros(300)])
    inten = rng.uniform(1, 255, 300)
    pc = PointCloud(xyz, inten)
    res = 0.8
    img = rasterize_intensity(pc, RasterParams(resolution=res,
                                               aggregator="mean"))
    groups = {}
    x0, y0 = xyz[:, 0].min(), xyz[:, 1].min()
    for (x, y, _), v in zip(xyz, inten):
        key = (min(int((y - y0) / res), img.height - 1),
               min(int((x - x0) / res), img.width - 1))
        groups.setdefault(key, []).append(v)
    for (r, c), vals in groups.items():
        assert img.pixels[r, c] == pytest.approx(np.mean(vals), rel=1e-12)
    # empty cells are exactly zero
    filled = np.zeros_like(img.pixels, np.bool_)
    for (r, c) in groups:
        filled[r, c] = True
    assert np.all(img.pixels[~filled] == 0.0)


def test_rasterize_validates():
    pc = PointCloud(np.array([[0.0, 0, 0]]), np.array([1.0]))
    with pytest.raises(ParameterError):
        rasterize_intensity(pc, RasterParams(resolution=0.0))
    with pytest.raises(ParameterError):
        rasterize_intensity(pc, RasterParams(aggregator="median"))
    with pytest.raises(EmptyInputError):
        rasterize_intensity(PointCloud(np.zeros((0, 3))))


# -- smoothing ----------------------------------------------------------------


def test_kernel_normalized_and_symmetric():
    for sigma in (0.5, 1.0, 2.3):
        k = gaussian_kernel(sigma)
        assert k.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(k, k[::-1])
        assert len(k) == 2 * int(np.ceil(3 * sigma)) + 1
    with pytest.raises(ParameterError):
        gaussian_kernel(0.0)


def test_smooth_constant_is_identity():
    img = np.full((20, 30), 7.25)
    out = gaussian_smooth(img, sigma=1.5)
    assert np.allclose(out, 7.25, atol=1e-9)


def test_smooth_impulse_matches_separable_product():
    # away from borders the response to a unit impulse is the outer
    # product of the 1D kernel with itself
    img = np.zeros((31, 31))
    img[15, 15] = 1.0
    sigma = 1.2
    out = gaussian_smooth(img, sigma)
    k = gaussian_kernel(sigma)
    r = len(k) // 2
    expect = np.outer(k, k)
    got = out[15 - r:15 + r + 1, 15 - r:15 + r + 1]
    assert np.allclose(got, expect, atol=1e-9)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)


def test_smooth_preserves_mean_reduces_variance():
    rng = np.random.default_rng(23)
    img = rng.uniform(0, 255, (40, 55))
    out = gaussian_smooth(img, sigma=2.0)
    assert out.mean() == pytest.approx(img.mean(), rel=1e-9)
    assert out.var() <= img.var()
    assert out.max() <= img.max() + 1e-9
    assert out.min() >= img.min() - 1e-9


def test_smooth_keeps_image_metadata():
    img = IntensityImage(3.0, 4.0, 0.25, np.ones((5, 5)))
    out = gaussian_smooth(img, sigma=1.0)
    assert isinstance(out, IntensityImage)
    assert (out.x0, out.y0, out.resolution) == (3.0, 4.0, 0.25)


# -- edges --------------------------------------------------------------------


def test_sobel_matches_naive_stencil():
    rng = np.random.default_rng(24)
    img = rng.uniform(0, 255, (12, 17))
    mag = sobel_magnitude(img)
    assert mag.shape == (10, 15)
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], float)
    ky = kx.T
    for r in range(10):
        for c in range(15):
            win = img[r:r + 3, c:c + 3]
            gx = float((win * kx).sum())
            gy = float((win * ky).sum())
            assert mag[r, c] == pytest.approx(np.hypot(gx, gy), rel=1e-12)


def test_edge_density_constant_and_step():
    assert edge_density(np.full((30, 30), 99.0)) == 0.0
    # a vertical step from 0 to 255: the two interior columns straddling
    # the step light up over the full interior height
    img = np.zeros((20, 40))
    img[:, 20:] = 255.0
    d = edge_density(img, edge_mag_thresh=64.0)
    assert d == pytest.approx(2.0 / 38.0)
    with pytest.raises(ParameterError):
        edge_density(np.zeros((2, 5)))


# -- tiling -------------------------------------------------------------------


def _image(pixels, res=1.0):
    return IntensityImage(x0=0.0, y0=0.0, resolution=res,
                          pixels=np.asarray(pixels, np.float64))


def test_constant_tiles_all_dropped():
    img = _image(np.full((100, 100), 55.0))
    ts = split_tiles(img, RasterParams(window=50, stride=50))
    assert len(ts.kept) == 0
    assert ts.dropped == 4


def test_single_marked_quadrant_kept():
    px = np.zeros((100, 100))
    # checker pattern in the north-east window only
    px[60:90:2, 60:90] = 255.0
    ts = split_tiles(_image(px), RasterParams(window=50, stride=50))
    assert ts.dropped == 3
    assert len(ts.kept) == 1
    tr, tc, tile = ts.kept[0]
    assert (tr, tc) == (1, 1)
    assert tile.pixels.shape == (50, 50)
    # kept tiles carry original values, not the display scaling
    assert tile.pixels.max() == 255.0
    assert (tile.x0, tile.y0) == (50.0, 50.0)


def test_tile_grid_covers_image():
    img = _image(np.zeros((130, 130)))
    ts = split_tiles(img, RasterParams(window=50, stride=50))
    assert ts.dropped + len(ts.kept) == 9
    # short edge tiles are zero-padded to the full window
    px = np.zeros((130, 130))
    px[::2, ::2] = 200.0
    ts = split_tiles(_image(px), RasterParams(window=50, stride=50,
                                              min_edge_density=0.01))
    for tr, tc, tile in ts.kept:
        assert tile.pixels.shape == (50, 50)
        if tr == 2 or tc == 2:
            # the padded region stays exactly zero
            assert np.all(tile.pixels[30:, 30:] == 0.0)


def test_tiles_partition_at_equal_stride():
    rng = np.random.default_rng(25)
    px = rng.uniform(0, 255, (96, 64))
    img = _image(px)
    ts = split_tiles(img, RasterParams(window=32, stride=32,
                                       min_edge_density=0.001))
    assert ts.dropped + len(ts.kept) == 6
    rebuilt = np.full((96, 64), np.nan)
    for tr, tc, tile in ts.kept:
        rebuilt[tr * 32:(tr + 1) * 32, tc * 32:(tc + 1) * 32] = tile.pixels
    covered = ~np.isnan(rebuilt)
    assert np.array_equal(rebuilt[covered], px[covered])
    # with uniform noise every tile passes, so the cover is total
    assert covered.all()


def test_exposure_invariant_keep_decision():
    rng = np.random.default_rng(26)
    base = rng.uniform(0, 1, (64, 64))
    a = split_tiles(_image(base * 255.0),
                    RasterParams(window=32, stride=32))
    b = split_tiles(_image(base * 25.5),        # 10x darker, same content
                    RasterParams(window=32, stride=32))
    assert [(t[0], t[1]) for t in a.kept] == [(t[0], t[1]) for t in b.kept]


def test_overlapping_stride_counts():
    img = _image(np.zeros((100, 100)))
    ts = split_tiles(img, RasterParams(window=50, stride=25))
    assert ts.dropped + len(ts.kept) == 16
    with pytest.raises(ParameterError):
        split_tiles(img, RasterParams(window=25, stride=50))


# -- PGM I/O ------------------------------------------------------------------


def test_pgm_binary_round_trip(tmp_path):
    rng = np.random.default_rng(27)
    px = rng.integers(0, 256, (19, 23)).astype(np.float64)
    img = IntensityImage(1.5, -2.25, 0.05, px)
    p = tmp_path / "a.pgm"
    write_pgm(img, p)
    back = read_pgm(p)
    # levels come back exactly (values spanned 0..255 so scaling is 1:1)
    assert np.array_equal(back.pixels, np.round(px * 255.0 / px.max()))
    assert back.x0 == 1.5 and back.y0 == -2.25 and back.resolution == 0.05
    # a rewrite of the reread image is byte-identical
    p2 = tmp_path / "b.pgm"
    write_pgm(back, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_pgm_ascii_matches_binary_levels(tmp_path):
    rng = np.random.default_rng(28)
    px = rng.uniform(0, 1000, (7, 9))
    img = IntensityImage(0.0, 0.0, 1.0, px)
    pb = tmp_path / "b.pgm"
    pa = tmp_path / "a.pgm"
    write_pgm(img, pb, binary=True)
    write_pgm(img, pa, binary=False)
    assert pa.read_bytes().startswith(b"P2")
    assert pb.read_bytes().startswith(b"P5")
    assert np.array_equal(read_pgm(pa).pixels, read_pgm(pb).pixels)


def test_pgm_rejects_garbage(tmp_path):
    p = tmp_path / "x.pgm"
    p.write_bytes(b"P6\n2 2\n255\n....")
    with pytest.raises(ParseError):
        read_pgm(p)
    p.write_bytes(b"P5\n2 2\n65535\n")
    with pytest.raises(ParseError):
        read_pgm(p)
    p.write_bytes(b"P5\n4 4\n255\nab")
    with pytest.raises(ParseError):
        read_pgm(p)


def test_save_tiles_manifest(tmp_path):
    rng = np.random.default_rng(29)
    px = np.zeros((64, 64))
    px[0:32, 0:32] = rng.uniform(0, 9, (32, 32))
    ts = split_tiles(_image(px, res=0.5),
                     RasterParams(window=32, stride=32))
    out = tmp_path / "tiles"
    save_tiles(ts, out)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["window"] == 32 and manifest["stride"] == 32
    assert len(manifest["kept"]) == len(ts.kept) == 1
    entry = manifest["kept"][0]
    assert entry["file"] == "tile_0_0.pgm"
    assert (out / "tile_0_0.pgm").exists()
    assert entry["x0"] == 0.0 and entry["y0"] == 0.0
    assert len(manifest["dropped"]) == 3
    # dropped entries carry world coordinates of the window origin
    d = {(e["row"], e["col"]): (e["x0"], e["y0"])
         for e in manifest["dropped"]}
    assert d[(1, 1)] == (16.0, 16.0)
