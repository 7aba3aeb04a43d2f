"""Synthetic road-survey scenes with known per-point labels.

Ground truth for filter benchmarks: a gently rolling ground surface
(slopes stay under 2%), a few flat-roofed boxes standing on it, and a
small fraction of isolated high "salt" returns imitating atmospheric or
multipath noise.  Points falling inside a box footprint become roof
returns (the scanner sees the roof, not the ground beneath); walls are not
sampled.  Intensity mimics an asphalt road with bright lane markings so
the same scene drives the raster pipeline.
"""

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud

TRUE_GROUND = 0
TRUE_OBJECT = 1
TRUE_NOISE = 2

_DEFAULT_BOXES = ((30.0, 30.0, 40.0, 40.0),
                  (90.0, 120.0, 100.0, 130.0),
                  (150.0, 60.0, 160.0, 70.0))


@dataclass
class Scene:
    """A generated cloud plus its generator-truth labels."""

    cloud: PointCloud
    labels: np.ndarray
    boxes: tuple
    extent: float


def ground_elevation(x, y, extent=200.0):
    """Analytic ground surface: crossing sine waves, amplitude 0.3 m over
    a 100 m wavelength, so the slope never exceeds about 1.9%."""
    w = 2.0 * np.pi / (extent / 2.0)
    return 0.3 * np.sin(w * np.asarray(x)) * np.sin(w * np.asarray(y))


def _marking_mask(x, y):
    """Lane markings of a straight east-west road across mid-scene:
    two solid edge lines and a dashed center line."""
    on_road = (y >= 95.0) & (y <= 105.0)
    edge = on_road & (((y >= 95.0) & (y <= 95.15))
                      | ((y >= 104.85) & (y <= 105.0)))
    dash_phase = np.mod(x, 6.0)
    center = on_road & (np.abs(y - 100.0) <= 0.2) & (dash_phase <= 3.0)
    return edge | center


def make_scene(n_points=500_000, extent=200.0, seed=20240811,
               boxes=_DEFAULT_BOXES, box_height=5.0, salt_fraction=0.01):
    """Generate a labeled survey scene.

    Uniform XY sampling over [0, extent]^2; box-footprint points are
    lifted onto the roof plane (local ground + box_height) and labeled
    TRUE_OBJECT; a salt_fraction subset is thrown 20-50 m up and labeled
    TRUE_NOISE; everything else is TRUE_GROUND.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, extent, n_points)
    y = rng.uniform(0.0, extent, n_points)
    z = ground_elevation(x, y, extent)
    labels = np.full(n_points, TRUE_GROUND, np.int8)

    for (x0, y0, x1, y1) in boxes:
        inside = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
        z[inside] += box_height
        labels[inside] = TRUE_OBJECT

    n_salt = int(round(salt_fraction * n_points))
    if n_salt:
        salt = rng.choice(n_points, size=n_salt, replace=False)
        z[salt] += rng.uniform(20.0, 50.0, n_salt)
        labels[salt] = TRUE_NOISE

    intensity = np.clip(rng.normal(30.0, 5.0, n_points), 0.0, None)
    roof = labels == TRUE_OBJECT
    intensity[roof] = np.clip(rng.normal(60.0, 10.0, int(roof.sum())),
                              0.0, None)
    marked = _marking_mask(x, y) & (labels == TRUE_GROUND)
    intensity[marked] = np.clip(rng.normal(220.0, 10.0, int(marked.sum())),
                                0.0, 255.0)

    xyz = np.column_stack([x, y, z])
    cloud = PointCloud(xyz, intensity, source_id=f"synthetic-{seed}")
    return Scene(cloud=cloud, labels=labels, boxes=tuple(boxes),
                 extent=float(extent))
