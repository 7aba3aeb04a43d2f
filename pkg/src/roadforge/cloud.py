"""Point-cloud data model, ASCII XYZI I/O, KD-tree queries, outlier removal.

Clouds are stored as numpy arrays internally ((n, 3) float64 coordinates
plus an (n,) float64 intensity channel); the Point record type is a
convenience view for element access, not the storage format.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyInputError, ParameterError, ParseError


@dataclass(frozen=True)
class Point:
    """One LiDAR return: world-frame meters plus reflectance intensity."""

    x: float
    y: float
    z: float
    intensity: float = 0.0


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box enclosing a cloud."""

    min_x: float
    min_y: float
    min_z: float
    max_x: float
    max_y: float
    max_z: float

    def contains(self, x, y, z):
        return (self.min_x <= x <= self.max_x
                and self.min_y <= y <= self.max_y
                and self.min_z <= z <= self.max_z)


class PointCloud:
    """Ordered point sequence with a stable, file-order iteration order."""

    def __init__(self, xyz, intensity=None, source_id=""):
        xyz = np.ascontiguousarray(xyz, np.float64)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise ParameterError("PointCloud: xyz must be an (n, 3) array")
        n = xyz.shape[0]
        if intensity is None:
            intensity = np.zeros(n, np.float64)
        else:
            intensity = np.ascontiguousarray(intensity, np.float64)
        if intensity.shape != (n,):
            raise ParameterError(
                "PointCloud: intensity must have one value per point")
        if n and not np.all(np.isfinite(xyz)):
            raise ParameterError("PointCloud: non-finite coordinates")
        if n and (not np.all(np.isfinite(intensity))
                  or np.any(intensity < 0.0)):
            raise ParameterError(
                "PointCloud: intensity must be finite and >= 0")
        self.xyz = xyz
        self.intensity = intensity
        self.source_id = source_id

    def __len__(self):
        return self.xyz.shape[0]

    def __getitem__(self, i):
        x, y, z = self.xyz[i]
        return Point(float(x), float(y), float(z), float(self.intensity[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def select(self, mask_or_indices, source_id=None):
        """Sub-cloud of the given rows, original order preserved."""
        sid = self.source_id if source_id is None else source_id
        return PointCloud(self.xyz[mask_or_indices],
                          self.intensity[mask_or_indices], sid)

    @classmethod
    def from_points(cls, points, source_id=""):
        xyz = np.array([(p.x, p.y, p.z) for p in points], np.float64)
        inten = np.array([p.intensity for p in points], np.float64)
        if len(points) == 0:
            xyz = xyz.reshape(0, 3)
        return cls(xyz, inten, source_id)


def bounds(cloud):
    """Axis-aligned bounds of a non-empty cloud."""
    if len(cloud) == 0:
        raise EmptyInputError("bounds: empty cloud")
    lo = cloud.xyz.min(axis=0)
    hi = cloud.xyz.max(axis=0)
    return Bounds(float(lo[0]), float(lo[1]), float(lo[2]),
                  float(hi[0]), float(hi[1]), float(hi[2]))


class SpatialIndex:
    """Balanced KD-tree over cloud XYZ; immutable once built.

    Backed by scipy's cKDTree; results agree with a brute-force scan (the
    tree only prunes, all distance comparisons are plain float64).
    """

    def __init__(self, cloud):
        if len(cloud) == 0:
            raise EmptyInputError("SpatialIndex: empty cloud")
        self._xyz = cloud.xyz
        self._tree = cKDTree(cloud.xyz)

    def count_within_radius(self, p, r):
        """Indexed points q with ||q - p|| <= r, the query point excluded.

        Exclusion is by exact coordinate equality: when p coincides with an
        indexed point, one copy (itself) is not counted, so coincident
        duplicates still count each other.
        """
        r = float(r)
        if not np.isfinite(r) or r <= 0.0:
            raise ParameterError(f"count_within_radius: r must be > 0, "
                                 f"got {r!r}")
        q = np.array([p.x, p.y, p.z], np.float64)
        hits = self._tree.query_ball_point(q, r)
        n = len(hits)
        for i in hits:
            if (self._xyz[i] == q).all():
                n -= 1
                break
        return n

    def neighbor_counts(self, r):
        """count_within_radius for every indexed point, vectorized."""
        r = float(r)
        if not np.isfinite(r) or r <= 0.0:
            raise ParameterError(f"neighbor_counts: r must be > 0, got {r!r}")
        counts = self._tree.query_ball_point(self._xyz, r,
                                             return_length=True)
        return np.asarray(counts, np.int64) - 1


def outlier_mask(cloud, r, k_min):
    """Boolean mask of outliers: fewer than k_min neighbors within r.

    Every point is classified against the original cloud in a single pass;
    removing a point never affects its neighbors' classification.
    """
    if k_min < 1:
        raise ParameterError(f"outlier_mask: k_min must be >= 1, got {k_min}")
    if len(cloud) == 0:
        raise EmptyInputError("outlier_mask: empty cloud")
    index = SpatialIndex(cloud)
    return index.neighbor_counts(r) < int(k_min)


def remove_outliers(cloud, r, k_min):
    """Split a cloud into (inliers, outliers) by neighbor count.

    A point is an outlier iff it has fewer than k_min neighbors within
    radius r in the ORIGINAL cloud.  Single pass: the classification of one
    point never reacts to the removal of another, so re-running the filter
    on the inliers may remove further points.  Both outputs preserve input
    order and partition the input exactly.
    """
    mask = outlier_mask(cloud, r, k_min)
    return cloud.select(~mask), cloud.select(mask)


def load_cloud(path, format="ascii_xyzi"):
    """Load an ASCII XYZI cloud: 4 whitespace-separated fields per line.

    Lines starting with '#' and whitespace-only lines are skipped.  Any
    other malformed line raises ParseError naming the line number.
    """
    if format != "ascii_xyzi":
        raise ParameterError(f"load_cloud: unknown format {format!r}")
    rows = []
    inten = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) != 4:
                raise ParseError(str(path), line_no,
                                 f"expected 4 fields, got {len(fields)}")
            try:
                x, y, z, i = (float(f) for f in fields)
            except ValueError:
                raise ParseError(str(path), line_no,
                                 "fields must be decimal numbers") from None
            if not all(np.isfinite(v) for v in (x, y, z, i)):
                raise ParseError(str(path), line_no,
                                 "non-finite value")
            if i < 0.0:
                raise ParseError(str(path), line_no,
                                 "intensity must be >= 0")
            rows.append((x, y, z))
            inten.append(i)
    if not rows:
        raise EmptyInputError(f"load_cloud: no points in {path}")
    return PointCloud(np.array(rows, np.float64),
                      np.array(inten, np.float64), source_id=str(path))


def _format_intensity(v):
    # integral intensities print as integers; fractional ones use repr,
    # the shortest digit string that round-trips in float64
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def save_cloud(cloud, path):
    """Write a cloud as ASCII XYZI: coordinates with 6 fractional digits,
    intensity in its shortest exact form, LF line endings."""
    if len(cloud) == 0:
        raise EmptyInputError("save_cloud: empty cloud")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for i in range(len(cloud)):
            x, y, z = cloud.xyz[i]
            fh.write(f"{x:.6f} {y:.6f} {z:.6f} "
                     f"{_format_intensity(cloud.intensity[i])}\n")
