"""Progressive TIN densification with a grid pyramid and virtual corners.

Classifies a (pre-cleaned) cloud into ground and non-ground points.  The
coarsest grid selects per-cell lowest points as seeds, four virtual corner
vertices close the survey-area hull, and each finer pyramid level offers
its per-cell lowest unclassified points to the densifier, which accepts a
candidate when it sits close to its containing triangle (distance and
iteration-angle thresholds) and, when enabled, when the three sub-triangles
its insertion would create stay non-obtuse and keep their normals within
90 degrees of the containing triangle's.

Acceptance is re-tried: a candidate rejected in one pass may be accepted in
a later pass of the same level once nearby insertions have flattened its
containing triangle, and passes repeat until one full pass accepts nothing,
so on exit no unclassified candidate passes the checks against the final
TIN.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .cloud import bounds as cloud_bounds
from .errors import (
    DegenerateInputError,
    EmptyInputError,
    ParameterError,
)
from .tin import TIN, VIRTUAL, Vertex, delaunay_triangulate
from .tin import engine

_EPS_DOT = 1e-12

CORNER_SEED_MODES = ("nearest_seed_z", "idw_k3")

LABEL_GROUND = 0
LABEL_NONGROUND = 1
LABEL_OUTLIER = 2
_LABEL_NAMES = {LABEL_GROUND: "ground",
                LABEL_NONGROUND: "nonground",
                LABEL_OUTLIER: "outlier"}


@dataclass(frozen=True)
class FilterParams:
    """Densification thresholds and pyramid geometry.

    ``initial_cell`` should exceed the largest structure footprint so that
    every coarse cell contains at least one true ground point.
    ``normal_limit`` is fixed at 90 degrees (the constraint accepts a
    sub-triangle whose normal stays strictly within a right angle of the
    containing triangle's); it is a field for visibility, not for tuning.

    ``enable_nonobtuse`` defaults off.  On essentially planar terrain a
    large share of Delaunay triangles is obtuse no matter how points
    arrive, so at the densification fixpoint every obtuse angle pins some
    candidate whose insertion would re-create it; enforcing the shape
    constraint on every insertion therefore strands a double-digit
    percentage of true ground points.  Turn it on for scenes where sliver
    control matters more than recall.
    """

    initial_cell: float = 40.0
    min_cell: float = 2.0
    dist_thresh: float = 0.3
    angle_thresh: float = 8.0
    normal_limit: float = 90.0
    enable_nonobtuse: bool = False
    enable_normal: bool = True
    corner_seed_mode: str = "nearest_seed_z"

    def validate(self):
        if not (self.initial_cell > self.min_cell > 0.0):
            raise ParameterError(
                "FilterParams: need initial_cell > min_cell > 0, got "
                f"initial_cell={self.initial_cell!r} min_cell={self.min_cell!r}")
        if not self.dist_thresh > 0.0:
            raise ParameterError(
                f"FilterParams: dist_thresh must be > 0, got {self.dist_thresh!r}")
        if not 0.0 < self.angle_thresh < 90.0:
            raise ParameterError(
                "FilterParams: angle_thresh must be in (0, 90), got "
                f"{self.angle_thresh!r}")
        if self.normal_limit != 90.0:
            raise ParameterError(
                "FilterParams: normal_limit is fixed at 90 degrees")
        if self.corner_seed_mode not in CORNER_SEED_MODES:
            raise ParameterError(
                f"FilterParams: corner_seed_mode must be one of "
                f"{CORNER_SEED_MODES}, got {self.corner_seed_mode!r}")


@dataclass(frozen=True)
class SeedSet:
    """Per-cell lowest-point indices plus synthesized corner vertices."""

    real: np.ndarray
    virtual: tuple = ()


@dataclass(frozen=True)
class LevelRecord:
    """One pyramid level: grid pitch, candidates offered, and accepted."""

    cell: float
    seeds_added: int
    accepted: int


@dataclass
class GroundResult:
    """Outcome of filter_ground.

    ``ground`` and ``nonground`` partition the input point indices
    (ascending).  ``levels`` records the pyramid (the trailing
    all-remaining-points pass is separate, in ``final_accepted``).
    ``log_points``/``log_triangles`` record, per acceptance in order, the
    cloud point index and the vertex ids of its containing triangle at
    acceptance time, which lets tests replay the constraint checks.
    ``tin`` is the densified model (virtual corners included as vertices).
    """

    ground: np.ndarray
    nonground: np.ndarray
    levels: list
    final_accepted: int
    tin: TIN
    log_points: np.ndarray = field(default=None, repr=False)
    log_triangles: np.ndarray = field(default=None, repr=False)


# -- seed selection ---------------------------------------------------------


def _lowest_per_cell(xyz, indices, anchor_x, anchor_y, cell):
    """Among xyz[indices], the index (into the cloud) of the lowest point
    of every non-empty grid cell; z ties break to the lowest point index."""
    sub = xyz[indices]
    ix = np.floor((sub[:, 0] - anchor_x) / cell).astype(np.int64)
    iy = np.floor((sub[:, 1] - anchor_y) / cell).astype(np.int64)
    order = np.lexsort((indices, sub[:, 2], iy, ix))
    six = ix[order]
    siy = iy[order]
    first = np.ones(order.shape[0], bool)
    first[1:] = (six[1:] != six[:-1]) | (siy[1:] != siy[:-1])
    return np.sort(indices[order[first]])


def select_seeds(cloud, cell):
    """Index of the minimum-z point of every non-empty grid cell.

    The grid is anchored at the cloud's XY minimum with the given pitch;
    z ties go to the lowest point index.
    """
    cell = float(cell)
    if not np.isfinite(cell) or cell <= 0.0:
        raise ParameterError(f"select_seeds: cell must be > 0, got {cell!r}")
    if len(cloud) == 0:
        raise EmptyInputError("select_seeds: empty cloud")
    b = cloud_bounds(cloud)
    real = _lowest_per_cell(cloud.xyz, np.arange(len(cloud), dtype=np.int64),
                            b.min_x, b.min_y, cell)
    return SeedSet(real=real)


def virtual_corner_seeds(bnds, seed_xyz, mode="nearest_seed_z"):
    """Four synthesized vertices at the XY bounding-box corners.

    ``seed_xyz`` is the (k, 3) coordinate array of the real seeds.  The
    corner elevation either copies the nearest seed's z (ties to the lowest
    seed position) or inverse-distance-weights the three nearest seeds with
    power 2; a corner coinciding with a seed takes that seed's z exactly.
    Corners are ordered counterclockwise from (min_x, min_y).
    """
    if mode not in CORNER_SEED_MODES:
        raise ParameterError(
            f"virtual_corner_seeds: unknown mode {mode!r}")
    seed_xyz = np.asarray(seed_xyz, np.float64)
    if seed_xyz.ndim != 2 or seed_xyz.shape[1] != 3 or seed_xyz.shape[0] == 0:
        raise EmptyInputError("virtual_corner_seeds: need at least one seed")
    corners_xy = ((bnds.min_x, bnds.min_y), (bnds.max_x, bnds.min_y),
                  (bnds.max_x, bnds.max_y), (bnds.min_x, bnds.max_y))
    out = []
    for cx, cy in corners_xy:
        d2 = (seed_xyz[:, 0] - cx) ** 2 + (seed_xyz[:, 1] - cy) ** 2
        if mode == "nearest_seed_z":
            k = int(np.lexsort((np.arange(len(d2)), d2))[0])
            z = float(seed_xyz[k, 2])
        else:
            k = min(3, d2.shape[0])
            nearest = np.lexsort((np.arange(len(d2)), d2))[:k]
            nd2 = d2[nearest]
            if nd2[0] == 0.0:
                z = float(seed_xyz[nearest[0], 2])
            else:
                w = 1.0 / nd2
                z = float(np.dot(w, seed_xyz[nearest, 2]) / np.sum(w))
        out.append(Vertex(float(cx), float(cy), z, VIRTUAL))
    return tuple(out)


# -- acceptance constraints ---------------------------------------------------


@njit(cache=True, inline="always")
def _dot3(ax, ay, az, bx, by, bz):
    return ax * bx + ay * by + az * bz


@njit(cache=True)
def _nonobtuse3(ax, ay, az, bx, by, bz, cx, cy, cz):
    """All interior angles of triangle (a, b, c) at most 90 degrees,
    per unnormalized edge-vector dot products with a -1e-12 slack."""
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    bcx, bcy, bcz = cx - bx, cy - by, cz - bz
    if _dot3(abx, aby, abz, acx, acy, acz) < -_EPS_DOT:
        return False
    if _dot3(-abx, -aby, -abz, bcx, bcy, bcz) < -_EPS_DOT:
        return False
    if _dot3(-acx, -acy, -acz, -bcx, -bcy, -bcz) < -_EPS_DOT:
        return False
    return True


@njit(cache=True)
def _normal_dot(n1x, n1y, n1z, n2x, n2y, n2z):
    """Dot product of the two normals after unit normalization; -2.0
    signals a zero-length input."""
    m1 = math.sqrt(n1x * n1x + n1y * n1y + n1z * n1z)
    m2 = math.sqrt(n2x * n2x + n2y * n2y + n2z * n2z)
    if m1 == 0.0 or m2 == 0.0:
        return -2.0
    return (n1x * n2x + n1y * n2y + n1z * n2z) / (m1 * m2)


def nonobtuse_ok(a, b, c):
    """True when no interior angle of triangle (a, b, c) is obtuse.

    Vertices are any objects with x/y/z attributes or 3-sequences.  Right
    angles pass (the densification constraint forbids obtuse only);
    degenerate triangles raise.
    """
    (ax, ay, az), (bx, by, bz), (cx, cy, cz) = (_coords(v) for v in (a, b, c))
    ux, uy, uz = bx - ax, by - ay, bz - az
    vx, vy, vz = cx - ax, cy - ay, cz - az
    nx = uy * vz - uz * vy
    ny = uz * vx - ux * vz
    nz = ux * vy - uy * vx
    if 0.5 * math.sqrt(nx * nx + ny * ny + nz * nz) <= 1e-12:
        raise DegenerateInputError("nonobtuse_ok: degenerate triangle")
    return bool(_nonobtuse3(ax, ay, az, bx, by, bz, cx, cy, cz))


def normal_ok(existing_normal, new_normal):
    """True when the angle between the two (upward) normals is under 90°."""
    n1 = np.asarray(existing_normal, np.float64)
    n2 = np.asarray(new_normal, np.float64)
    d = _normal_dot(n1[0], n1[1], n1[2], n2[0], n2[1], n2[2])
    if d == -2.0:
        raise DegenerateInputError("normal_ok: zero-length normal")
    return bool(d > _EPS_DOT)


def _coords(v):
    if hasattr(v, "x"):
        return float(v.x), float(v.y), float(v.z)
    x, y, z = v
    return float(x), float(y), float(z)


# -- densification kernel -----------------------------------------------------


@njit(cache=True)
def _eval_candidate(px, py, pz, tv, t, qx, qy, qz,
                    dist_thresh, tan_ang, use_obt, use_nrm):
    """Threshold and constraint checks for one candidate against its
    containing triangle.  Returns 1 to accept, 0 to reject."""
    a = tv[t, 0]
    b = tv[t, 1]
    c = tv[t, 2]
    ax, ay, az = px[a], py[a], pz[a]
    bx, by, bz = px[b], py[b], pz[b]
    cx, cy, cz = px[c], py[c], pz[c]
    e1x, e1y, e1z = bx - ax, by - ay, bz - az
    e2x, e2y, e2z = cx - ax, cy - ay, cz - az
    nx = e1y * e2z - e1z * e2y
    ny = e1z * e2x - e1x * e2z
    nz = e1x * e2y - e1y * e2x
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    if nn * 0.5 <= 1e-12:
        return 0
    nhx, nhy, nhz = nx / nn, ny / nn, nz / nn
    d = _dot3(qx - ax, qy - ay, qz - az, nhx, nhy, nhz)
    ad = abs(d)
    if ad > dist_thresh:
        return 0
    # iteration angle: largest over the three vertices of the angle between
    # the plane and the segment vertex->candidate; the perpendicular leg is
    # the same |d| for all three, so only the shortest in-plane leg matters
    hmin = 1e300
    for k in range(3):
        v = tv[t, k]
        wx = qx - px[v]
        wy = qy - py[v]
        wz = qz - pz[v]
        ix = wx - d * nhx
        iy = wy - d * nhy
        iz = wz - d * nhz
        h = math.sqrt(ix * ix + iy * iy + iz * iz)
        if h < hmin:
            hmin = h
    if ad > tan_ang * hmin:
        return 0
    if use_obt or use_nrm:
        for k in range(3):
            va = tv[t, k]
            vb = tv[t, (k + 1) % 3]
            vax, vay, vaz = px[va], py[va], pz[va]
            vbx, vby, vbz = px[vb], py[vb], pz[vb]
            # a sub-triangle with zero XY area would not exist after an
            # on-edge insertion; it is not checked
            xy_area2 = (vbx - vax) * (qy - vay) - (qx - vax) * (vby - vay)
            if xy_area2 == 0.0:
                continue
            if use_obt:
                # only the two base angles are constrained: the apex
                # angles of the three sub-triangles share the full turn
                # around the candidate, so one of them always exceeds 90
                # degrees and checking them would veto every insertion
                d_a = _dot3(vbx - vax, vby - vay, vbz - vaz,
                            qx - vax, qy - vay, qz - vaz)
                d_b = _dot3(vax - vbx, vay - vby, vaz - vbz,
                            qx - vbx, qy - vby, qz - vbz)
                if d_a < -_EPS_DOT or d_b < -_EPS_DOT:
                    return 0
            if use_nrm:
                sx = (vby - vay) * (qz - vaz) - (vbz - vaz) * (qy - vay)
                sy = (vbz - vaz) * (qx - vax) - (vbx - vax) * (qz - vaz)
                sz = (vbx - vax) * (qy - vay) - (vby - vay) * (qx - vax)
                dd = _normal_dot(nx, ny, nz, sx, sy, sz)
                if not dd > _EPS_DOT:
                    return 0
    return 1


@njit(cache=True)
def _densify_kernel(px, py, pz, vsrc, tv, tn, counts, free, svis, scav,
                    wk_stack, wk_cav, wk_bva, wk_bvb, wk_bout, wk_new,
                    cx, cy, cz, csrc, taken, ltri, order_buf, cursor,
                    dist_thresh, tan_ang, use_obt, use_nrm,
                    start_i, changed0):
    """Densification passes; resumable when triangle storage fills up.

    Returns (status, resume_i, resume_changed, accepted_this_call).
    """
    m = cx.shape[0]
    changed = changed0
    i = start_i
    naccepted = 0
    hint = counts[engine.C_LAST]
    while True:
        if i >= m:
            if not changed:
                return engine.OK, 0, 0, naccepted
            changed = 0
            i = 0
            continue
        if taken[i]:
            i += 1
            continue
        alive = counts[engine.C_FIN] + counts[engine.C_GHO]
        spare = (tv.shape[0] - counts[engine.C_TOP]) + counts[engine.C_NFREE]
        if spare < alive + 4:
            return engine.NEED_GROW, i, changed, naccepted
        qx = cx[i]
        qy = cy[i]
        qz = cz[i]
        t, flag = engine._locate(px, py, tv, tn, counts, qx, qy, hint)
        if flag != 0:
            # outside the hull (virtual corners normally preclude this);
            # such a candidate can never be accepted
            i += 1
            continue
        hint = t
        dup = -1
        for k in range(3):
            v = tv[t, k]
            if px[v] == qx and py[v] == qy:
                dup = v
                break
        if dup >= 0:
            # same XY as an existing vertex: insertion is impossible, but a
            # coincident 3D point is ground by any reading (distance and
            # angle both zero); a different z fails the angle check forever
            if pz[dup] == qz:
                taken[i] = True
                ltri[i, 0] = tv[t, 0]
                ltri[i, 1] = tv[t, 1]
                ltri[i, 2] = tv[t, 2]
                order_buf[cursor[0]] = i
                cursor[0] += 1
                naccepted += 1
                changed = 1
            i += 1
            continue
        if _eval_candidate(px, py, pz, tv, t, qx, qy, qz,
                           dist_thresh, tan_ang, use_obt, use_nrm) == 0:
            i += 1
            continue
        vid = counts[engine.C_NV]
        px[vid] = qx
        py[vid] = qy
        pz[vid] = qz
        vsrc[vid] = csrc[i]
        la = tv[t, 0]
        lb = tv[t, 1]
        lc = tv[t, 2]
        status, info = engine._insert_point(
            px, py, tv, tn, counts, free, svis, scav,
            wk_stack, wk_cav, wk_bva, wk_bvb, wk_bout, wk_new,
            qx, qy, vid, t)
        if status == engine.NEED_GROW:
            return engine.NEED_GROW, i, changed, naccepted
        if status == engine.DUPLICATE:
            i += 1
            continue
        if status != engine.OK:
            return status, i, changed, naccepted
        counts[engine.C_NV] = vid + 1
        taken[i] = True
        ltri[i, 0] = la
        ltri[i, 1] = lb
        ltri[i, 2] = lc
        order_buf[cursor[0]] = i
        cursor[0] += 1
        naccepted += 1
        changed = 1
        hint = counts[engine.C_LAST]
        i += 1


def _run_densify(tin, cand_xyz, cand_src, params):
    """Drive the kernel over one candidate batch; returns (accepted
    positions in acceptance order, per-candidate containing-triangle log)."""
    m = cand_xyz.shape[0]
    taken = np.zeros(m, np.bool_)
    ltri = np.full((m, 3), -1, np.int32)
    order_buf = np.empty(m, np.int64)
    cursor = np.zeros(1, np.int64)
    if m == 0:
        return np.empty(0, np.int64), ltri
    tin._grow_verts(tin.n_vertices + m + 8)
    cx = np.ascontiguousarray(cand_xyz[:, 0])
    cy = np.ascontiguousarray(cand_xyz[:, 1])
    cz = np.ascontiguousarray(cand_xyz[:, 2])
    tan_ang = math.tan(math.radians(params.angle_thresh))
    i = 0
    changed = 0
    while True:
        status, i, changed, _ = _densify_kernel(
            tin._px, tin._py, tin._pz, tin._vsrc, tin._tv, tin._tn,
            tin._counts, tin._free, tin._svis, tin._scav,
            tin._wk_stack, tin._wk_cav, tin._wk_bva, tin._wk_bvb,
            tin._wk_bout, tin._wk_new,
            cx, cy, cz, cand_src, taken, ltri, order_buf, cursor,
            float(params.dist_thresh), tan_ang,
            params.enable_nonobtuse, params.enable_normal,
            i, changed)
        if status == engine.NEED_GROW:
            tin._grow_tris()
            continue
        if status != engine.OK:
            raise DegenerateInputError("densify: mesh invariant failure")
        break
    return order_buf[:int(cursor[0])].copy(), ltri


def densify_level(tin, candidates, params, origins=None):
    """Offer candidate points to the TIN until a full pass accepts none.

    ``candidates`` is an (m, 3) float array; ``origins`` optionally tags
    accepted vertices with source point indices.  Accepted candidates are
    inserted immediately (mutating ``tin``); returns the accepted positions
    into ``candidates`` in acceptance order.  Candidates outside the hull
    are never accepted.
    """
    params.validate()
    cand = np.asarray(candidates, np.float64)
    if cand.ndim != 2 or cand.shape[1] != 3:
        raise ParameterError("densify_level: candidates must be (m, 3)")
    if not np.all(np.isfinite(cand)):
        raise ParameterError("densify_level: non-finite candidate")
    if origins is None:
        src = np.full(cand.shape[0], VIRTUAL, np.int32)
    else:
        src = np.asarray(origins, np.int32)
        if src.shape != (cand.shape[0],):
            raise ParameterError(
                "densify_level: origins must match candidates")
    accepted, _ = _run_densify(tin, cand, src, params)
    return accepted


# -- pyramid driver -----------------------------------------------------------


def _spatial_order(xyz, indices, anchor_x, anchor_y, cell):
    """Candidate offering order: row-major over a fine grid, then by
    index; keeps the locate hint warm and is deterministic."""
    sub = xyz[indices]
    ix = np.floor((sub[:, 0] - anchor_x) / cell).astype(np.int64)
    iy = np.floor((sub[:, 1] - anchor_y) / cell).astype(np.int64)
    return indices[np.lexsort((indices, ix, iy))]


def filter_ground(cloud, params=None):
    """Classify a cleaned cloud into ground and non-ground points.

    Builds the seed TIN from the coarsest grid's per-cell lowest points
    plus four virtual corner vertices, then walks the pyramid: each level
    halves the cell (stopping before it would drop under ``min_cell``),
    offers the per-cell lowest unclassified points, and densifies until a
    full pass accepts nothing.  A final pass offers every remaining
    unclassified point.  Ground = seeds + all accepted points; the virtual
    corners never appear in the output.
    """
    if params is None:
        params = FilterParams()
    params.validate()
    if len(cloud) == 0:
        raise EmptyInputError("filter_ground: empty cloud")
    n = len(cloud)
    xyz = cloud.xyz
    b = cloud_bounds(cloud)

    seeds = select_seeds(cloud, params.initial_cell)
    if seeds.real.shape[0] < 3:
        raise DegenerateInputError(
            f"filter_ground: only {seeds.real.shape[0]} seeds; "
            "need at least 3")
    corners = virtual_corner_seeds(b, xyz[seeds.real],
                                   params.corner_seed_mode)

    ground = np.zeros(n, np.bool_)
    ground[seeds.real] = True

    seed_pts = [tuple(xyz[i]) for i in seeds.real]
    seed_org = list(seeds.real)
    used_xy = {(p[0], p[1]) for p in seed_pts}
    for v in corners:
        # a corner landing exactly on a seed's XY is already anchored by
        # the real point
        if (v.x, v.y) in used_xy:
            continue
        used_xy.add((v.x, v.y))
        seed_pts.append((v.x, v.y, v.z))
        seed_org.append(VIRTUAL)
    tin = delaunay_triangulate(np.array(seed_pts, np.float64),
                               np.array(seed_org, np.int64))

    levels = [LevelRecord(cell=float(params.initial_cell),
                          seeds_added=int(seeds.real.shape[0]), accepted=0)]
    log_pts = []
    log_tris = []

    def offer(indices, cell_for_order):
        if indices.shape[0] == 0:
            return 0
        ordered = _spatial_order(xyz, indices, b.min_x, b.min_y,
                                 cell_for_order)
        acc, ltri = _run_densify(tin, xyz[ordered],
                                 ordered.astype(np.int32), params)
        acc_idx = ordered[acc]
        ground[acc_idx] = True
        log_pts.append(acc_idx)
        log_tris.append(ltri[acc])
        return int(acc.shape[0])

    cell = params.initial_cell / 2.0
    while cell >= params.min_cell:
        unclassified = np.nonzero(~ground)[0]
        cand = _lowest_per_cell(xyz, unclassified, b.min_x, b.min_y, cell)
        accepted = offer(cand, cell)
        levels.append(LevelRecord(cell=float(cell),
                                  seeds_added=int(cand.shape[0]),
                                  accepted=accepted))
        cell /= 2.0

    remaining = np.nonzero(~ground)[0]
    final_accepted = offer(remaining, max(params.min_cell, 1.0))

    ground_idx = np.nonzero(ground)[0]
    nonground_idx = np.nonzero(~ground)[0]
    if log_pts:
        lp = np.concatenate(log_pts)
        lt = np.vstack(log_tris)
    else:
        lp = np.empty(0, np.int64)
        lt = np.empty((0, 3), np.int32)
    return GroundResult(ground=ground_idx, nonground=nonground_idx,
                        levels=levels, final_accepted=final_accepted,
                        tin=tin, log_points=lp, log_triangles=lt)


# -- label I/O ----------------------------------------------------------------


def make_labels(n_points, outlier_indices, ground_indices_original):
    """Per-point labels over the ORIGINAL cloud indexing."""
    labels = np.full(n_points, LABEL_NONGROUND, np.int8)
    labels[np.asarray(outlier_indices, np.int64)] = LABEL_OUTLIER
    labels[np.asarray(ground_indices_original, np.int64)] = LABEL_GROUND
    return labels


def write_labels(path, labels):
    """Write `index label` lines, label in {ground, nonground, outlier}."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for i, lab in enumerate(labels):
            fh.write(f"{i} {_LABEL_NAMES[int(lab)]}\n")


def read_labels(path):
    """Inverse of write_labels; returns the int8 label array."""
    names = {v: k for k, v in _LABEL_NAMES.items()}
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            idx, name = line.split()
            rows.append((int(idx), names[name]))
    labels = np.empty(len(rows), np.int8)
    for idx, lab in rows:
        labels[idx] = lab
    return labels
