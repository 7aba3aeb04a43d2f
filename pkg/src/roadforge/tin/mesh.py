"""2.5D triangulated irregular network (TIN) on top of the flat-array kernel.

Vertices live in 3D but all triangulation decisions happen on their XY
projection; z rides along for plane metrics and DEM sampling.  Triangle ids
returned by :meth:`TIN.locate` index internal storage rows and stay valid
until the next insertion.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import (
    DegenerateInputError,
    DuplicateVertexError,
    EmptyInputError,
    LocationError,
    ParameterError,
)
from . import engine
from .engine import C_FIN, C_GHO, C_LAST, C_NV, C_TOP, DEAD, GHOST

VIRTUAL = -1

_EPS_AREA = 1e-12


@dataclass(frozen=True)
class Vertex:
    """A TIN vertex: planimetric position, elevation, and provenance.

    ``origin`` is the index of the source cloud point, or VIRTUAL (-1) for
    synthesized vertices such as grid-corner seeds.
    """

    x: float
    y: float
    z: float
    origin: int = VIRTUAL


class TIN:
    """Mutable Delaunay TIN with incremental insertion.

    Build one with :func:`delaunay_triangulate`.  The mesh keeps the
    empty-circumcircle property under every insertion; exactly cocircular
    point groups are triangulated canonically (the diagonal kept is the one
    whose smaller endpoint index is smallest), so a vertex set in general or
    degenerate position triangulates the same way regardless of insertion
    order.
    """

    def __init__(self, vcap=8, tcap=32):
        vcap = max(int(vcap), 8)
        tcap = max(int(tcap), 32)
        self._px = np.empty(vcap, np.float64)
        self._py = np.empty(vcap, np.float64)
        self._pz = np.empty(vcap, np.float64)
        self._vsrc = np.empty(vcap, np.int32)
        self._tv = np.empty((tcap, 3), np.int32)
        self._tn = np.empty((tcap, 3), np.int32)
        self._counts = np.zeros(8, np.int64)
        self._free = np.empty(tcap, np.int32)
        self._svis = np.zeros(tcap, np.int64)
        self._scav = np.zeros(tcap, np.int64)
        self._alloc_workspace()

    # -- capacity ---------------------------------------------------------

    def _alloc_workspace(self):
        n = max(self._tv.shape[0] + 8, 4096)
        self._wk_stack = np.empty(n, np.int32)
        self._wk_cav = np.empty(n, np.int32)
        self._wk_bva = np.empty(n, np.int32)
        self._wk_bvb = np.empty(n, np.int32)
        self._wk_bout = np.empty(n, np.int32)
        self._wk_new = np.empty(n, np.int32)

    def _grow_verts(self, need):
        cap = self._px.shape[0]
        while cap < need:
            cap *= 2
        if cap == self._px.shape[0]:
            return
        for name in ("_px", "_py", "_pz", "_vsrc"):
            old = getattr(self, name)
            new = np.empty(cap, old.dtype)
            new[:old.shape[0]] = old
            setattr(self, name, new)

    def _grow_tris(self):
        cap = self._tv.shape[0] * 2
        for name in ("_tv", "_tn"):
            old = getattr(self, name)
            new = np.empty((cap, 3), np.int32)
            new[:old.shape[0]] = old
            setattr(self, name, new)
        free = np.empty(cap, np.int32)
        free[:self._free.shape[0]] = self._free
        self._free = free
        for name in ("_svis", "_scav"):
            old = getattr(self, name)
            new = np.zeros(cap, np.int64)
            new[:old.shape[0]] = old
            setattr(self, name, new)
        self._alloc_workspace()

    # -- introspection ----------------------------------------------------

    @property
    def n_vertices(self):
        return int(self._counts[C_NV])

    @property
    def n_triangles(self):
        return int(self._counts[C_FIN])

    @property
    def hull_size(self):
        """Number of convex-hull edges (== hull vertices)."""
        return int(self._counts[C_GHO])

    def vertex(self, i):
        if not 0 <= i < self.n_vertices:
            raise ParameterError(f"vertex index {i} out of range")
        return Vertex(float(self._px[i]), float(self._py[i]),
                      float(self._pz[i]), int(self._vsrc[i]))

    @property
    def points(self):
        """Vertex coordinates as an (n, 3) float64 array (copy)."""
        n = self.n_vertices
        out = np.empty((n, 3), np.float64)
        out[:, 0] = self._px[:n]
        out[:, 1] = self._py[:n]
        out[:, 2] = self._pz[:n]
        return out

    @property
    def origins(self):
        """Per-vertex source point index (VIRTUAL for synthesized)."""
        return self._vsrc[:self.n_vertices].copy()

    def triangle_ids(self):
        """Ids of the alive finite triangles, ascending."""
        top = int(self._counts[C_TOP])
        tv = self._tv[:top]
        mask = (tv[:, 0] != DEAD) & (tv[:, 2] != GHOST)
        return np.nonzero(mask)[0].astype(np.int32)

    def triangles(self):
        """Vertex index triples of all finite triangles, (T, 3) int32."""
        return self._tv[self.triangle_ids()].copy()

    def triangle_vertices(self, t):
        """Vertex index triple of finite triangle ``t``."""
        self._check_tri(t)
        return (int(self._tv[t, 0]), int(self._tv[t, 1]), int(self._tv[t, 2]))

    def neighbor(self, t, i):
        """Triangle across the edge opposite local vertex ``i``, or -1
        when that neighbor is a ghost (hull edge)."""
        self._check_tri(t)
        n = int(self._tn[t, i])
        return -1 if self._tv[n, 2] == GHOST else n

    def _check_tri(self, t):
        top = int(self._counts[C_TOP])
        if not 0 <= t < top or self._tv[t, 0] == DEAD:
            raise ParameterError(f"no such triangle: {t}")
        if self._tv[t, 2] == GHOST:
            raise ParameterError(f"triangle {t} is not finite")

    # -- queries ----------------------------------------------------------

    def locate(self, x, y):
        """Id of the finite triangle containing (x, y).

        On an edge or vertex several triangles contain the point; the one
        with the smallest id is returned.  Strictly outside the hull raises
        LocationError.
        """
        x = float(x)
        y = float(y)
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ParameterError("locate: coordinates must be finite")
        if self._counts[C_FIN] == 0:
            raise EmptyInputError("locate on an empty TIN")
        t, flag = engine._locate(self._px, self._py, self._tv, self._tn,
                                 self._counts, x, y, self._counts[C_LAST])
        if flag != 0:
            raise LocationError(f"point ({x:g}, {y:g}) is outside the hull")
        # collect every containing triangle in the neighborhood and pick the
        # smallest id, so ties on shared edges/vertices are deterministic
        best = t
        seen = {int(t)}
        stack = [int(t)]
        while stack:
            cur = stack.pop()
            for i in range(3):
                n = int(self._tn[cur, i])
                if n in seen or self._tv[n, 2] == GHOST:
                    continue
                seen.add(n)
                if self._contains(n, x, y):
                    if n < best:
                        best = n
                    stack.append(n)
        return int(best)

    def _contains(self, t, x, y):
        tv = self._tv
        px = self._px
        py = self._py
        for i in range(3):
            a = tv[t, i]
            b = tv[t, (i + 1) % 3]
            if engine.orient2d(px[a], py[a], px[b], py[b], x, y) < 0.0:
                return False
        return True

    def _plane(self, t):
        a, b, c = self._tv[t]
        p0 = np.array([self._px[a], self._py[a], self._pz[a]])
        e1 = np.array([self._px[b] - p0[0], self._py[b] - p0[1],
                       self._pz[b] - p0[2]])
        e2 = np.array([self._px[c] - p0[0], self._py[c] - p0[1],
                       self._pz[c] - p0[2]])
        nrm = np.cross(e1, e2)
        return p0, nrm

    def vertical_distance(self, t, point):
        """Unsigned distance from ``point`` to the supporting plane of
        finite triangle ``t``."""
        self._check_tri(t)
        p = np.asarray(point, np.float64)
        p0, nrm = self._plane(t)
        area2 = float(np.hypot(nrm[0], np.hypot(nrm[1], nrm[2])))
        if area2 * 0.5 <= _EPS_AREA:
            raise DegenerateInputError(
                f"triangle {t} is degenerate (area below cutoff)")
        return float(abs(np.dot(p - p0, nrm)) / area2)

    def vertex_angle(self, t, point):
        """Largest angle, in degrees, between the plane of triangle ``t``
        and the segments joining its vertices to ``point``.

        This is the iteration angle of progressive densification: small
        when the candidate sits close to the plane relative to its
        horizontal offset from the nearest vertex.
        """
        self._check_tri(t)
        p = np.asarray(point, np.float64)
        p0, nrm = self._plane(t)
        area2 = float(np.linalg.norm(nrm))
        if area2 * 0.5 <= _EPS_AREA:
            raise DegenerateInputError(
                f"triangle {t} is degenerate (area below cutoff)")
        n_hat = nrm / area2
        d_perp = float(np.dot(p - p0, n_hat))
        best = 0.0
        for v in self._tv[t]:
            vtx = np.array([self._px[v], self._py[v], self._pz[v]])
            if np.array_equal(vtx, p):
                raise DegenerateInputError(
                    "vertex_angle: point coincides with a triangle vertex")
            w = p - vtx
            w_perp = float(np.dot(w, n_hat))
            w_in = w - w_perp * n_hat
            ang = np.degrees(np.arctan2(abs(w_perp), np.linalg.norm(w_in)))
            if ang > best:
                best = ang
        return float(best)

    # -- mutation ---------------------------------------------------------

    def insert_vertex(self, vertex):
        """Insert one vertex (inside or on the hull) and return its index.

        Accepts a Vertex or an (x, y, z) triple.  Raises LocationError
        outside the hull and DuplicateVertexError on an XY already present.
        """
        if isinstance(vertex, Vertex):
            x, y, z, origin = vertex.x, vertex.y, vertex.z, vertex.origin
        else:
            x, y, z = (float(v) for v in vertex)
            origin = VIRTUAL
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
            raise ParameterError("insert_vertex: coordinates must be finite")
        t, flag = engine._locate(self._px, self._py, self._tv, self._tn,
                                 self._counts, x, y, self._counts[C_LAST])
        if flag != 0:
            raise LocationError(
                f"insert_vertex: ({x:g}, {y:g}) is outside the hull")
        vid = self.n_vertices
        self._grow_verts(vid + 1)
        self._px[vid] = x
        self._py[vid] = y
        self._pz[vid] = z
        self._vsrc[vid] = origin
        while True:
            status, info = engine._insert_point(
                self._px, self._py, self._tv, self._tn, self._counts,
                self._free, self._svis, self._scav,
                self._wk_stack, self._wk_cav, self._wk_bva, self._wk_bvb,
                self._wk_bout, self._wk_new, x, y, vid, t)
            if status == engine.NEED_GROW:
                self._grow_tris()
                continue
            break
        if status == engine.DUPLICATE:
            raise DuplicateVertexError(
                f"insert_vertex: ({x:g}, {y:g}) duplicates vertex {info}")
        if status != engine.OK:
            raise LocationError("insert_vertex: mesh invariant failure")
        self._counts[C_NV] = vid + 1
        return vid

    # -- integrity audit --------------------------------------------------

    def validate(self):
        """Audit structural invariants; raises AssertionError on breakage.

        Checks CCW orientation and positive area of every finite triangle,
        two-way adjacency consistency, the ghost ring, and the Euler count
        T = 2n - 2 - h.  Intended for tests and debugging; not needed in
        normal operation.
        """
        top = int(self._counts[C_TOP])
        nfin = 0
        ngho = 0
        for t in range(top):
            if self._tv[t, 0] == DEAD:
                continue
            a, b, c = (int(v) for v in self._tv[t])
            if c == GHOST:
                ngho += 1
            else:
                nfin += 1
                s = engine.orient2d(self._px[a], self._py[a],
                                    self._px[b], self._py[b],
                                    self._px[c], self._py[c])
                assert s > 0.0, f"triangle {t} not CCW"
            for i in range(3):
                n = int(self._tn[t, i])
                assert 0 <= n < top and self._tv[n, 0] != DEAD, \
                    f"triangle {t} edge {i}: dead neighbor"
                va = self._tv[t, (i + 1) % 3]
                vb = self._tv[t, (i + 2) % 3]
                j = engine._local_edge(self._tv, n, va, vb)
                assert j >= 0, f"adjacency asymmetry at {t}/{n}"
                assert self._tn[n, j] == t, f"adjacency asymmetry at {t}/{n}"
        assert nfin == int(self._counts[C_FIN])
        assert ngho == int(self._counts[C_GHO])
        n = self.n_vertices
        if nfin:
            assert nfin == 2 * n - 2 - ngho, \
                f"Euler count broken: T={nfin} n={n} h={ngho}"


def delaunay_triangulate(points, origins=None):
    """Delaunay-triangulate an (n, 3) array of XYZ points into a TIN.

    ``origins`` optionally tags each vertex with a source point index.
    Needs at least 3 points, not all XY-collinear, with pairwise distinct
    XY; violations raise DegenerateInputError / DuplicateVertexError.
    """
    pts = np.asarray(points, np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ParameterError("delaunay_triangulate: expected an (n, 3) array")
    n = pts.shape[0]
    if n == 0:
        raise EmptyInputError("delaunay_triangulate: no points")
    if n < 3:
        raise DegenerateInputError(
            f"delaunay_triangulate: need at least 3 points, got {n}")
    if not np.all(np.isfinite(pts)):
        raise ParameterError("delaunay_triangulate: non-finite coordinates")

    order = np.lexsort((pts[:, 1], pts[:, 0]))
    same = (pts[order[1:], 0] == pts[order[:-1], 0]) & \
           (pts[order[1:], 1] == pts[order[:-1], 1])
    if np.any(same):
        k = int(np.nonzero(same)[0][0])
        i, j = sorted((int(order[k]), int(order[k + 1])))
        raise DuplicateVertexError(
            f"points {i} and {j} share XY ({pts[i, 0]:g}, {pts[i, 1]:g})")

    tin = TIN(vcap=n + 8, tcap=max(4 * n, 64))
    tin._px[:n] = pts[:, 0]
    tin._py[:n] = pts[:, 1]
    tin._pz[:n] = pts[:, 2]
    if origins is None:
        tin._vsrc[:n] = VIRTUAL
    else:
        org = np.asarray(origins, np.int32)
        if org.shape != (n,):
            raise ParameterError("origins must have one entry per point")
        tin._vsrc[:n] = org

    resume = 0
    third = -1
    while True:
        status, resume, third = engine._build(
            tin._px, tin._py, tin._tv, tin._tn, tin._counts, tin._free,
            tin._svis, tin._scav, tin._wk_stack, tin._wk_cav, tin._wk_bva,
            tin._wk_bvb, tin._wk_bout, tin._wk_new, n, resume, third)
        if status == engine.NEED_GROW:
            tin._grow_tris()
            continue
        break
    if status == engine.DEGENERATE:
        raise DegenerateInputError(
            "delaunay_triangulate: all points are collinear")
    if status != engine.OK:
        raise DegenerateInputError(
            "delaunay_triangulate: triangulation failed")
    return tin
