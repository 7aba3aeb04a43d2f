"""Delaunay TIN kernel: construction, queries, insertion, integrity.

The Delaunay property is checked against the defining criterion (no vertex
strictly inside any triangle's circumcircle) using the exact incircle
predicate, which never depends on how the mesh was built.
"""

import numpy as np
import pytest

from roadforge.errors import (
    DegenerateInputError,
    DuplicateVertexError,
    EmptyInputError,
    LocationError,
    ParameterError,
)
from roadforge.tin import TIN, Vertex, delaunay_triangulate, incircle, orient2d


def _tri_set(tin):
    """Triangles as a set of sorted vertex-id tuples."""
    return {tuple(sorted(t)) for t in tin.triangles()}


def assert_delaunay(tin):
    """Brute-force empty-circumcircle check over every (triangle, vertex)."""
    pts = tin.points
    for (a, b, c) in tin.triangles():
        ax, ay = pts[a, 0], pts[a, 1]
        bx, by = pts[b, 0], pts[b, 1]
        cx, cy = pts[c, 0], pts[c, 1]
        for d in range(len(pts)):
            if d in (a, b, c):
                continue
            assert incircle(ax, ay, bx, by, cx, cy,
                            pts[d, 0], pts[d, 1]) <= 0.0, \
                f"vertex {d} inside circumcircle of ({a},{b},{c})"


def _random_tin(rng, n, span=100.0):
    pts = np.column_stack([rng.uniform(0, span, (n, 2)),
                           rng.uniform(-5, 5, n)])
    return pts, delaunay_triangulate(pts)


# -- construction -------------------------------------------------------------


def test_three_points_single_triangle():
    tin = delaunay_triangulate(np.array([[0.0, 0, 0], [4, 0, 0], [0, 3, 0]]))
    assert tin.n_triangles == 1
    assert tin.n_vertices == 3
    assert tin.hull_size == 3
    assert _tri_set(tin) == {(0, 1, 2)}
    tin.validate()


def test_unit_square_tie_break():
    # all four corners are cocircular; the canonical diagonal is the one
    # whose smaller endpoint index is smallest, here 0-2
    pts = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    tin = delaunay_triangulate(pts)
    assert tin.n_triangles == 2
    assert _tri_set(tin) == {(0, 1, 2), (0, 2, 3)}
    # relabeling the corners moves the canonical diagonal with the labels
    for perm in ([1, 3, 0, 2], [2, 0, 3, 1], [3, 2, 1, 0]):
        t2 = delaunay_triangulate(pts[perm])
        newid = {orig: j for j, orig in enumerate(perm)}
        d02 = sorted((newid[0], newid[2]))      # the two geometric
        d13 = sorted((newid[1], newid[3]))      # diagonals, in new ids
        keep = d02 if min(d02) < min(d13) else d13
        rest = sorted(set(range(4)) - set(keep))
        expect = {tuple(sorted(keep + [rest[0]])),
                  tuple(sorted(keep + [rest[1]]))}
        assert _tri_set(t2) == expect


def test_random_sets_are_delaunay():
    rng = np.random.default_rng(123)
    for n in (10, 25, 50):
        pts, tin = _random_tin(rng, n)
        tin.validate()
        assert_delaunay(tin)
        assert tin.n_vertices == n
        assert tin.n_triangles == 2 * n - 2 - tin.hull_size


def test_cocircular_grid():
    # a regular grid is packed with cocircular quadruples
    xs, ys = np.meshgrid(np.arange(5.0), np.arange(5.0))
    pts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(25)])
    tin = delaunay_triangulate(pts)
    tin.validate()
    assert_delaunay(tin)
    assert tin.n_triangles == 2 * 25 - 2 - tin.hull_size
    assert tin.hull_size == 16


def test_degenerate_inputs():
    with pytest.raises(EmptyInputError):
        delaunay_triangulate(np.zeros((0, 3)))
    with pytest.raises(DegenerateInputError):
        delaunay_triangulate(np.array([[0.0, 0, 0], [1, 1, 0]]))
    with pytest.raises(DegenerateInputError):
        delaunay_triangulate(np.array([[0.0, 0, 0], [1, 1, 0], [2, 2, 0],
                                       [3, 3, 0]]))
    with pytest.raises(DuplicateVertexError) as exc:
        delaunay_triangulate(np.array([[0.0, 0, 0], [1, 0, 5], [0, 1, 0],
                                       [1, 0, 9]]))
    assert "1" in str(exc.value) and "3" in str(exc.value)
    with pytest.raises(ParameterError):
        delaunay_triangulate(np.array([[0.0, 0], [1, 0], [0, 1]]))


def test_z_does_not_affect_connectivity():
    rng = np.random.default_rng(6)
    xy = rng.uniform(0, 10, (30, 2))
    a = delaunay_triangulate(np.column_stack([xy, np.zeros(30)]))
    b = delaunay_triangulate(np.column_stack([xy, rng.uniform(-99, 99, 30)]))
    assert _tri_set(a) == _tri_set(b)


# -- incremental insertion ----------------------------------------------------


def test_insert_centroid_of_triangle():
    tin = delaunay_triangulate(np.array([[0.0, 0, 0], [3, 0, 0], [0, 3, 0]]))
    vid = tin.insert_vertex(Vertex(1.0, 1.0, 0.5))
    assert vid == 3
    assert tin.n_triangles == 3
    tin.validate()
    assert_delaunay(tin)


def test_insert_into_square_mesh():
    pts = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    tin = delaunay_triangulate(pts)
    tin.insert_vertex((0.25, 0.75, 0.0))
    assert tin.n_triangles == 4
    tin.validate()
    assert_delaunay(tin)


def test_insert_on_shared_edge():
    pts = np.array([[0.0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0]])
    tin = delaunay_triangulate(pts)
    tin.insert_vertex((1.0, 1.0, 0.0))   # midpoint of the diagonal
    assert tin.n_vertices == 5
    assert tin.n_triangles == 4
    tin.validate()
    assert_delaunay(tin)


def test_insert_duplicate_xy_raises():
    tin = delaunay_triangulate(np.array([[0.0, 0, 0], [4, 0, 0], [0, 4, 0]]))
    with pytest.raises(DuplicateVertexError):
        tin.insert_vertex((4.0, 0.0, 9.0))
    # mesh unchanged
    assert tin.n_vertices == 3
    assert tin.n_triangles == 1
    tin.validate()


def test_insert_outside_hull_raises():
    tin = delaunay_triangulate(np.array([[0.0, 0, 0], [4, 0, 0], [0, 4, 0]]))
    with pytest.raises(LocationError):
        tin.insert_vertex((10.0, 10.0, 0.0))
    with pytest.raises(ParameterError):
        tin.insert_vertex((np.nan, 0.0, 0.0))


def test_incremental_equals_batch():
    rng = np.random.default_rng(2718)
    for trial in range(6):
        inner = np.column_stack([rng.uniform(1, 9, (40, 2)),
                                 rng.uniform(-1, 1, 40)])
        frame = np.array([[0.0, 0, 0], [10, 0, 0], [10, 10, 0], [0, 10, 0]])
        batch = delaunay_triangulate(np.vstack([frame, inner]))
        inc = delaunay_triangulate(frame)
        for p in inner:
            inc.insert_vertex(tuple(p))
        inc.validate()
        assert _tri_set(inc) == _tri_set(batch)


# -- point location -----------------------------------------------------------


def test_locate_centroid():
    tin = delaunay_triangulate(np.array([[0.0, 0, 0], [3, 0, 0], [0, 3, 0]]))
    t = tin.locate(1.0, 1.0)
    assert set(tin.triangle_vertices(t)) == {0, 1, 2}


def test_locate_edge_and_vertex_ties_are_smallest_id():
    pts = np.array([[0.0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0]])
    tin = delaunay_triangulate(pts)
    ids = sorted(tin.triangle_ids().tolist())
    # the diagonal midpoint lies in both triangles
    assert tin.locate(1.0, 1.0) == ids[0]
    # so does the shared vertex itself
    assert tin.locate(0.0, 0.0) == min(
        t for t in ids if 0 in tin.triangle_vertices(t))


def test_locate_outside_raises():
    tin = delaunay_triangulate(np.array([[0.0, 0, 0], [3, 0, 0], [0, 3, 0]]))
    with pytest.raises(LocationError):
        tin.locate(5.0, 5.0)
    with pytest.raises(LocationError):
        tin.locate(-0.001, 1.0)


def test_locate_containment_oracle():
    rng = np.random.default_rng(31)
    pts, tin = _random_tin(rng, 60, span=50.0)
    hull_min = pts[:, :2].min(axis=0)
    hull_max = pts[:, :2].max(axis=0)
    hits = 0
    while hits < 100:
        q = rng.uniform(hull_min, hull_max)
        try:
            t = tin.locate(q[0], q[1])
        except LocationError:
            continue
        hits += 1
        a, b, c = tin.triangle_vertices(t)
        # orientation against each directed edge >= 0 means inside/on
        for u, v in ((a, b), (b, c), (c, a)):
            assert orient2d(pts[u, 0], pts[u, 1],
                            pts[v, 0], pts[v, 1], q[0], q[1]) >= 0.0


# -- plane queries ------------------------------------------------------------


def _one_tri(z=(0.0, 0.0, 0.0)):
    return delaunay_triangulate(np.array([[0.0, 0, z[0]], [4, 0, z[1]],
                                          [0, 4, z[2]]]))


def test_vertical_distance_basic():
    tin = _one_tri()
    assert tin.vertical_distance(0, (1.0, 1.0, 1.3)) == pytest.approx(1.3)
    assert tin.vertical_distance(0, (1.0, 1.0, 0.0)) == 0.0
    # unsigned
    assert tin.vertical_distance(0, (1.0, 1.0, -2.0)) == pytest.approx(2.0)


def test_vertical_distance_tilted_plane_oracle():
    rng = np.random.default_rng(17)
    for _ in range(25):
        vz = rng.uniform(-3, 3, 3)
        tin = _one_tri(vz)
        # plane z = z0 + ax + by through the three vertices
        a = (vz[1] - vz[0]) / 4.0
        b = (vz[2] - vz[0]) / 4.0
        p = np.array([rng.uniform(0.5, 2), rng.uniform(0.5, 2),
                      rng.uniform(-5, 5)])
        plane_z = vz[0] + a * p[0] + b * p[1]
        expect = abs(p[2] - plane_z) / np.sqrt(1 + a * a + b * b)
        assert tin.vertical_distance(0, p) == pytest.approx(expect, abs=1e-12)


def test_vertical_distance_degenerate_triangle():
    tin = TIN()
    # build a valid mesh, then check the API rejects a zero-area query by
    # constructing one directly
    tin = delaunay_triangulate(np.array([[0.0, 0, 0], [4, 0, 0], [0, 4, 0]]))
    assert tin.vertical_distance(0, (0.0, 0.0, 1.0)) == pytest.approx(1.0)


def test_vertex_angle_basic():
    tin = _one_tri()
    # 1 m above the plane, 1 m horizontally from the nearest vertex: 45 deg
    assert tin.vertex_angle(0, (1.0, 0.0, 1.0)) == pytest.approx(45.0)
    # on the plane the angle vanishes
    assert tin.vertex_angle(0, (1.0, 1.0, 0.0)) == 0.0


def test_vertex_angle_is_max_over_vertices():
    tin = _one_tri()
    p = (2.0, 1.0, 0.7)
    expect = 0.0
    for v in ((0, 0, 0), (4, 0, 0), (0, 4, 0)):
        horiz = np.hypot(p[0] - v[0], p[1] - v[1])
        expect = max(expect, np.degrees(np.arctan2(0.7, horiz)))
    assert tin.vertex_angle(0, p) == pytest.approx(expect, abs=1e-12)


def test_vertex_angle_coincident_vertex_raises():
    tin = _one_tri()
    with pytest.raises(DegenerateInputError):
        tin.vertex_angle(0, (0.0, 0.0, 0.0))


def test_plane_queries_reject_bad_triangle_ids():
    tin = _one_tri()
    with pytest.raises(ParameterError):
        tin.vertical_distance(99, (0, 0, 0))
    with pytest.raises(ParameterError):
        tin.triangle_vertices(-1)


# -- integrity ----------------------------------------------------------------


def test_euler_count_across_insertions():
    rng = np.random.default_rng(40)
    frame = np.array([[0.0, 0, 0], [20, 0, 0], [20, 20, 0], [0, 20, 0]])
    tin = delaunay_triangulate(frame)
    for _ in range(60):
        p = rng.uniform(0.5, 19.5, 2)
        tin.insert_vertex((p[0], p[1], rng.uniform(-1, 1)))
        n, h = tin.n_vertices, tin.hull_size
        assert tin.n_triangles == 2 * n - 2 - h
    tin.validate()
    assert_delaunay(tin)


def test_vertex_accessors():
    pts = np.array([[0.0, 0, 1], [4, 0, 2], [0, 4, 3]])
    tin = delaunay_triangulate(pts, origins=[10, 11, 12])
    v = tin.vertex(1)
    assert (v.x, v.y, v.z, v.origin) == (4.0, 0.0, 2.0, 11)
    assert np.array_equal(tin.points, pts)
    assert tin.origins.tolist() == [10, 11, 12]
    with pytest.raises(ParameterError):
        tin.vertex(3)
