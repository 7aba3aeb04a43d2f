"""Incremental 2.5D Delaunay triangulation kernel.

Flat-array mesh representation compiled with numba.  The mesh is kept as a
triangulation of the whole plane: every convex-hull edge carries a ghost
triangle whose third vertex is the symbolic point at infinity (GHOST), which
makes point insertion on or outside the hull a regular cavity operation and
keeps every edge interior (adjacency never has holes).

Conventions, relied on throughout:

* triangle vertex rows are counterclockwise; ghost rows store GHOST at
  local index 2, so ``tv[t, 2] == GHOST`` identifies a ghost;
* a ghost row ``(g0, g1, GHOST)`` stands for the hull edge ``g1 -> g0``
  (triangulation interior on the left of ``g1 -> g0``); with that layout
  every undirected edge appears in its two triangles in opposite directions,
  ghosts included;
* the neighbor across the edge opposite local vertex ``i`` is ``tn[t, i]``;
* dead (recycled) rows are marked with DEAD in ``tv[t, 0]``.

Orientation and in-circle decisions go through the filtered-exact
predicates, so mesh topology never depends on rounding.  Cocircular ties
are resolved canonically: whenever four vertices are exactly cocircular the
diagonal kept is the one containing the smallest vertex index (flips after
each insertion restore this, so a given vertex set has one triangulation
regardless of insertion order for these degeneracies).
"""

import numpy as np
from numba import njit

from .predicates import incircle, orient2d

GHOST = -1
DEAD = -9

# counts[] slots
C_NV = 0      # number of vertices
C_TOP = 1     # first never-used triangle row
C_NFREE = 2   # free-stack depth
C_FIN = 3     # alive finite triangles
C_GHO = 4     # alive ghost triangles
C_LAST = 5    # some alive finite triangle (walk fallback / hint)
C_STAMP = 6   # visit-stamp counter

# status codes returned by kernels
OK = 0
NEED_GROW = 1
DUPLICATE = 2
OUTSIDE = 3
DEGENERATE = 4
INTERNAL = 5


@njit(cache=True, inline="always")
def _orient_idx(px, py, a, b, qx, qy):
    return orient2d(px[a], py[a], px[b], py[b], qx, qy)


@njit(cache=True)
def _alloc(tv, tn, counts, free, a, b, c):
    if counts[C_NFREE] > 0:
        counts[C_NFREE] -= 1
        t = free[counts[C_NFREE]]
    else:
        t = counts[C_TOP]
        counts[C_TOP] += 1
    tv[t, 0] = a
    tv[t, 1] = b
    tv[t, 2] = c
    tn[t, 0] = -1
    tn[t, 1] = -1
    tn[t, 2] = -1
    if c == GHOST:
        counts[C_GHO] += 1
    else:
        counts[C_FIN] += 1
        counts[C_LAST] = t
    return t


@njit(cache=True)
def _free_tri(tv, counts, free, t):
    if tv[t, 2] == GHOST:
        counts[C_GHO] -= 1
    else:
        counts[C_FIN] -= 1
    tv[t, 0] = DEAD
    free[counts[C_NFREE]] = t
    counts[C_NFREE] += 1


@njit(cache=True)
def _local_edge(tv, t, x, y):
    """Local index i such that triangle t's edge opposite i is {x, y}."""
    for i in range(3):
        a = tv[t, (i + 1) % 3]
        b = tv[t, (i + 2) % 3]
        if (a == x and b == y) or (a == y and b == x):
            return i
    return -1


@njit(cache=True)
def _conflict(px, py, tv, t, qx, qy):
    """True when q lies strictly inside the circumdisk of triangle t.

    For a ghost (g0, g1, GHOST) over hull edge g1->g0, the circumdisk is the
    open half plane strictly right of g1->g0 plus the open edge segment
    itself (the limit of circles through the edge with center receding
    rightward to infinity).
    """
    a = tv[t, 0]
    b = tv[t, 1]
    c = tv[t, 2]
    if c != GHOST:
        return incircle(px[a], py[a], px[b], py[b], px[c], py[c], qx, qy) > 0.0
    # hull edge runs g1 -> g0, i.e. b -> a
    s = _orient_idx(px, py, b, a, qx, qy)
    if s < 0.0:
        return True
    if s > 0.0:
        return False
    # collinear: in the disk only strictly between the edge endpoints
    bx = px[b]
    by = py[b]
    ax = px[a]
    ay = py[a]
    if abs(ax - bx) >= abs(ay - by):
        if bx < ax:
            return bx < qx and qx < ax
        return ax < qx and qx < bx
    if by < ay:
        return by < qy and qy < ay
    return ay < qy and qy < by


@njit(cache=True)
def _locate(px, py, tv, tn, counts, qx, qy, start):
    """Walk to the triangle containing (qx, qy).

    Returns (t, 0) for a finite containing triangle, (t, 1) when the walk
    crossed the hull into ghost t (the query is strictly outside), or
    (-1, OUTSIDE) only from the defensive exhaustive fallback.
    """
    t = start
    if t < 0 or t >= counts[C_TOP] or tv[t, 0] == DEAD or tv[t, 2] == GHOST:
        t = counts[C_LAST]
    max_steps = 4 * (counts[C_FIN] + counts[C_GHO]) + 16
    steps = 0
    while steps < max_steps:
        steps += 1
        a = tv[t, 0]
        b = tv[t, 1]
        c = tv[t, 2]
        if c == GHOST:
            return t, 1
        if _orient_idx(px, py, a, b, qx, qy) < 0.0:
            t = tn[t, 2]
            continue
        if _orient_idx(px, py, b, c, qx, qy) < 0.0:
            t = tn[t, 0]
            continue
        if _orient_idx(px, py, c, a, qx, qy) < 0.0:
            t = tn[t, 1]
            continue
        return t, 0
    # unreachable for a Delaunay mesh; exact exhaustive fallback
    for u in range(counts[C_TOP]):
        if tv[u, 0] == DEAD or tv[u, 2] == GHOST:
            continue
        a = tv[u, 0]
        b = tv[u, 1]
        c = tv[u, 2]
        if (_orient_idx(px, py, a, b, qx, qy) >= 0.0
                and _orient_idx(px, py, b, c, qx, qy) >= 0.0
                and _orient_idx(px, py, c, a, qx, qy) >= 0.0):
            return u, 0
    return -1, OUTSIDE


@njit(cache=True)
def _init_mesh(px, py, tv, tn, counts, free, a, b, c):
    """First finite triangle (a, b, c) (must be CCW) plus its three ghosts."""
    t0 = _alloc(tv, tn, counts, free, a, b, c)
    gab = _alloc(tv, tn, counts, free, b, a, GHOST)
    gbc = _alloc(tv, tn, counts, free, c, b, GHOST)
    gca = _alloc(tv, tn, counts, free, a, c, GHOST)
    tn[t0, 0] = gbc
    tn[t0, 1] = gca
    tn[t0, 2] = gab
    tn[gab, 0] = gca
    tn[gab, 1] = gbc
    tn[gab, 2] = t0
    tn[gbc, 0] = gab
    tn[gbc, 1] = gca
    tn[gbc, 2] = t0
    tn[gca, 0] = gbc
    tn[gca, 1] = gab
    tn[gca, 2] = t0
    return t0


@njit(cache=True)
def _flip(tv, tn, t1, i1):
    """Replace the diagonal shared by t1 (apex local i1) and its neighbor."""
    t2 = tn[t1, i1]
    c1 = tv[t1, i1]
    u = tv[t1, (i1 + 1) % 3]
    w = tv[t1, (i1 + 2) % 3]
    i2 = _local_edge(tv, t2, u, w)
    c2 = tv[t2, i2]
    na = tn[t1, (i1 + 1) % 3]   # across {w, c1}
    nb = tn[t1, (i1 + 2) % 3]   # across {c1, u}
    nc = tn[t2, (i2 + 1) % 3]   # across {u, c2}
    nd = tn[t2, (i2 + 2) % 3]   # across {c2, w}
    # new triangles (c1, u, c2) and (c2, w, c1), both CCW
    tv[t1, 0] = c1
    tv[t1, 1] = u
    tv[t1, 2] = c2
    tv[t2, 0] = c2
    tv[t2, 1] = w
    tv[t2, 2] = c1
    tn[t1, 0] = nc
    tn[t1, 1] = t2
    tn[t1, 2] = nb
    tn[t2, 0] = na
    tn[t2, 1] = t1
    tn[t2, 2] = nd
    j = _local_edge(tv, na, w, c1)
    tn[na, j] = t2
    j = _local_edge(tv, nb, c1, u)
    tn[nb, j] = t1
    j = _local_edge(tv, nc, u, c2)
    tn[nc, j] = t1
    j = _local_edge(tv, nd, c2, w)
    tn[nd, j] = t2


@njit(cache=True)
def _canonicalize(px, py, tv, tn, counts, queue, qlen):
    """Restore the min-index diagonal on exactly cocircular quads.

    queue[:qlen] holds triangle ids to examine; flips re-enqueue both
    affected triangles.  Each flip strictly lowers the sum over internal
    edges of the smaller endpoint index, so this terminates; the budget is
    a defensive cap only.
    """
    head = 0
    tail = qlen
    budget = 256 + 32 * qlen
    while head < tail:
        t = queue[head]
        head += 1
        if tv[t, 0] == DEAD or tv[t, 2] == GHOST:
            continue
        for i in range(3):
            n = tn[t, i]
            if tv[n, 2] == GHOST:
                continue
            u = tv[t, (i + 1) % 3]
            w = tv[t, (i + 2) % 3]
            i2 = _local_edge(tv, n, u, w)
            d = tv[n, i2]
            a = tv[t, 0]
            b = tv[t, 1]
            c = tv[t, 2]
            det = incircle(px[a], py[a], px[b], py[b], px[c], py[c],
                           px[d], py[d])
            if det != 0.0:
                continue
            cur = u if u < w else w
            apex = tv[t, i]
            new = apex if apex < d else d
            if new < cur:
                budget -= 1
                if budget < 0:
                    return INTERNAL
                _flip(tv, tn, t, i)
                if tail + 2 <= queue.shape[0]:
                    queue[tail] = t
                    queue[tail + 1] = n
                    tail += 2
                break
    return OK


@njit(cache=True)
def _insert_point(px, py, tv, tn, counts, free, svis, scav,
                  wk_stack, wk_cav, wk_bva, wk_bvb, wk_bout, wk_new,
                  qx, qy, vid, start):
    """Bowyer-Watson insertion of vertex vid at (qx, qy).

    Returns (status, info): (OK, containing-or-new id), (DUPLICATE, other
    vertex id), (NEED_GROW, -1) before any mutation when triangle capacity
    might not suffice, or (INTERNAL, -1) on invariant breakage.
    """
    alive = counts[C_FIN] + counts[C_GHO]
    spare = (tv.shape[0] - counts[C_TOP]) + counts[C_NFREE]
    if spare < alive + 4:
        return NEED_GROW, -1

    t, flag = _locate(px, py, tv, tn, counts, qx, qy, start)
    if flag == OUTSIDE:
        return INTERNAL, -1
    if flag == 0:
        for k in range(3):
            v = tv[t, k]
            if px[v] == qx and py[v] == qy:
                return DUPLICATE, v
    else:
        # the walk crossed hull edge (b -> a) of ghost t with a strictly
        # negative orientation, so t conflicts; scan the hull defensively
        # if that ever fails to hold
        if not _conflict(px, py, tv, t, qx, qy):
            g = t
            found = -1
            for _ in range(counts[C_GHO]):
                g = tn[g, 1]  # next ghost counterclockwise around the hull
                if _conflict(px, py, tv, g, qx, qy):
                    found = g
                    break
            if found < 0:
                return INTERNAL, -1
            t = found

    stamp = counts[C_STAMP] + 1
    counts[C_STAMP] = stamp

    nstack = 1
    wk_stack[0] = t
    svis[t] = stamp
    scav[t] = stamp
    ncav = 1
    wk_cav[0] = t
    while nstack > 0:
        nstack -= 1
        cur = wk_stack[nstack]
        for i in range(3):
            n = tn[cur, i]
            if svis[n] == stamp:
                continue
            svis[n] = stamp
            if _conflict(px, py, tv, n, qx, qy):
                scav[n] = stamp
                wk_cav[ncav] = n
                ncav += 1
                wk_stack[nstack] = n
                nstack += 1

    nb = 0
    for k in range(ncav):
        cur = wk_cav[k]
        for i in range(3):
            n = tn[cur, i]
            if scav[n] != stamp:
                wk_bva[nb] = tv[cur, (i + 1) % 3]
                wk_bvb[nb] = tv[cur, (i + 2) % 3]
                wk_bout[nb] = n
                nb += 1

    for k in range(ncav):
        _free_tri(tv, counts, free, wk_cav[k])

    for k in range(nb):
        va = wk_bva[k]
        vb = wk_bvb[k]
        if va == GHOST:
            s = _alloc(tv, tn, counts, free, vb, vid, GHOST)
        elif vb == GHOST:
            s = _alloc(tv, tn, counts, free, vid, va, GHOST)
        else:
            s = _alloc(tv, tn, counts, free, va, vb, vid)
        wk_new[k] = s

    for k in range(nb):
        s = wk_new[k]
        va = wk_bva[k]
        vb = wk_bvb[k]
        outer = wk_bout[k]
        i = _local_edge(tv, s, va, vb)
        tn[s, i] = outer
        j = _local_edge(tv, outer, va, vb)
        tn[outer, j] = s
        # spoke {vb_k, vid} pairs with the boundary edge starting at vb_k
        for m in range(nb):
            if wk_bva[m] == vb:
                i = _local_edge(tv, s, vb, vid)
                tn[s, i] = wk_new[m]
                j = _local_edge(tv, wk_new[m], vb, vid)
                tn[wk_new[m], j] = s
                break

    status = _canonicalize(px, py, tv, tn, counts, wk_new, nb)
    if status != OK:
        return status, -1
    return OK, counts[C_LAST]


@njit(cache=True)
def _build(px, py, tv, tn, counts, free, svis, scav,
           wk_stack, wk_cav, wk_bva, wk_bvb, wk_bout, wk_new,
           n_points, resume, third):
    """Insert vertices 0..n_points-1 into the mesh in index order.

    On the first call (empty mesh) picks the first non-collinear triple for
    the starting triangle; ``third`` persists its last member across growth
    retries.  Returns (status, resume_index, third).
    """
    if counts[C_TOP] == 0:
        i2 = -1
        for k in range(2, n_points):
            s = orient2d(px[0], py[0], px[1], py[1], px[k], py[k])
            if s != 0.0:
                i2 = k
                break
        if i2 < 0:
            return DEGENERATE, 0, -1
        s = orient2d(px[0], py[0], px[1], py[1], px[i2], py[i2])
        if s > 0.0:
            _init_mesh(px, py, tv, tn, counts, free, 0, 1, i2)
        else:
            _init_mesh(px, py, tv, tn, counts, free, 0, i2, 1)
        counts[C_NV] = n_points
        third = i2
        resume = 2

    k = resume
    while k < n_points:
        if k == third:
            k += 1
            continue
        status, info = _insert_point(px, py, tv, tn, counts, free, svis, scav,
                                     wk_stack, wk_cav, wk_bva, wk_bvb,
                                     wk_bout, wk_new,
                                     px[k], py[k], k, counts[C_LAST])
        if status == NEED_GROW:
            return NEED_GROW, k, third
        if status != OK:
            return status, k, third
        k += 1
    return OK, n_points, third


@njit(cache=True)
def _barycentric_z(px, py, pz, tv, t, qx, qy):
    a = tv[t, 0]
    b = tv[t, 1]
    c = tv[t, 2]
    ax = px[a]
    ay = py[a]
    d = (py[b] - ay) * (px[c] - ax) - (px[b] - ax) * (py[c] - ay)
    wb = ((qy - ay) * (px[c] - ax) - (qx - ax) * (py[c] - ay)) / d
    wc = ((py[b] - ay) * (qx - ax) - (px[b] - ax) * (qy - ay)) / d
    wa = 1.0 - wb - wc
    return wa * pz[a] + wb * pz[b] + wc * pz[c]
