"""Filtered-exact orientation and in-circle predicates.

Each predicate is evaluated in plain double arithmetic together with a
forward error bound; when the magnitude of the result clears the bound the
floating-point sign is already the exact sign.  Otherwise the determinant is
recomputed with multi-term expansion arithmetic (two_sum / two_product
chains), which is exact for IEEE doubles, so the sign returned is always the
sign of the real-arithmetic value.

Assumes inputs are finite and that products of coordinate differences do not
underflow or overflow (coordinate magnitudes roughly inside 1e-140..1e140).
Do not compile any of this with fastmath: the error-free transformations
rely on IEEE rounding.
"""

import numpy as np
from numba import njit

_EPS = 2.0 ** -53
_SPLITTER = 134217729.0  # 2**27 + 1
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


@njit(cache=True, inline="always")
def _two_sum(a, b):
    x = a + b
    bvirt = x - a
    avirt = x - bvirt
    bround = b - bvirt
    around = a - avirt
    return x, around + bround


@njit(cache=True, inline="always")
def _two_diff(a, b):
    x = a - b
    bvirt = a - x
    avirt = x + bvirt
    bround = bvirt - b
    around = a - avirt
    return x, around + bround


@njit(cache=True, inline="always")
def _split(a):
    c = _SPLITTER * a
    abig = c - a
    ahi = c - abig
    return ahi, a - ahi


@njit(cache=True, inline="always")
def _two_product(a, b):
    x = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err1 = x - ahi * bhi
    err2 = err1 - alo * bhi
    err3 = err2 - ahi * blo
    return x, alo * blo - err3


@njit(cache=True)
def _expansion_sum(e, elen, f, flen, h):
    """Merge two nonoverlapping expansions into one, eliminating zeros.

    e and f must be ordered by increasing magnitude (zeros allowed).  The
    result, written to h, is a nonoverlapping expansion whose last component
    carries the sign of the whole sum.  Returns the number of components.
    """
    eindex = 0
    findex = 0
    # seed Q with the smaller-magnitude leading term
    enow = e[0]
    fnow = f[0]
    if (fnow > enow) == (fnow > -enow):
        q = enow
        eindex = 1
    else:
        q = fnow
        findex = 1
    hindex = 0
    while eindex < elen and findex < flen:
        enow = e[eindex]
        fnow = f[findex]
        if (fnow > enow) == (fnow > -enow):
            qnew, hh = _two_sum(q, enow)
            eindex += 1
        else:
            qnew, hh = _two_sum(q, fnow)
            findex += 1
        q = qnew
        if hh != 0.0:
            h[hindex] = hh
            hindex += 1
    while eindex < elen:
        qnew, hh = _two_sum(q, e[eindex])
        eindex += 1
        q = qnew
        if hh != 0.0:
            h[hindex] = hh
            hindex += 1
    while findex < flen:
        qnew, hh = _two_sum(q, f[findex])
        findex += 1
        q = qnew
        if hh != 0.0:
            h[hindex] = hh
            hindex += 1
    if q != 0.0 or hindex == 0:
        h[hindex] = q
        hindex += 1
    return hindex


@njit(cache=True)
def _scale_expansion(e, elen, b, h):
    """Multiply expansion e by double b; same conventions as _expansion_sum."""
    bhi, blo = _split(b)
    q, hh = _two_product_presplit(e[0], b, bhi, blo)
    hindex = 0
    if hh != 0.0:
        h[hindex] = hh
        hindex += 1
    for eindex in range(1, elen):
        p1, p0 = _two_product_presplit(e[eindex], b, bhi, blo)
        s, hh = _two_sum(q, p0)
        if hh != 0.0:
            h[hindex] = hh
            hindex += 1
        q, hh = _two_sum(p1, s)
        if hh != 0.0:
            h[hindex] = hh
            hindex += 1
    if q != 0.0 or hindex == 0:
        h[hindex] = q
        hindex += 1
    return hindex


@njit(cache=True, inline="always")
def _two_product_presplit(a, b, bhi, blo):
    x = a * b
    ahi, alo = _split(a)
    err1 = x - ahi * bhi
    err2 = err1 - alo * bhi
    err3 = err2 - ahi * blo
    return x, alo * blo - err3


@njit(cache=True, inline="always")
def _two_two_diff(a1, a0, b1, b0, out):
    """(a1,a0) - (b1,b0) as a 4-component expansion written into out[:4]."""
    s, x0 = _two_diff(a0, b0)
    j, x1a = _two_sum(a1, s)
    s, x1 = _two_diff(x1a, b1)
    x3, x2 = _two_sum(j, s)
    out[0] = x0
    out[1] = x1
    out[2] = x2
    out[3] = x3


@njit(cache=True)
def _orient2d_exact(ax, ay, bx, by, cx, cy):
    t = np.empty(4, np.float64)
    u = np.empty(4, np.float64)
    v = np.empty(4, np.float64)
    s8 = np.empty(8, np.float64)
    s12 = np.empty(12, np.float64)

    p1, p0 = _two_product(ax, by)
    q1, q0 = _two_product(ax, cy)
    _two_two_diff(p1, p0, q1, q0, t)          # ax*by - ax*cy
    p1, p0 = _two_product(bx, cy)
    q1, q0 = _two_product(bx, ay)
    _two_two_diff(p1, p0, q1, q0, u)          # bx*cy - bx*ay
    p1, p0 = _two_product(cx, ay)
    q1, q0 = _two_product(cx, by)
    _two_two_diff(p1, p0, q1, q0, v)          # cx*ay - cx*by

    n8 = _expansion_sum(t, 4, u, 4, s8)
    n12 = _expansion_sum(s8, n8, v, 4, s12)
    return s12[n12 - 1]


@njit(cache=True)
def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of twice the signed area of triangle (a, b, c).

    Positive for counterclockwise, negative for clockwise, zero for exactly
    collinear.  The sign is exact; the magnitude is only approximate.
    """
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    if detleft > 0.0:
        if detright <= 0.0:
            return det
        detsum = detleft + detright
    elif detleft < 0.0:
        if detright >= 0.0:
            return det
        detsum = -detleft - detright
    else:
        return det
    errbound = _CCW_BOUND * detsum
    if det >= errbound or -det >= errbound:
        return det
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


@njit(cache=True)
def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy):
    ab = np.empty(4, np.float64)
    bc = np.empty(4, np.float64)
    cd = np.empty(4, np.float64)
    da = np.empty(4, np.float64)
    ac = np.empty(4, np.float64)
    bd = np.empty(4, np.float64)
    temp8 = np.empty(8, np.float64)
    abc = np.empty(12, np.float64)
    bcd = np.empty(12, np.float64)
    cda = np.empty(12, np.float64)
    dab = np.empty(12, np.float64)
    det24x = np.empty(24, np.float64)
    det24y = np.empty(24, np.float64)
    det48x = np.empty(48, np.float64)
    det48y = np.empty(48, np.float64)
    adet = np.empty(96, np.float64)
    bdet = np.empty(96, np.float64)
    cdet = np.empty(96, np.float64)
    ddet = np.empty(96, np.float64)
    abdet = np.empty(192, np.float64)
    cddet = np.empty(192, np.float64)
    deter = np.empty(384, np.float64)

    p1, p0 = _two_product(ax, by)
    q1, q0 = _two_product(bx, ay)
    _two_two_diff(p1, p0, q1, q0, ab)
    p1, p0 = _two_product(bx, cy)
    q1, q0 = _two_product(cx, by)
    _two_two_diff(p1, p0, q1, q0, bc)
    p1, p0 = _two_product(cx, dy)
    q1, q0 = _two_product(dx, cy)
    _two_two_diff(p1, p0, q1, q0, cd)
    p1, p0 = _two_product(dx, ay)
    q1, q0 = _two_product(ax, dy)
    _two_two_diff(p1, p0, q1, q0, da)
    p1, p0 = _two_product(ax, cy)
    q1, q0 = _two_product(cx, ay)
    _two_two_diff(p1, p0, q1, q0, ac)
    p1, p0 = _two_product(bx, dy)
    q1, q0 = _two_product(dx, by)
    _two_two_diff(p1, p0, q1, q0, bd)

    n8 = _expansion_sum(cd, 4, da, 4, temp8)
    ncda = _expansion_sum(temp8, n8, ac, 4, cda)
    n8 = _expansion_sum(da, 4, ab, 4, temp8)
    ndab = _expansion_sum(temp8, n8, bd, 4, dab)
    for i in range(4):
        bd[i] = -bd[i]
        ac[i] = -ac[i]
    n8 = _expansion_sum(ab, 4, bc, 4, temp8)
    nabc = _expansion_sum(temp8, n8, ac, 4, abc)
    n8 = _expansion_sum(bc, 4, cd, 4, temp8)
    nbcd = _expansion_sum(temp8, n8, bd, 4, bcd)

    # det = |a|^2*bcd - |b|^2*cda + |c|^2*dab - |d|^2*abc
    xlen = _scale_expansion(bcd, nbcd, ax, det24x)
    xlen = _scale_expansion(det24x, xlen, ax, det48x)
    ylen = _scale_expansion(bcd, nbcd, ay, det24y)
    ylen = _scale_expansion(det24y, ylen, ay, det48y)
    alen = _expansion_sum(det48x, xlen, det48y, ylen, adet)

    xlen = _scale_expansion(cda, ncda, bx, det24x)
    xlen = _scale_expansion(det24x, xlen, -bx, det48x)
    ylen = _scale_expansion(cda, ncda, by, det24y)
    ylen = _scale_expansion(det24y, ylen, -by, det48y)
    blen = _expansion_sum(det48x, xlen, det48y, ylen, bdet)

    xlen = _scale_expansion(dab, ndab, cx, det24x)
    xlen = _scale_expansion(det24x, xlen, cx, det48x)
    ylen = _scale_expansion(dab, ndab, cy, det24y)
    ylen = _scale_expansion(det24y, ylen, cy, det48y)
    clen = _expansion_sum(det48x, xlen, det48y, ylen, cdet)

    xlen = _scale_expansion(abc, nabc, dx, det24x)
    xlen = _scale_expansion(det24x, xlen, -dx, det48x)
    ylen = _scale_expansion(abc, nabc, dy, det24y)
    ylen = _scale_expansion(det24y, ylen, -dy, det48y)
    dlen = _expansion_sum(det48x, xlen, det48y, ylen, ddet)

    nab = _expansion_sum(adet, alen, bdet, blen, abdet)
    ncd = _expansion_sum(cdet, clen, ddet, dlen, cddet)
    ndet = _expansion_sum(abdet, nab, cddet, ncd, deter)
    return deter[ndet - 1]


@njit(cache=True)
def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """In-circle test for d against the circle through a, b, c.

    With (a, b, c) counterclockwise: positive when d is strictly inside the
    circumcircle, negative when strictly outside, zero when exactly on it.
    The sign is exact.
    """
    adx = ax - dx
    bdx = bx - dx
    cdx = cx - dx
    ady = ay - dy
    bdy = by - dy
    cdy = cy - dy

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady

    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy

    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (alift * (bdxcdy - cdxbdy)
           + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))

    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    errbound = _ICC_BOUND * permanent
    if det > errbound or -det > errbound:
        return det
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)
