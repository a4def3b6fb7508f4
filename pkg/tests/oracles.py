"""Independent reference implementations used only by the test suite."""

from math import gcd

import numpy as np


def primitive_vectors(R):
    b = int(R)
    return {(x, y) for x in range(-b, b + 1) for y in range(-b, b + 1)
            if (x or y) and x * x + y * y <= R * R and gcd(x, y) == 1}


def brute_pairs(vecs, R, A, include_equal=True, lo=None, tol=0.0):
    """O(N^2) double loop for ordered pairs with |z^w| <= A, |w| <= |z| <= R."""
    vecs = list(vecs)
    n = 0
    for zx, zy in vecs:
        r2 = zx * zx + zy * zy
        if r2 > R * R or (lo is not None and r2 <= lo * lo):
            continue
        for wx, wy in vecs:
            if not include_equal and (wx, wy) == (zx, zy):
                continue
            if wx * wx + wy * wy <= r2 and abs(zx * wy - zy * wx) <= A + tol:
                n += 1
    return n


def brute_parallel(vecs, R, include_equal=False, include_opposite=True):
    vecs = list(vecs)
    n = 0
    for zx, zy in vecs:
        for wx, wy in vecs:
            if (wx, wy) == (zx, zy) and not include_equal:
                continue
            if (wx, wy) == (-zx, -zy) and not include_opposite:
                continue
            rz, rw = zx * zx + zy * zy, wx * wx + wy * wy
            if rz <= rw <= R * R and zx * wy - zy * wx == 0:
                n += 1
    return n


def brute_pairs_numpy(xy, R, A, include_equal=True, lo=None):
    """Vectorized O(N^2) oracle for larger sets; ``lo`` restricts to lo < |z|."""
    xy = np.asarray(xy, dtype=np.int64)
    r2 = (xy ** 2).sum(1)
    keep = r2 <= R * R
    if lo is not None:
        keep &= r2 > lo * lo
    z = xy[keep]
    rz = (z ** 2).sum(1)
    total = 0
    for k in range(0, len(z), 512):
        zz = z[k:k + 512]
        wedge = np.abs(zz[:, :1] * xy[None, :, 1] - zz[:, 1:] * xy[None, :, 0])
        ok = (wedge <= A) & (r2[None, :] <= rz[k:k + 512, None])
        total += int(ok.sum())
    if not include_equal:
        total -= len(z)
    return total


def brute_parallel_numpy(xy, R, include_equal=False, include_opposite=True):
    """Vectorized N_0 oracle: zero wedge, |z| <= |w| <= R."""
    xy = np.asarray(xy, dtype=np.int64)
    xy = xy[(xy ** 2).sum(1) <= R * R]
    r2 = (xy ** 2).sum(1)
    total = 0
    for k in range(0, len(xy), 512):
        zz = xy[k:k + 512]
        cross = zz[:, :1] * xy[None, :, 1] - zz[:, 1:] * xy[None, :, 0]
        ok = (cross == 0) & (r2[k:k + 512, None] <= r2[None, :])
        same = (zz[:, None, :] == xy[None, :, :]).all(-1)
        opposite = (zz[:, None, :] == -xy[None, :, :]).all(-1)
        if not include_equal:
            ok &= ~same
        if not include_opposite:
            ok &= ~opposite
        total += int(ok.sum())
    return total
