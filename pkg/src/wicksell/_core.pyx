# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

``tail_sqrt_sums`` evaluates W(t) = sum_{z_i > t} sqrt(z_i - t) for many
targets with a one-dimensional treecode: index blocks of the sorted sample
that are well separated from the target are summed through a truncated
binomial expansion around the block centre, everything else directly.

``upper_hull`` is the monotone-chain sweep for points with increasing x.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef enum:
    ORDER = 40
    LEAF = 32

cdef double THETA = 0.5

ctypedef cnp.float64_t f64


cdef Py_ssize_t _build(const f64[:] z, Py_ssize_t lo, Py_ssize_t hi,
                       Py_ssize_t[:] nlo, Py_ssize_t[:] nhi,
                       Py_ssize_t[:] left, Py_ssize_t[:] right,
                       f64[:] centre, f64[:] radius, f64[:, :] mom,
                       Py_ssize_t* count) nogil:
    cdef Py_ssize_t node = count[0]
    cdef Py_ssize_t i, k, j, mid, a, b, child, side
    cdef f64 e, p, d, dp
    cdef f64 binom[ORDER + 1]
    count[0] += 1
    nlo[node] = lo
    nhi[node] = hi
    centre[node] = 0.5 * (z[lo] + z[hi - 1])
    radius[node] = 0.5 * (z[hi - 1] - z[lo])
    for k in range(ORDER + 1):
        mom[node, k] = 0.0
    if hi - lo <= LEAF:
        left[node] = -1
        right[node] = -1
        for i in range(lo, hi):
            e = z[i] - centre[node]
            p = 1.0
            for k in range(ORDER + 1):
                mom[node, k] += p
                p *= e
        return node
    mid = (lo + hi) // 2
    a = _build(z, lo, mid, nlo, nhi, left, right, centre, radius, mom, count)
    b = _build(z, mid, hi, nlo, nhi, left, right, centre, radius, mom, count)
    left[node] = a
    right[node] = b
    # shift child moments to the parent centre
    for side in range(2):
        child = a if side == 0 else b
        d = centre[child] - centre[node]
        for k in range(ORDER + 1):
            # binom[j] = C(k, j), built row by row
            binom[k] = 1.0
            j = k - 1
            while j > 0:
                binom[j] = binom[j] + binom[j - 1]
                j -= 1
            binom[0] = 1.0
            dp = 1.0
            e = 0.0
            j = k
            while j >= 0:
                e += binom[j] * dp * mom[child, j]
                dp *= d
                j -= 1
            mom[node, k] += e
    return node


cdef f64 _eval_one(const f64[:] z, f64 t, Py_ssize_t[:] nlo, Py_ssize_t[:] nhi,
                   Py_ssize_t[:] left, Py_ssize_t[:] right, f64[:] centre,
                   f64[:] radius, f64[:, :] mom, const f64[:] coef,
                   Py_ssize_t* stack) nogil:
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t node, i, k
    cdef f64 total = 0.0
    cdef f64 dist, u, acc
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if z[nhi[node] - 1] <= t:
            continue
        dist = centre[node] - t
        if dist > 0.0 and radius[node] <= THETA * dist:
            u = 1.0 / dist
            acc = coef[ORDER] * mom[node, ORDER]
            k = ORDER - 1
            while k >= 0:
                acc = acc * u + coef[k] * mom[node, k]
                k -= 1
            total += sqrt(dist) * acc
        elif left[node] < 0:
            for i in range(nlo[node], nhi[node]):
                if z[i] > t:
                    total += sqrt(z[i] - t)
        else:
            stack[top] = left[node]
            stack[top + 1] = right[node]
            top += 2
    return total


def tail_sqrt_sums(z_sorted, targets):
    """Return ``sum(sqrt(z - t) for z in z_sorted if z > t)`` for each target."""
    cdef const f64[:] z = np.ascontiguousarray(z_sorted, dtype=np.float64)
    cdef const f64[:] t = np.ascontiguousarray(targets, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t m = t.shape[0]
    out = np.zeros(m, dtype=np.float64)
    cdef f64[:] res = out
    if n == 0 or m == 0:
        return out
    cdef Py_ssize_t cap = 4 * (n // LEAF + 2)
    cdef Py_ssize_t[:] nlo = np.empty(cap, dtype=np.intp)
    cdef Py_ssize_t[:] nhi = np.empty(cap, dtype=np.intp)
    cdef Py_ssize_t[:] left = np.empty(cap, dtype=np.intp)
    cdef Py_ssize_t[:] right = np.empty(cap, dtype=np.intp)
    cdef f64[:] centre = np.empty(cap, dtype=np.float64)
    cdef f64[:] radius = np.empty(cap, dtype=np.float64)
    cdef f64[:, :] mom = np.empty((cap, ORDER + 1), dtype=np.float64)
    coef_arr = np.empty(ORDER + 1, dtype=np.float64)
    coef_arr[0] = 1.0
    for k in range(1, ORDER + 1):
        coef_arr[k] = coef_arr[k - 1] * (0.5 - (k - 1)) / k
    cdef const f64[:] coef = coef_arr
    cdef Py_ssize_t[:] stack = np.empty(cap + 8, dtype=np.intp)
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t j
    with nogil:
        _build(z, 0, n, nlo, nhi, left, right, centre, radius, mom, &count)
        for j in range(m):
            res[j] = _eval_one(z, t[j], nlo, nhi, left, right, centre, radius,
                               mom, coef, &stack[0])
    return out


def upper_hull(x, y):
    """Indices of the upper convex hull vertices of points sorted by x.

    Collinear interior points are dropped, so consecutive hull slopes are
    strictly decreasing.
    """
    cdef const f64[:] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef const f64[:] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0]
    idx = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[:] h = idx
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t i, o, a
    cdef f64 cross
    with nogil:
        for i in range(n):
            while top >= 2:
                o = h[top - 2]
                a = h[top - 1]
                cross = ((xs[a] - xs[o]) * (ys[i] - ys[o])
                         - (ys[a] - ys[o]) * (xs[i] - xs[o]))
                if cross >= 0.0:
                    top -= 1
                else:
                    break
            h[top] = i
            top += 1
    return idx[:top].copy()
