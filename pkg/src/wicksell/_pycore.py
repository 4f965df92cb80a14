"""Pure numpy versions of the compiled kernels.

Used when the extension module is unavailable. ``tail_sqrt_sums`` is a
direct chunked sum and costs O(n m), so it is only practical up to a few
thousand observations.
"""

import numpy as np


def tail_sqrt_sums(z_sorted, targets, chunk: int = 2_000_000):
    """Return ``sum(sqrt(z - t) for z in z_sorted if z > t)`` for each target."""
    z = np.ascontiguousarray(z_sorted, dtype=np.float64)
    t = np.ascontiguousarray(targets, dtype=np.float64)
    out = np.zeros(t.size)
    if z.size == 0 or t.size == 0:
        return out
    step = max(1, chunk // z.size)
    for start in range(0, t.size, step):
        tt = t[start:start + step, None]
        diff = z[None, :] - tt
        out[start:start + step] = np.sqrt(np.where(diff > 0, diff, 0.0)).sum(axis=1)
    return out


def upper_hull(x, y):
    """Indices of the upper convex hull vertices of points sorted by x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o])
            if cross >= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.intp)
