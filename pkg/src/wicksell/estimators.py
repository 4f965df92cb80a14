"""Plug-in and isotonic inverse estimators of F.

With observations ``Z_1..Z_n``:

* ``V_n(x) = (1/n) sum_{Z_i > x} (Z_i - x)**(-1/2)`` estimates
  ``V(x) = pi (1 - F(x)) / (2 m0)``;
* ``U_n(x) = (2/n) sum (sqrt(Z_i) - sqrt((Z_i - x)_+))`` is its primitive;
* the isotonic inverse estimator uses the right derivative ``Vhat_n`` of the
  least concave majorant of ``U_n`` and sets ``Fhat_n = 1 - Vhat_n / Vhat_n(0)``.

Between consecutive order statistics ``U_n`` is convex (its derivative
``V_n`` increases there), so its least concave majorant coincides with the
upper hull of ``(0, 0)`` and the points ``(Z_(k), U_n(Z_(k)))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import WicksellError
from .sampling import SampleSet


def _values(sample) -> np.ndarray:
    return sample.values if isinstance(sample, SampleSet) else np.sort(np.asarray(sample, dtype=float))


def _u_at(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``U_n`` at sorted sample ``z`` for targets ``x`` (shared by all callers)."""
    n = z.size
    total = _backend.tail_sqrt_sums(z, np.zeros(1))[0]
    tails = _backend.tail_sqrt_sums(z, np.maximum(x, 0.0))
    return np.where(x <= 0, 0.0, (2.0 / n) * (total - tails))


def v_n(sample, x):
    """Naive plug-in estimate of V; ``+inf`` when ``x`` equals an observation."""
    z = _values(sample)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xa.size)
    for i, xv in enumerate(xa):
        d = z[z >= xv] - xv
        out[i] = np.inf if np.any(d == 0) else np.sum(1.0 / np.sqrt(d)) / z.size
    return float(out[0]) if np.ndim(x) == 0 else out


def u_n(sample, x):
    """Plug-in estimate of U, the primitive of V."""
    z = _values(sample)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = _u_at(z, xa)
    return float(out[0]) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class ConcaveMajorant:
    """Least concave majorant of ``U_n`` as knots, values and segment slopes.

    ``slopes[j]`` is the slope on ``[knots[j], knots[j+1])``; the majorant is
    flat beyond the last knot.
    """

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def slope_at(self, x):
        """Right derivative of the majorant."""
        xa = np.asarray(x, dtype=float)
        j = np.searchsorted(self.knots, xa, side="right") - 1
        j = np.maximum(j, 0)
        s = np.where(j < self.slopes.size, self.slopes[np.minimum(j, self.slopes.size - 1)], 0.0)
        if self.slopes.size == 0:
            s = np.zeros_like(xa)
        return float(s) if xa.ndim == 0 else s

    def value_at(self, x):
        """Majorant value, linear between knots and constant past the last."""
        xa = np.asarray(x, dtype=float)
        out = np.interp(xa, self.knots, self.values)
        return float(out) if xa.ndim == 0 else out

    @property
    def vhat0(self) -> float:
        return float(self.slopes[0]) if self.slopes.size else 0.0


def lcm(sample) -> ConcaveMajorant:
    """Least concave majorant of ``U_n`` on ``[0, inf)``."""
    z = _values(sample)
    if z.size == 0:
        raise WicksellError("empty sample")
    knots = np.unique(z)
    knots = knots[knots > 0]
    x = np.concatenate([[0.0], knots])
    y = np.concatenate([[0.0], _u_at(z, knots)])
    idx = _backend.upper_hull(x, y)
    hx, hy = x[idx], y[idx]
    slopes = np.diff(hy) / np.diff(hx)
    return ConcaveMajorant(hx, hy, slopes)


def v_hat(maj: ConcaveMajorant, x):
    """Isotonic estimate of V: right derivative of the majorant."""
    return maj.slope_at(x)


def f_hat(sample, x, maj: ConcaveMajorant | None = None):
    """Isotonic inverse estimator ``1 - Vhat_n(x) / Vhat_n(0)``; 0 for ``x < 0``."""
    maj = lcm(sample) if maj is None else maj
    v0 = maj.vhat0
    if not v0 > 0:
        raise WicksellError("all observations are zero; the estimator is undefined")
    xa = np.asarray(x, dtype=float)
    out = np.where(xa < 0, 0.0, 1.0 - maj.slope_at(xa) / v0)
    return float(out) if xa.ndim == 0 else out


def f_naive(sample, x):
    """Naive plug-in estimator ``1 - V_n(x) / V_n(0)``; may leave ``[0, 1]``."""
    z = _values(sample)
    if np.any(z == 0):
        raise WicksellError("an observation equals 0, so V_n(0) is infinite")
    v0 = v_n(z, 0.0)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    vx = v_n(z, xa)
    if np.any(np.isinf(vx)):
        bad = xa[np.isinf(vx)][0]
        raise WicksellError(f"naive estimator is infinite at observation {bad!r}")
    out = np.where(xa < 0, 0.0, 1.0 - vx / v0)
    return float(out[0]) if np.ndim(x) == 0 else out


def argmax_t(sample, a: float, step: float = 1e-3) -> float:
    """Smallest maximiser of ``U_n(t) - a t`` over a grid plus all knots.

    Brute-force oracle for the switch relation ``T_n(a) <= t  iff  Vhat_n(t) <= a``.
    """
    z = _values(sample)
    top = float(z[-1])
    grid = np.unique(np.concatenate([np.arange(0.0, top + step, step), z, [0.0, top]]))
    crit = u_n(z, grid) - a * grid
    return float(grid[int(np.argmax(crit))])
