"""Thin wrappers around QUADPACK with strict failure reporting."""

from __future__ import annotations

import warnings
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import integrate

from .errors import NumericalError

DEFAULT_REL = 1e-10
DEFAULT_ABS = 1e-14


def integrate_1d(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    points: Optional[Iterable[float]] = None,
    rel: float = DEFAULT_REL,
    abs_tol: float = DEFAULT_ABS,
    limit: int = 500,
    weight: Optional[str] = None,
    wvar=None,
    strict: bool = False,
) -> float:
    """Adaptive Gauss-Kronrod integral of ``func`` over ``[a, b]``.

    Parameters
    ----------
    points : iterable of float, optional
        Interior breakpoints (kinks, jumps, integrable singularities).
    weight, wvar
        Passed to :func:`scipy.integrate.quad`; ``weight="alg"`` handles
        algebraic endpoint singularities exactly.
    strict : bool
        Raise :class:`NumericalError` when QUADPACK reports a problem and the
        error estimate exceeds ``10 * rel`` of the result.
    """
    if b <= a:
        return 0.0
    kwargs = dict(epsabs=abs_tol, epsrel=rel, limit=limit, full_output=1)
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar)
    elif points is not None:
        pts = sorted({float(p) for p in points if a < p < b})
        if pts:
            kwargs["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, **kwargs)
    value, err = out[0], out[1]
    if not np.isfinite(value):
        raise NumericalError(f"quadrature on [{a}, {b}] returned {value}")
    if strict and len(out) > 3 and err > max(abs_tol, 10 * rel * abs(value)):
        raise NumericalError(f"quadrature on [{a}, {b}] did not converge: {out[3]}")
    return float(value)


def integrate_pieces(func: Callable[[float], float], knots: Iterable[float], **kwargs) -> float:
    """Sum of :func:`integrate_1d` over consecutive knot intervals."""
    k = sorted(float(v) for v in knots)
    return float(sum(integrate_1d(func, lo, hi, **kwargs) for lo, hi in zip(k[:-1], k[1:])))


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w
