"""Least-favourable perturbation path and its local asymptotic normality.

For ``h = (h1, h2)`` and sample size ``n`` put ``h_in = h_i / sqrt(n log n)``,
window ``eta = (log n)**(-1/2)`` and truncation levels
``tau0 = n**(-1/(2 gamma0))``, ``taux = n**(-1/(2 gammax))``. The directions are

* ``chi1(v) = 1/v`` on ``tau0 <= v <= eta``,
* ``chi2(w) = 1/w`` on ``taux <= |w| <= eta`` (evaluated at ``w = v - x``),

and the path is ``F_h(u) = (F(u) + h1n int_0^u chi1 + h2n int_0^u chi2(. - x)) / D``
with ``D = 1 + h1n log(eta / tau0)`` (``chi2`` integrates to zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalError, WicksellError
from .models import CdfModel, ObservationModel
from .quadrature import integrate_pieces


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation of F at sample size ``n`` in direction ``h``.

    ``eta`` overrides the window ``(log n)**(-alpha)``.
    """

    obs: ObservationModel
    x: float
    h: tuple[float, float]
    n: float
    gamma0: float = 1.0
    gammax: float = 1.0
    eta: Optional[float] = None
    alpha: float = 0.5
    window: float = field(init=False)
    tau0: float = field(init=False)
    taux: float = field(init=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if not (self.gamma0 > 0.5 and self.gammax > 0.5):
            raise ValueError("smoothness exponents must exceed 1/2")
        if not all(math.isfinite(v) for v in self.h):
            raise ValueError("h must be finite")
        if self.eta is None:
            if not 0 < self.alpha < 1:
                raise ValueError("window exponent must lie in (0, 1)")
            eta = math.log(self.n) ** (-self.alpha)
        else:
            eta = float(self.eta)
        if not 0 < eta <= 1:
            raise ValueError(f"window {eta} must lie in (0, 1]")
        tau0 = self.n ** (-1.0 / (2 * self.gamma0))
        taux = self.n ** (-1.0 / (2 * self.gammax))
        if not (tau0 < eta and taux < eta):
            raise ValueError(f"truncation levels ({tau0:.3g}, {taux:.3g}) must be below the window {eta:.3g}")
        if self.x < eta:
            raise ValueError(f"anchor x={self.x} must be at least the window {eta:.3g}")
        object.__setattr__(self, "h", (float(self.h[0]), float(self.h[1])))
        object.__setattr__(self, "window", eta)
        object.__setattr__(self, "tau0", tau0)
        object.__setattr__(self, "taux", taux)

    @property
    def scale(self) -> float:
        """``sqrt(n log n)``."""
        return math.sqrt(self.n * math.log(self.n))

    @property
    def hn(self) -> tuple[float, float]:
        return self.h[0] / self.scale, self.h[1] / self.scale

    def with_n(self, n: float) -> "PerturbationSpec":
        return PerturbationSpec(self.obs, self.x, self.h, n, self.gamma0, self.gammax, self.eta, self.alpha)

    def with_h(self, h: tuple[float, float]) -> "PerturbationSpec":
        return PerturbationSpec(self.obs, self.x, h, self.n, self.gamma0, self.gammax, self.eta, self.alpha)


def chi1(spec: PerturbationSpec, v):
    v = np.asarray(v, dtype=float)
    inside = (v >= spec.tau0) & (v <= spec.window)
    return np.where(inside, 1.0 / np.where(inside, v, 1.0), 0.0)


def chi2(spec: PerturbationSpec, w):
    w = np.asarray(w, dtype=float)
    a = np.abs(w)
    inside = (a >= spec.taux) & (a <= spec.window)
    return np.where(inside, 1.0 / np.where(inside, w, 1.0), 0.0)


def chi1_primitive(spec: PerturbationSpec, u):
    """``int_0^u chi1``."""
    u = np.asarray(u, dtype=float)
    val = np.log(np.clip(u, spec.tau0, spec.window) / spec.tau0)
    return float(val) if val.ndim == 0 else val


def chi2_primitive(spec: PerturbationSpec, u):
    """``int_0^u chi2(v - x) dv``: zero outside ``x +- eta``, plateau ``log(taux/eta)``."""
    d = np.asarray(u, dtype=float) - spec.x
    a = np.clip(np.abs(d), spec.taux, spec.window)
    val = np.where(np.abs(d) >= spec.window, 0.0, np.log(a / spec.window))
    return float(val) if val.ndim == 0 else val


def d_hn(spec: PerturbationSpec) -> float:
    """Normaliser ``1 + h1n log(eta / tau0)``."""
    d = 1.0 + spec.hn[0] * math.log(spec.window / spec.tau0)
    if d <= 0:
        raise WicksellError(f"normaliser D = {d} is not positive; increase n or shrink h")
    return d


def sqrt_chi_integrals(spec: PerturbationSpec) -> tuple[float, float]:
    """``int sqrt(v) chi1(v) dv`` and ``int sqrt(v) chi2(v - x) dv`` in closed form."""
    i1 = 2.0 * (math.sqrt(spec.window) - math.sqrt(spec.tau0))
    rx = math.sqrt(spec.x)

    def prim(d: float) -> float:
        # antiderivative of sqrt(v) / (v - x) at v = x + d, using (s - rx)(s + rx) = d
        s = math.sqrt(spec.x + d)
        return 2 * s + rx * (math.log(abs(d)) - 2 * math.log(s + rx))

    t, e = spec.taux, spec.window
    i2 = prim(-t) - prim(-e) + prim(e) - prim(t)
    return i1, i2


def sqrt_chi_integrals_quad(spec: PerturbationSpec) -> tuple[float, float]:
    """Quadrature route for :func:`sqrt_chi_integrals` (oracle)."""
    i1 = integrate_pieces(lambda v: math.sqrt(v) / v, [spec.tau0, spec.window], rel=1e-13)
    x, t, e = spec.x, spec.taux, spec.window
    f = lambda v: math.sqrt(v) / (v - x)  # noqa: E731
    i2 = integrate_pieces(f, [x - e, x - t], rel=1e-13) + integrate_pieces(f, [x + t, x + e], rel=1e-13)
    return i1, i2


def m_hd(spec: PerturbationSpec) -> float:
    """``m_h D = m0 + h1n int sqrt(v) chi1 + h2n int sqrt(v) chi2``."""
    i1, i2 = sqrt_chi_integrals(spec)
    h1n, h2n = spec.hn
    return spec.obs.m0 + h1n * i1 + h2n * i2


def perturbed_cdf(spec: PerturbationSpec, u):
    """Perturbed sphere cdf ``F_h(u)``; 0 for ``u <= 0``."""
    u = np.asarray(u, dtype=float)
    h1n, h2n = spec.hn
    f = np.asarray(spec.obs.model.cdf(u))
    val = (f + h1n * chi1_primitive(spec, u) + h2n * chi2_primitive(spec, u)) / d_hn(spec)
    val = np.where(u <= 0, 0.0, val)
    return float(val) if val.ndim == 0 else val


def check_monotone(spec: PerturbationSpec, grid: Sequence[float], tol: float = 1e-14) -> bool:
    """Whether ``F_h`` is nondecreasing on ``grid``."""
    vals = np.asarray(perturbed_cdf(spec, np.sort(np.asarray(grid, dtype=float))))
    return bool(np.all(np.diff(vals) >= -tol))


def _zeta_prim(y: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Antiderivative in v of ``1 / (v sqrt(v - y))`` for ``v > y``."""
    out = np.empty(np.broadcast(y, v).shape)
    y, v = np.broadcast_arrays(y, v)
    pos, neg, zero = y > 0, y < 0, y == 0
    if np.any(pos):
        yp, vp = y[pos], v[pos]
        out[pos] = 2.0 / np.sqrt(yp) * np.arctan(np.sqrt(np.maximum(vp - yp, 0.0) / yp))
    if np.any(neg):
        a, vn = -y[neg], v[neg]
        s, c = np.sqrt(np.maximum(vn + a, 0.0)), np.sqrt(a)
        # (s - c)(s + c) = v keeps the log accurate when v is tiny
        out[neg] = (np.log(np.abs(vn)) - 2.0 * np.log(s + c)) / c
    if np.any(zero):
        out[zero] = -2.0 / np.sqrt(v[zero])
    return out


def zeta_n(y, delta: float, eta: float):
    """``int_{v > y, delta <= |v| <= eta} dv / (v sqrt(v - y))`` in closed form."""
    if not 0 < delta < eta:
        raise ValueError("need 0 < delta < eta")
    ya = np.asarray(y, dtype=float)
    yb = np.atleast_1d(ya)
    total = np.zeros(yb.shape)
    for lo, hi in ((delta, eta), (-eta, -delta)):
        a = np.maximum(lo, yb)
        m = a < hi
        if np.any(m):
            total[m] += _zeta_prim(yb[m], np.full(m.sum(), hi)) - _zeta_prim(yb[m], a[m])
    return float(total[0]) if ya.ndim == 0 else total.reshape(ya.shape)


def zeta_n_quad(y: float, delta: float, eta: float) -> float:
    """Quadrature route for :func:`zeta_n` (oracle); ``v = y + t**2`` removes the endpoint singularity."""
    total = 0.0
    for lo, hi in ((delta, eta), (-eta, -delta)):
        a = max(lo, y)
        if a >= hi:
            continue
        t0, t1 = math.sqrt(a - y), math.sqrt(hi - y)
        # geometric breakpoints resolve the spike when y sits just below -delta
        k = int(math.ceil(math.log10(t1 / t0))) if t0 > 0 else 0
        pts = [t0 * 10.0**j for j in range(1, k) if t0 * 10.0**j < t1]
        total += integrate_pieces(lambda t: 2.0 / (y + t * t), [t0, *pts, t1], rel=1e-13, abs_tol=0.0)
    return total


def perturbation_terms(spec: PerturbationSpec, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``g(z)``, ``zeta1(z)`` and ``zeta2(z - x)`` on an array of points."""
    z = np.asarray(z, dtype=float)
    g = np.asarray(spec.obs.g(z))
    z1 = zeta_n(z, spec.tau0, spec.window)
    z2 = zeta_n(z - spec.x, spec.taux, spec.window)
    return g, np.asarray(z1), np.asarray(z2)


def perturbed_g(spec: PerturbationSpec, z, check: bool = True):
    """Observation density under ``F_h``."""
    za = np.asarray(z, dtype=float)
    g, z1, z2 = perturbation_terms(spec, za)
    h1n, h2n = spec.hn
    val = (2 * spec.obs.m0 * g + h1n * z1 + h2n * z2) / (2 * m_hd(spec))
    if check and np.any(val < 0):
        bad = float(np.atleast_1d(za)[np.argmax(np.atleast_1d(val) < 0)])
        raise NumericalError(f"perturbed density is negative at z={bad}; n is below the monotonicity threshold")
    return float(val) if za.ndim == 0 else val


def loglik_sum(sample, spec: PerturbationSpec) -> float:
    """``sum log(g_h(Z_i) / g(Z_i))``."""
    z = sample.values if hasattr(sample, "values") else np.asarray(sample, dtype=float)
    g, z1, z2 = perturbation_terms(spec, z)
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise NumericalError("observation density vanishes or is infinite at a sample point")
    h1n, h2n = spec.hn
    ratio = (spec.obs.m0 + h1n * z1 / (2 * g) + h2n * z2 / (2 * g)) / m_hd(spec)
    if np.any(ratio <= 0):
        raise NumericalError("perturbed density is not positive at a sample point")
    return float(np.sum(np.log(ratio)))


def delta_n(sample, spec: PerturbationSpec) -> np.ndarray:
    """Normalised score ``(Delta_n1, Delta_n2)``."""
    z = sample.values if hasattr(sample, "values") else np.asarray(sample, dtype=float)
    g, z1, z2 = perturbation_terms(spec, z)
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise NumericalError("observation density vanishes or is infinite at a sample point")
    i1, i2 = sqrt_chi_integrals(spec)
    s1 = np.sum(z1 / (2 * g) - i1)
    s2 = np.sum(z2 / (2 * g) - i2)
    return np.array([s1, s2]) / (m_hd(spec) * spec.scale)


def j_matrix(obs: ObservationModel, x: float, gamma0: float, gammax: float) -> np.ndarray:
    """Information ``(pi**2 / (8 m0**2)) diag(1/(gamma0 g(0)), 1/(gammax g(x)))``."""
    g0, gx = float(obs.g(0.0)), float(obs.g(x))
    if not (g0 > 0 and gx > 0) or not (math.isfinite(g0) and math.isfinite(gx)):
        raise WicksellError("observation density must be positive and finite at 0 and x")
    c = math.pi**2 / (8 * obs.m0**2)
    return np.diag([c / (gamma0 * g0), c / (gammax * gx)])


def psi_dot(model: CdfModel, x: float, gamma0: float, gammax: float) -> np.ndarray:
    """Derivative of ``h -> F_h(x)`` along the path: ``((1 - F(x))/(2 gamma0), -1/(2 gammax))``."""
    if x <= 0:
        raise ValueError("x must be positive")
    return np.array([(1.0 - float(model.cdf(x))) / (2 * gamma0), -1.0 / (2 * gammax)])


def efficient_variance(obs: ObservationModel, x: float, gamma0: float, gammax: float) -> float:
    """``(4 m0**2 / pi**2) (g(x) / (2 gammax) + (1 - F(x))**2 g(0) / (2 gamma0))``."""
    fx = float(obs.model.cdf(x))
    g0, gx = float(obs.g(0.0)), float(obs.g(x))
    return 4 * obs.m0**2 / math.pi**2 * (gx / (2 * gammax) + (1 - fx) ** 2 * g0 / (2 * gamma0))


def efficient_variance_quadratic(obs: ObservationModel, x: float, gamma0: float, gammax: float) -> float:
    """``psi_dot^T J^{-1} psi_dot``."""
    p = psi_dot(obs.model, x, gamma0, gammax)
    return float(p @ np.linalg.solve(j_matrix(obs, x, gamma0, gammax), p))


def hadamard_value(spec: PerturbationSpec) -> float:
    """``sqrt(n / log n) (F_h(x) - F(x))``."""
    n = spec.n
    return math.sqrt(n / math.log(n)) * (perturbed_cdf(spec, spec.x) - float(spec.obs.model.cdf(spec.x)))


def hadamard_ladder(template: PerturbationSpec, ns: Sequence[float]) -> list[float]:
    """:func:`hadamard_value` along increasing sample sizes."""
    ns = list(ns)
    if any(b <= a for a, b in zip(ns[:-1], ns[1:])):
        raise ValueError("sizes must increase")
    return [hadamard_value(template.with_n(n)) for n in ns]


def score_covariance(spec: PerturbationSpec) -> np.ndarray:
    """Exact covariance of ``Delta_n`` at the path's ``n`` by quadrature.

    The asymptotic limit is :func:`j_matrix`; the gap closes only at the
    logarithmic rate of the window and truncation levels.
    """
    obs, x = spec.obs, spec.x
    e, t0, tx = spec.window, spec.tau0, spec.taux
    if tx < 1e3 * np.finfo(float).eps * x:
        raise NumericalError(f"truncation level {tx:.3g} is below the float resolution around x={x}")
    zmax = obs.model.upper_observation()
    pts = {0.0, t0, e, x - e, x - tx, x, x + tx, x + e, zmax}
    pts |= {t0 * 10.0**k for k in range(60) if t0 * 10.0**k < zmax}
    pts |= {x + s * tx * 10.0**k for k in range(60) for s in (-1, 1) if tx * 10.0**k < e}
    pts |= set(obs.model.breakpoints)
    knots = sorted(p for p in pts if 0 <= p <= zmax)

    def moment(fn):
        return integrate_pieces(lambda z: fn(z) / (4 * float(obs.g(z))) if obs.g(z) > 0 else 0.0, knots, rel=1e-10)

    z1 = lambda z: zeta_n(z, t0, e)  # noqa: E731
    z2 = lambda z: zeta_n(z - x, tx, e)  # noqa: E731
    i1, i2 = sqrt_chi_integrals(spec)
    c11 = moment(lambda z: z1(z) ** 2) - i1 * i1
    c22 = moment(lambda z: z2(z) ** 2) - i2 * i2
    c12 = moment(lambda z: z1(z) * z2(z)) - i1 * i2
    return np.array([[c11, c12], [c12, c22]]) / (m_hd(spec) ** 2 * math.log(spec.n))
