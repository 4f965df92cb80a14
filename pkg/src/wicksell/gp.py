"""Limiting Gaussian process in the locally flat regime.

With ``phi_t(z) = sqrt(z_+) - sqrt((z - t)_+)`` we have ``U_n = (2/n) sum phi(Z_i)``
and ``E phi_t(Z) = U(t) / 2``. The base kernel is ``Cov(phi_s(Z), phi_t(Z))``.
When F is constant on an interval ``K_x`` around ``x``, U is linear there and
``sqrt(n) (Vhat_n(x) - V(x))`` converges to the right derivative at ``x`` of the
least concave majorant, over ``K_x``, of a centred Gaussian process whose
covariance is that of ``sqrt(n) (U_n - U)``, i.e. four times the base kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import _backend
from .errors import NumericalError, WicksellError
from .models import ObservationModel
from .quadrature import gauss_legendre, integrate_pieces
from .sampling import RngStream

GL_ORDER = 16


def _phi(t, z):
    return np.sqrt(np.maximum(z, 0.0)) - np.sqrt(np.maximum(z - t, 0.0))


def base_kernel(obs: ObservationModel, s: float, t: float) -> float:
    """``Cov(phi_s(Z), phi_t(Z))`` by adaptive quadrature against g."""
    if s < 0 or t < 0:
        raise ValueError("kernel arguments must be nonnegative")
    if s == 0 or t == 0:
        return 0.0
    zmax = obs.model.upper_observation()
    pts = sorted({0.0, zmax, *(p for p in (s, t, *obs.model.breakpoints) if 0 < p < zmax)})

    def integrand(z):
        return float(_phi(s, z) * _phi(t, z) * obs.g(z))

    second = integrate_pieces(integrand, pts, rel=1e-11)
    return second - 0.25 * obs.u_exact(s) * obs.u_exact(t)


def _cells(obs: ObservationModel, grid: np.ndarray) -> np.ndarray:
    zmax = obs.model.upper_observation()
    pts = {0.0, zmax}
    pts.update(float(p) for p in grid if 0 < p < zmax)
    pts.update(float(p) for p in obs.model.breakpoints if 0 < p < zmax)
    return np.array(sorted(pts))


def kernel_matrix(obs: ObservationModel, grid: Sequence[float], order: int = GL_ORDER) -> np.ndarray:
    """Base kernel over ``grid`` as a symmetric matrix.

    Uses composite Gauss-Legendre on the cells between grid points and model
    breakpoints with ``z = a + (b - a) sin(pi u / 2)**2`` inside each cell,
    which smooths square-root behaviour at both cell ends. Then
    ``E phi_s phi_t = Phi diag(w g) Phi^T``.
    """
    grid = np.asarray(grid, dtype=float)
    edges = _cells(obs, grid)
    u, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    sn = np.sin(0.5 * math.pi * u)
    z = (a + (b - a) * sn**2).ravel()
    jac = ((b - a) * math.pi * sn * np.cos(0.5 * math.pi * u) * w).ravel()
    weights = jac * np.asarray(obs.g(z))
    phi = _phi(grid[:, None], z[None, :])
    second = (phi * weights) @ phi.T
    mean = 0.5 * np.array([obs.u_exact(float(s)) for s in grid])
    cov = second - np.outer(mean, mean)
    cov[grid == 0, :] = 0.0
    cov[:, grid == 0] = 0.0
    return 0.5 * (cov + cov.T)


def anchor_matrix(cov: np.ndarray, i: int) -> np.ndarray:
    """Covariance of ``Z(s) - Z(x)`` given that of ``Z`` and the anchor index ``i``."""
    out = cov - cov[:, [i]] - cov[[i], :] + cov[i, i]
    out[i, :] = 0.0
    out[:, i] = 0.0
    return out


@dataclass(frozen=True)
class GpSpec:
    """Discretised limit process anchored at ``x``.

    ``covariance`` is ``scale`` times the anchored base kernel on ``grid``;
    the default ``scale = 4`` matches the covariance of ``sqrt(n) (U_n - U)``.
    ``factor`` is a lower Cholesky factor of the covariance with the anchor
    row and column removed.
    """

    obs: ObservationModel
    x: float
    k_lo: float
    k_hi: float
    grid: np.ndarray
    anchor_index: int
    covariance: np.ndarray
    factor: np.ndarray
    scale: float = 4.0
    jitter: float = 0.0

    @property
    def in_interval(self) -> np.ndarray:
        return (self.grid >= self.k_lo - 1e-12) & (self.grid <= self.k_hi + 1e-12)


def default_grid(x: float, k_lo: float, k_hi: float, points: int = 241, margin: float = 0.25) -> np.ndarray:
    lo = max(k_lo - margin, 0.0)
    hi = k_hi + margin
    grid = np.linspace(lo, hi, points)
    for v in (k_lo, k_hi, x):
        grid[np.argmin(np.abs(grid - v))] = v
    return np.unique(grid)


def anchored_kernel(spec: GpSpec, s: float, t: float) -> float:
    """``K(s,t) - K(s,x) - K(x,t) + K(x,x)`` by adaptive quadrature."""
    obs, x = spec.obs, spec.x
    k = lambda a, b: base_kernel(obs, a, b)  # noqa: E731
    return k(s, t) - k(s, x) - k(x, t) + k(x, x)


def _factorize(cov: np.ndarray) -> tuple[np.ndarray, float]:
    m = cov.shape[0]
    if m == 0:
        return np.zeros((0, 0)), 0.0
    level = float(np.trace(cov)) / m
    eig_min = float(np.linalg.eigvalsh(cov)[0])
    if eig_min < -1e-8 * max(level, 1e-300):
        raise NumericalError(f"covariance is not positive semidefinite (min eigenvalue {eig_min:.3e})")
    if level == 0:
        return np.zeros_like(cov), 0.0
    jitter = 1e-10 * level
    for _ in range(4):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(m)), jitter
        except np.linalg.LinAlgError:
            jitter *= 10
    raise NumericalError("covariance factorisation failed after jitter")


def make_gp_spec(
    obs: ObservationModel,
    x: float,
    interval: Optional[tuple[float, float]] = None,
    grid: Optional[Sequence[float]] = None,
    points: int = 241,
    scale: float = 4.0,
) -> GpSpec:
    """Build the discretised limit process for a model flat around ``x``."""
    if interval is None:
        interval = obs.model.flat_interval(x)
        if interval is None:
            raise WicksellError(f"{obs.model.spec} is not flat at x={x}")
    k_lo, k_hi = map(float, interval)
    if not math.isfinite(k_hi):
        k_hi = max(obs.model.upper_observation(), x + 1.0)
    if not k_lo <= x <= k_hi:
        raise ValueError("anchor must lie in the flat interval")
    g = default_grid(x, k_lo, k_hi, points) if grid is None else np.unique(np.asarray(grid, dtype=float))
    hits = np.flatnonzero(np.isclose(g, x, rtol=0, atol=1e-12))
    if hits.size == 0:
        raise ValueError("anchor must be a grid point")
    i = int(hits[0])
    cov = scale * anchor_matrix(kernel_matrix(obs, g), i)
    keep = np.arange(g.size) != i
    factor, jitter = _factorize(cov[np.ix_(keep, keep)])
    return GpSpec(obs, float(x), k_lo, k_hi, g, i, cov, factor, float(scale), jitter)


def sample_paths(spec: GpSpec, n_paths: int, seed: int) -> np.ndarray:
    """Gaussian paths on the grid, one substream per path; zero at the anchor."""
    m = spec.grid.size
    out = np.zeros((n_paths, m))
    keep = np.arange(m) != spec.anchor_index
    for p in range(n_paths):
        eps = RngStream(seed, p).generator.standard_normal(m - 1)
        out[p, keep] = spec.factor @ eps
    return out


def hull_right_slope(s: np.ndarray, y: np.ndarray, x: float) -> float:
    """Right derivative at ``x`` of the least concave majorant of ``(s, y)``."""
    idx = _backend.upper_hull(s, y)
    hs, hy = s[idx], y[idx]
    j = int(np.searchsorted(hs, x, side="right")) - 1
    if j >= hs.size - 1:
        return 0.0 if hs.size == 1 else float((hy[-1] - hy[-2]) / (hs[-1] - hs[-2]))
    return float((hy[j + 1] - hy[j]) / (hs[j + 1] - hs[j]))


@dataclass(frozen=True)
class LxSample:
    values: np.ndarray
    n_paths: int
    seed: int


def l_x_from_paths(spec: GpSpec, paths: np.ndarray) -> np.ndarray:
    mask = spec.in_interval
    s = spec.grid[mask]
    return np.array([hull_right_slope(s, row[mask], spec.x) for row in paths])


def l_x_distribution(spec: GpSpec, n_paths: int, seed: int) -> LxSample:
    """Draws of the right slope at ``x`` of the majorant over the flat interval."""
    paths = sample_paths(spec, n_paths, seed)
    return LxSample(l_x_from_paths(spec, paths), n_paths, seed)


def switch_argmax(s: np.ndarray, y: np.ndarray, a: float) -> float:
    """Smallest maximiser of ``y - a s`` over the grid."""
    return float(s[int(np.argmax(y - a * s))])


def l_x_cdf_switch(spec: GpSpec, paths: np.ndarray, a: float) -> np.ndarray:
    """Indicators ``L_x <= a`` through the switch relation ``argmax(y - a s) <= x``."""
    mask = spec.in_interval
    s = spec.grid[mask]
    return np.array([switch_argmax(s, row[mask], a) <= spec.x for row in paths])


def kolmogorov_pvalue(lam: float, terms: int = 100) -> float:
    """Asymptotic Kolmogorov tail ``2 sum (-1)**(k-1) exp(-2 k**2 lam**2)``."""
    if lam < 0.05:
        return 1.0
    k = np.arange(1, terms + 1)
    p = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * lam * lam))
    return float(min(max(p, 0.0), 1.0))


def ks_fit_normal(values: Sequence[float]) -> tuple[float, float, float, float]:
    """Kolmogorov distance to the normal with fitted mean and sd.

    Returns ``(mean, sd, ks, p)``; the p-value ignores that the parameters
    were fitted and is therefore conservative.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size < 3:
        raise ValueError("need at least three values")
    mean, sd = float(v.mean()), float(v.std(ddof=1))
    if not sd > 0:
        raise ValueError("zero standard deviation")
    n = v.size
    cdf = stats.norm.cdf((v - mean) / sd)
    i = np.arange(1, n + 1)
    ks = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    return mean, sd, ks, kolmogorov_pvalue(math.sqrt(n) * ks)


def increment_second_moment(obs: ObservationModel, x: float, eps: float) -> float:
    """``E (sqrt((Z - x)_+) - sqrt((Z - x - eps)_+))**2`` by quadrature.

    On ``z > x + eps`` the squared difference is written as
    ``eps**2 / (sqrt(y + eps) + sqrt(y))**2`` with ``y = z - x - eps`` to avoid
    cancellation, and log-spaced breakpoints resolve the ``1/y`` decay.
    """
    zmax = obs.model.upper_observation()
    g = lambda z: float(obs.g(z))  # noqa: E731
    near = integrate_pieces(lambda z: (z - x) * g(z), [x, min(x + eps, zmax)], rel=1e-13, abs_tol=0.0)
    top = zmax - x - eps
    if top <= 0:
        return near
    pts = [eps * 10.0**k for k in range(0, 20) if eps * 10.0**k < top]
    pts += [b - x - eps for b in obs.model.breakpoints if 0 < b - x - eps < top]
    far = integrate_pieces(
        lambda y: eps * eps / (math.sqrt(y + eps) + math.sqrt(y)) ** 2 * g(x + eps + y),
        [0.0, *pts, top],
        rel=1e-13,
        abs_tol=0.0,
    )
    return near + far


def increment_ratio(obs: ObservationModel, x: float, eps: float, constant: float = 0.25) -> float:
    """Increment second moment over ``constant * eps**2 log(1/eps) g(x)``."""
    return increment_second_moment(obs, x, eps) / (constant * eps * eps * math.log(1 / eps) * float(obs.g(x)))
