"""Sphere-size distribution models and the induced observation law.

All distributions live on squared radii. A :class:`CdfModel` describes the
sphere law F; :class:`ObservationModel` adds the normalising constant
``m0 = E sqrt(X)`` and the density ``g`` of observed squared circle radii,

    g(z) = 1 / (2 m0) * integral_{x > z} dF(x) / sqrt(x - z).

The inversion identities ``V(x) = pi (1 - F(x)) / (2 m0)`` and
``U(x) = pi / (2 m0) * integral_0^x (1 - F)`` give exact oracles for the
estimators.
"""

from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import WicksellError
from .quadrature import integrate_1d, integrate_pieces

ArrayLike = float | np.ndarray | Sequence[float]


def _out(values: np.ndarray, like) -> float | np.ndarray:
    return float(values) if np.ndim(like) == 0 else values


@dataclass(frozen=True)
class SmoothnessSpec:
    """Declared local smoothness of F at 0 and at an anchor ``x``.

    ``H_0(delta) ~ K0 * delta**gamma0`` and ``H_x(delta) ~ Kx * |delta|**gammax``.
    """

    gamma0: float
    gammax: float
    K0: float
    Kx: float
    x: float

    def __post_init__(self):
        if not (self.gamma0 > 0.5 and self.gammax > 0.5):
            raise ValueError("smoothness exponents must exceed 1/2")
        if not (self.K0 > 0 and self.Kx > 0):
            raise ValueError("smoothness constants must be positive")


class CdfModel(ABC):
    """Sphere squared-radius distribution."""

    kind: str = ""
    atomic: bool = False

    # --- distribution -------------------------------------------------
    @abstractmethod
    def cdf(self, u: ArrayLike) -> float | np.ndarray: ...

    @abstractmethod
    def quantile(self, p: ArrayLike) -> float | np.ndarray: ...

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]: ...

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where F or its density is not smooth."""
        return self.support

    def pdf(self, u: ArrayLike) -> float | np.ndarray:
        raise WicksellError(f"{self.kind} has no density")

    @property
    def spec(self) -> str:
        return self.kind

    # --- functionals --------------------------------------------------
    def moment(self, p: float) -> float:
        """``integral y**p dF(y)``."""
        lo, hi = self.support
        pts = [b for b in self.breakpoints if lo < b < hi]
        return integrate_pieces(lambda y: y**p * self.pdf(y), [lo, *pts, hi])

    def m0(self) -> float:
        return self.moment(0.5)

    def expected_min(self, x: float) -> float:
        """``integral_0^x (1 - F(y)) dy = E min(X, x)``."""
        if x <= 0:
            return 0.0
        lo, hi = self.support
        top = min(x, hi)
        pts = [b for b in self.breakpoints if 0 < b < top]
        return integrate_pieces(lambda y: 1.0 - float(self.cdf(y)), [0.0, *pts, top])

    def g_unnormalized(self, z: float) -> float:
        """``integral_{x>z} dF(x) / sqrt(x - z)`` by quadrature.

        Substituting ``x = z + t**2`` removes the square-root singularity.
        """
        lo, hi = self.support
        if z >= hi:
            return 0.0
        t_hi = math.sqrt(hi - z)
        t_lo = math.sqrt(max(lo - z, 0.0))
        pts = [math.sqrt(b - z) for b in self.breakpoints if b > z]
        return 2.0 * integrate_pieces(lambda t: self.pdf(z + t * t), [t_lo, *pts, t_hi])

    def sqrt_tail(self, z: float) -> float:
        """``integral sqrt((x - z)_+) dF(x)``.

        The observation cdf is ``1 - sqrt_tail(z) / m0``. The base version
        integrates against the density; subclasses override with closed forms.
        """
        lo, hi = self.support
        if z >= hi:
            return 0.0
        a = max(lo, z)
        pts = [b for b in self.breakpoints if a < b < hi]
        return integrate_pieces(lambda x: math.sqrt(max(x - z, 0.0)) * float(self.pdf(x)), [a, *pts, hi])

    def upper_observation(self) -> float:
        """A point beyond which observations have negligible probability."""
        hi = self.support[1]
        return hi if math.isfinite(hi) else 1.5 * float(self.quantile(1 - 1e-14))

    def sample_biased(self, gen: np.random.Generator, size: int) -> np.ndarray:
        """Draws from the length-biased law ``dF^b = sqrt(x) dF / m0``."""
        return _BiasedTable.for_model(self).draw(gen, size)

    def smoothness(self, x: float) -> Optional[SmoothnessSpec]:
        """Declared smoothness at 0 and ``x``; None when F is flat at either."""
        return None

    def flat_interval(self, x: float) -> Optional[tuple[float, float]]:
        """Largest closed interval containing ``x`` on which F is constant."""
        return None

    def h_smooth(self, x: float, delta: float) -> float:
        """``H_x(delta) = integral_0^1 (F(x + u delta) - F(x)) du``."""
        if delta == 0:
            raise ValueError("delta must be nonzero")
        fx = float(self.cdf(x))
        pts = sorted({(b - x) / delta for b in self.breakpoints if 0 < (b - x) / delta < 1})
        return integrate_pieces(
            lambda u: float(self.cdf(x + u * delta)) - fx, [0.0, *pts, 1.0], abs_tol=0.0, rel=1e-11
        )

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.spec}>"


class Uniform01(CdfModel):
    """F uniform on [0, 1]."""

    kind = "uniform01"

    def cdf(self, u):
        return _out(np.clip(np.asarray(u, dtype=float), 0.0, 1.0), u)

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        return _out(((u > 0) & (u < 1)).astype(float), u)

    def quantile(self, p):
        return _out(np.clip(np.asarray(p, dtype=float), 0.0, 1.0), p)

    @property
    def support(self):
        return (0.0, 1.0)

    def moment(self, p):
        return 1.0 / (p + 1.0)

    def m0(self):
        return 2.0 / 3.0

    def expected_min(self, x):
        x = min(max(x, 0.0), 1.0)
        return x - 0.5 * x * x

    def g_unnormalized(self, z):
        return 2.0 * math.sqrt(max(1.0 - z, 0.0))

    def sqrt_tail(self, z):
        return (2.0 / 3.0) * max(1.0 - z, 0.0) ** 1.5

    def sample_biased(self, gen, size):
        return gen.random(size) ** (2.0 / 3.0)

    def smoothness(self, x):
        if not 0 < x < 1:
            return None
        return SmoothnessSpec(1.0, 1.0, 0.5, 0.5, x)


class GammaModel(CdfModel):
    """Gamma law on squared radii, shape ``k`` and rate ``r``."""

    kind = "gamma"

    def __init__(self, shape: float, rate: float = 1.0):
        if shape <= 0 or rate <= 0:
            raise ValueError("gamma shape and rate must be positive")
        self.shape = float(shape)
        self.rate = float(rate)

    @property
    def spec(self):
        return f"gamma:{self.shape:g}:{self.rate:g}"

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        return _out(special.gammainc(self.shape, self.rate * np.maximum(u, 0.0)), u)

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        k, r = self.shape, self.rate
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(
                u > 0,
                np.exp(k * math.log(r) + (k - 1) * np.log(np.where(u > 0, u, 1.0)) - r * u - special.gammaln(k)),
                0.0,
            )
        return _out(val, u)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return _out(special.gammaincinv(self.shape, p) / self.rate, p)

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def breakpoints(self):
        return (0.0,)

    def moment(self, p):
        k = self.shape
        if k + p <= 0:
            raise WicksellError("divergent moment")
        return math.exp(special.gammaln(k + p) - special.gammaln(k) - p * math.log(self.rate))

    def m0(self):
        return self.moment(0.5)

    def expected_min(self, x):
        if x <= 0:
            return 0.0
        k, r = self.shape, self.rate
        return x * special.gammaincc(k, r * x) + (k / r) * special.gammainc(k + 1, r * x)

    def _tricomi_term(self, a: float, z: float) -> float:
        # integral_{x>z} f(x) (x - z)**(a - 1) dx for a = 1/2, 3/2
        k, r = self.shape, self.rate
        if z <= 0:
            if k + a - 1 <= 0:
                return math.inf
            return math.exp(special.gammaln(k + a - 1) - special.gammaln(k) - (a - 1) * math.log(r))
        hu = special.hyperu(a, k + a, r * z)
        if not np.isfinite(hu) or hu <= 0:
            return math.nan
        return math.exp(
            k * math.log(r) - special.gammaln(k) - r * z + special.gammaln(a) + (k + a - 1) * math.log(z) + math.log(hu)
        )

    def g_unnormalized(self, z):
        val = self._tricomi_term(0.5, z)
        if math.isnan(val):
            return CdfModel.g_unnormalized(self, z)
        return val

    def sqrt_tail(self, z):
        val = self._tricomi_term(1.5, z)
        return CdfModel.sqrt_tail(self, z) if math.isnan(val) else val

    def upper_observation(self):
        # Z <= X^b and X^b is Gamma(k + 1/2, r)
        return float(special.gammaincinv(self.shape + 0.5, 1 - 1e-14)) / self.rate

    def sample_biased(self, gen, size):
        return gen.gamma(self.shape + 0.5, 1.0 / self.rate, size)

    def smoothness(self, x):
        k, r = self.shape, self.rate
        if k <= 0.5 or x <= 0:
            return None
        K0 = math.exp(k * math.log(r) - special.gammaln(k + 1)) / (k + 1)
        return SmoothnessSpec(k, 1.0, K0, float(self.pdf(x)) / 2.0, x)


class FlatMixture(CdfModel):
    """Piecewise-constant density on disjoint intervals; F is flat in the gaps."""

    kind = "flat"

    def __init__(self, pieces: Sequence[tuple[float, float, float]]):
        ps = sorted((float(a), float(b), float(d)) for a, b, d in pieces)
        if not ps:
            raise ValueError("flat mixture needs at least one piece")
        for a, b, d in ps:
            if not (0 <= a < b) or d < 0:
                raise ValueError(f"invalid piece ({a}, {b}, {d})")
        for (_, b1, _), (a2, _, _) in zip(ps[:-1], ps[1:]):
            if a2 < b1:
                raise ValueError("flat mixture pieces overlap")
        mass = sum((b - a) * d for a, b, d in ps)
        if abs(mass - 1.0) > 1e-9:
            raise ValueError(f"flat mixture mass is {mass}, not 1")
        self.pieces = tuple(ps)
        self._a = np.array([p[0] for p in ps])
        self._b = np.array([p[1] for p in ps])
        self._d = np.array([p[2] for p in ps])
        self._cum = np.concatenate([[0.0], np.cumsum((self._b - self._a) * self._d)])
        self._cum[-1] = 1.0

    @property
    def spec(self):
        return "flat:" + ";".join(f"{a:g},{b:g},{d:g}" for a, b, d in self.pieces)

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        span = np.clip(u[..., None] - self._a, 0.0, self._b - self._a)
        return _out(np.clip((span * self._d).sum(axis=-1), 0.0, 1.0), u)

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u[..., None] > self._a) & (u[..., None] < self._b)
        return _out((inside * self._d).sum(axis=-1), u)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        j = np.clip(np.searchsorted(self._cum, p, side="left") - 1, 0, len(self.pieces) - 1)
        return _out(self._a[j] + np.maximum(p - self._cum[j], 0.0) / self._d[j], p)

    @property
    def support(self):
        return (float(self._a[0]), float(self._b[-1]))

    @property
    def breakpoints(self):
        return tuple(sorted(set(self._a) | set(self._b)))

    def moment(self, p):
        return float(np.sum(self._d * (self._b ** (p + 1) - self._a ** (p + 1)) / (p + 1)))

    def m0(self):
        return self.moment(0.5)

    def expected_min(self, x):
        a, b, d = self._a, self._b, self._d
        full = (b * b - a * a) / 2
        part = (np.clip(x, a, b) ** 2 - a * a) / 2 + x * (b - np.clip(x, a, b))
        val = np.where(x >= b, full, np.where(x <= a, x * (b - a), part))
        return float(np.sum(d * val))

    def g_unnormalized(self, z):
        return float(
            np.sum(2 * self._d * (np.sqrt(np.maximum(self._b - z, 0.0)) - np.sqrt(np.maximum(self._a - z, 0.0))))
        )

    def sqrt_tail(self, z):
        return float(
            np.sum((2.0 / 3.0) * self._d * (np.maximum(self._b - z, 0.0) ** 1.5 - np.maximum(self._a - z, 0.0) ** 1.5))
        )

    def sample_biased(self, gen, size):
        # F^b is a sum of d * (2/3) (x**1.5 - a**1.5) / m0 pieces, inverted in closed form
        m0 = self.m0()
        contrib = self._d * (2.0 / 3.0) * (self._b**1.5 - self._a**1.5)
        cum = np.concatenate([[0.0], np.cumsum(contrib)])
        w = gen.random(size) * cum[-1]
        j = np.clip(np.searchsorted(cum, w, side="right") - 1, 0, len(contrib) - 1)
        with np.errstate(divide="ignore"):
            x = (self._a[j] ** 1.5 + 1.5 * (w - cum[j]) / self._d[j]) ** (2.0 / 3.0)
        del m0
        return np.clip(x, self._a[j], self._b[j])

    def flat_interval(self, x):
        if x < 0:
            return None
        edges = [0.0]
        for a, b, _ in self.pieces:
            edges += [a, b]
        # gaps are [0, a1], [b1, a2], ...; the last gap is unbounded
        gaps = [(edges[2 * i], edges[2 * i + 1]) for i in range(len(self.pieces))]
        gaps.append((float(self._b[-1]), math.inf))
        for lo, hi in gaps:
            if lo <= x <= hi and hi > lo:
                return (lo, hi)
        return None

    def smoothness(self, x):
        if self.flat_interval(0.0) is not None or self.flat_interval(x) is not None:
            return None
        d0 = float(self._d[0])
        dx = float(self.pdf(x))
        if d0 <= 0 or dx <= 0:
            return None
        return SmoothnessSpec(1.0, 1.0, d0 / 2, dx / 2, x)


FLAT_DEFAULT = ((0.5, 2.0, 0.4), (3.0, 4.0, 0.4))


class PointMass(CdfModel):
    """All spheres have squared radius ``a``."""

    kind = "point"
    atomic = True

    def __init__(self, a: float):
        if a <= 0:
            raise ValueError("point mass location must be positive")
        self.a = float(a)

    @property
    def spec(self):
        return f"point:{self.a:g}"

    @property
    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.a]), np.array([1.0])

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        return _out((u >= self.a).astype(float), u)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return _out(np.full(p.shape, self.a), p)

    @property
    def support(self):
        return (self.a, self.a)

    def moment(self, p):
        return self.a**p

    def m0(self):
        return math.sqrt(self.a)

    def expected_min(self, x):
        return min(max(x, 0.0), self.a)

    def g_unnormalized(self, z):
        return math.inf if z == self.a else (1.0 / math.sqrt(self.a - z) if z < self.a else 0.0)

    def sqrt_tail(self, z):
        return math.sqrt(max(self.a - z, 0.0))

    def sample_biased(self, gen, size):
        return np.full(size, self.a)

    def flat_interval(self, x):
        if 0 <= x < self.a:
            return (0.0, self.a)
        if x > self.a:
            return (self.a, math.inf)
        return None

    def h_smooth(self, x, delta):
        return _atomic_h(self, x, delta)


class HolderPoint(CdfModel):
    """``F(u) = base + K sgn(u - x0) |u - x0|**gamma`` on its natural support.

    Outside the support F is 0 on the left and 1 on the right; F is exactly
    Hölder of degree ``gamma`` at ``x0``.
    """

    kind = "holder"

    def __init__(self, x0: float, gamma: float, K: float = 1.0, base: float = 0.5):
        if not (0 < base < 1) or K <= 0 or gamma <= 0:
            raise ValueError("holder model needs 0 < base < 1, K > 0, gamma > 0")
        self.x0, self.gamma, self.K, self.base = float(x0), float(gamma), float(K), float(base)
        self.lo = self.x0 - (self.base / self.K) ** (1 / self.gamma)
        self.hi = self.x0 + ((1 - self.base) / self.K) ** (1 / self.gamma)
        if self.lo < 0:
            raise ValueError(f"holder support starts at {self.lo} < 0; increase x0 or K")

    @property
    def spec(self):
        return f"holder:x0={self.x0:g},gamma={self.gamma:g},K={self.K:g},base={self.base:g}"

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        d = u - self.x0
        val = self.base + self.K * np.sign(d) * np.abs(d) ** self.gamma
        return _out(np.clip(val, 0.0, 1.0), u)

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        d = np.abs(u - self.x0)
        inside = (u > self.lo) & (u < self.hi) & (d > 0)
        with np.errstate(divide="ignore"):
            val = np.where(inside, self.K * self.gamma * np.where(d > 0, d, 1.0) ** (self.gamma - 1), 0.0)
        return _out(val, u)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        below = self.x0 - (np.maximum(self.base - p, 0.0) / self.K) ** (1 / self.gamma)
        above = self.x0 + (np.maximum(p - self.base, 0.0) / self.K) ** (1 / self.gamma)
        return _out(np.where(p < self.base, below, above), p)

    @property
    def support(self):
        return (self.lo, self.hi)

    @property
    def breakpoints(self):
        return (self.lo, self.x0, self.hi)

    def moment(self, p):
        kg = self.K * self.gamma
        w = self.gamma - 1
        left = integrate_1d(lambda y: y**p, self.lo, self.x0, weight="alg", wvar=(0.0, w)) if self.x0 > self.lo else 0.0
        right = integrate_1d(lambda y: y**p, self.x0, self.hi, weight="alg", wvar=(w, 0.0))
        return kg * (left + right)

    def g_unnormalized(self, z):
        if z >= self.hi:
            return 0.0
        kg, w = self.K * self.gamma, self.gamma - 1
        total = 0.0
        if z < self.x0:
            # left piece: (x0 - x)**w (x - z)**(-1/2) on [max(lo, z), x0]
            a = max(self.lo, z)
            if z >= self.lo:
                total += integrate_1d(lambda x: 1.0, a, self.x0, weight="alg", wvar=(-0.5, w))
            else:
                total += integrate_1d(lambda x: 1.0 / math.sqrt(x - z), a, self.x0, weight="alg", wvar=(0.0, w))
            # right piece: (x - x0)**w smooth factor 1/sqrt(x - z)
            total += integrate_1d(lambda x: 1.0 / math.sqrt(x - z), self.x0, self.hi, weight="alg", wvar=(w, 0.0))
        else:
            total += integrate_1d(lambda x: (x - self.x0) ** w, z, self.hi, weight="alg", wvar=(-0.5, 0.0))
        return kg * total

    def sqrt_tail(self, z):
        if z >= self.hi:
            return 0.0
        kg, w = self.K * self.gamma, self.gamma - 1
        total = 0.0
        if z < self.x0:
            a = max(self.lo, z)
            if z >= self.lo:
                total += integrate_1d(lambda x: 1.0, a, self.x0, weight="alg", wvar=(0.5, w))
            else:
                total += integrate_1d(lambda x: math.sqrt(x - z), a, self.x0, weight="alg", wvar=(0.0, w))
            total += integrate_1d(lambda x: math.sqrt(x - z), self.x0, self.hi, weight="alg", wvar=(w, 0.0))
        else:
            total += integrate_1d(lambda x: (x - self.x0) ** w, z, self.hi, weight="alg", wvar=(0.5, 0.0))
        return kg * total

    def flat_interval(self, x):
        if self.lo > 0 and 0 <= x <= self.lo:
            return (0.0, self.lo)
        if x >= self.hi:
            return (self.hi, math.inf)
        return None

    def smoothness(self, x):
        if self.lo > 0 or not (self.lo < x < self.hi):
            return None
        # support touches 0: F is C^1 there with slope K gamma x0**(gamma - 1)
        slope = self.K * self.gamma * self.x0 ** (self.gamma - 1)
        if x == self.x0:
            return SmoothnessSpec(1.0, self.gamma, slope / 2, self.K / (1 + self.gamma), x)
        return SmoothnessSpec(1.0, 1.0, slope / 2, float(self.pdf(x)) / 2, x)

    def local_constant(self) -> float:
        """Limit of ``H_x0(delta) / |delta|**gamma``."""
        return self.K / (1 + self.gamma)


class DiscreteExample(CdfModel):
    """Atoms at ``x0 + t_i`` and ``x0 - t_i`` with ``t_i = i**(-1/gamma)``.

    Each side carries mass ``3 / (pi**2 i**2)``, so the two sides together
    place ``6 / (pi**2 i**2)`` at distance ``t_i`` from ``x0`` and F is
    Hölder of degree ``gamma`` at ``x0``. Numerical functionals use the
    first ``2**16`` atoms on each side and lump the remaining mass at ``x0``;
    the lumping error is second order in ``t_N`` and below 1e-15.
    """

    kind = "discrete"
    atomic = True
    N_ATOMS = 2**16

    def __init__(self, x0: float, gamma: float):
        if gamma <= 0.5:
            raise ValueError("discrete example needs gamma > 1/2 for a finite density")
        if x0 < 1:
            raise ValueError("discrete example needs x0 >= 1 so that all atoms are nonnegative")
        self.x0, self.gamma = float(x0), float(gamma)

    @property
    def spec(self):
        return f"discrete:x0={self.x0:g},gamma={self.gamma:g}"

    @cached_property
    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        i = np.arange(1, self.N_ATOMS + 1, dtype=float)
        t = i ** (-1.0 / self.gamma)
        w = 3.0 / (math.pi**2 * i * i)
        lump = (6.0 / math.pi**2) * float(special.polygamma(1, self.N_ATOMS + 1))
        x = np.concatenate([self.x0 - t[::-1], [self.x0], self.x0 + t])
        wt = np.concatenate([w[::-1], [lump], w])
        return x, wt

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        c = 3.0 / math.pi**2
        d = u - self.x0
        with np.errstate(divide="ignore", over="ignore"):
            m_right = np.ceil(np.where(d > 0, d, 1.0) ** (-self.gamma))
            right = 0.5 + c * special.polygamma(1, np.maximum(m_right, 1.0))
            m_left = np.floor(np.where(d < 0, -d, 1.0) ** (-self.gamma)) + 1
            left = 0.5 - c * special.polygamma(1, m_left)
        val = np.where(d > 0, right, np.where(d < 0, left, 0.5))
        val = np.where(u <= 0, 0.0, np.where(d >= 1, 1.0, val))
        return _out(np.clip(val, 0.0, 1.0), u)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        flat = np.atleast_1d(p).ravel()
        out = np.empty_like(flat)
        c = math.pi**2 / 3.0
        for sel, right in ((flat < 0.5, False), (flat > 0.5, True)):
            q = flat[sel]
            if right:
                # largest i with psi1(i) >= (q - 1/2) pi^2 / 3
                target = (q - 0.5) * c
                lo, hi = np.ones_like(q), np.full_like(q, 2.0**60)
                ok = lambda i: special.polygamma(1, i) >= target  # noqa: E731
            else:
                # smallest i with psi1(i + 1) <= (1/2 - q) pi^2 / 3
                target = (0.5 - q) * c
                lo, hi = np.ones_like(q), np.full_like(q, 2.0**60)
                ok = lambda i: special.polygamma(1, i + 1) > target  # noqa: E731
            # integer bisection: keep ok(lo) true and ok(hi) false
            lo_ok = ok(lo)
            for _ in range(64):
                mid = np.floor((lo + hi) / 2)
                good = ok(mid)
                lo = np.where(good, mid, lo)
                hi = np.where(good, hi, mid)
                if np.all(hi - lo <= 1):
                    break
            if right:
                i = np.where(lo_ok, lo, 1.0)
                out[sel] = self.x0 + i ** (-1.0 / self.gamma)
            else:
                i = np.where(lo_ok, hi, 1.0)
                out[sel] = self.x0 - i ** (-1.0 / self.gamma)
        out[flat == 0.5] = self.x0
        out[flat <= 0] = max(self.x0 - 1.0, 0.0)
        out[flat >= 1] = self.x0 + 1.0
        return float(out[0]) if np.ndim(p) == 0 else out.reshape(p.shape)

    @property
    def support(self):
        return (self.x0 - 1.0, self.x0 + 1.0)

    @property
    def breakpoints(self):
        return (self.x0 - 1.0, self.x0, self.x0 + 1.0)

    def moment(self, p):
        x, w = self.atoms
        return float(np.sum(w * np.where(x > 0, x, 0.0) ** p)) if p > 0 else float(np.sum(w))

    def m0(self):
        return self.moment(0.5)

    def expected_min(self, x):
        xs, w = self.atoms
        return float(np.sum(w * np.minimum(xs, max(x, 0.0))))

    def g_unnormalized(self, z):
        xs, w = self.atoms
        d = xs - z
        if np.any(d == 0):
            return math.inf
        m = d > 0
        return float(np.sum(w[m] / np.sqrt(d[m])))

    def sqrt_tail(self, z):
        xs, w = self.atoms
        return float(np.sum(w * np.sqrt(np.maximum(xs - z, 0.0))))

    def sqrt_tail_many(self, z: np.ndarray, chunk: int = 256) -> np.ndarray:
        xs, w = self.atoms
        z = np.asarray(z, dtype=float)
        out = np.empty(z.size)
        for s in range(0, z.size, chunk):
            d = xs[None, :] - z[s:s + chunk, None]
            out[s:s + chunk] = (w * np.sqrt(np.maximum(d, 0.0))).sum(axis=1)
        return out

    def sample_biased(self, gen, size):
        out = np.empty(size)
        filled = 0
        top = math.sqrt(self.x0 + 1.0)
        while filled < size:
            k = max(64, int(1.3 * (size - filled)))
            x = np.asarray(self.quantile(gen.random(k)))
            keep = x[gen.random(k) * top < np.sqrt(x)]
            take = min(size - filled, keep.size)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out

    def h_smooth(self, x, delta):
        if x == self.x0 and delta > 0:
            m = math.ceil(delta ** (-self.gamma))
            c = 3.0 / math.pi**2
            return c * (float(special.polygamma(1, m)) - float(special.zeta(2 + 1 / self.gamma, m)) / delta)
        return _atomic_h(self, x, delta)

    def local_constant(self) -> float:
        """Limit of ``H_x0(delta) / delta**gamma`` for ``delta -> 0+``."""
        return 3.0 / (math.pi**2 * (1 + self.gamma))


def _atomic_h(model, x: float, delta: float) -> float:
    if delta == 0:
        raise ValueError("delta must be nonzero")
    xs, w = model.atoms
    if delta > 0:
        m = (xs > x) & (xs <= x + delta)
        return float(np.sum(w[m] * (1 - (xs[m] - x) / delta)))
    m = (xs > x + delta) & (xs <= x)
    return -float(np.sum(w[m] * (1 - (x - xs[m]) / -delta)))


class _BiasedTable:
    """Inverse-cdf sampler for ``F^b`` through the quantile scale of F.

    With ``B(q) = integral_0^q sqrt(Q(s)) ds / m0`` and ``Q`` the quantile of F,
    ``X^b = Q(B^{-1}(W))`` for uniform ``W``. ``B`` is tabulated on 2**12
    knots by Gauss-Legendre panels and inverted by bisection on its monotone
    cubic interpolant.
    """

    _cache: dict[str, "_BiasedTable"] = {}
    KNOTS = 2**12

    def __init__(self, model: CdfModel):
        from scipy.interpolate import PchipInterpolator

        from .quadrature import gauss_legendre

        self.model = model
        q = np.linspace(0.0, 1.0, self.KNOTS + 1)
        nodes, weights = gauss_legendre(12)
        a, b = q[:-1, None], q[1:, None]
        pts = a + (b - a) * nodes
        vals = np.sqrt(np.maximum(np.asarray(model.quantile(pts)), 0.0))
        cum = np.concatenate([[0.0], np.cumsum(((b - a) * weights * vals).sum(axis=1))])
        self.q = q
        self.cum = cum / cum[-1]
        self.interp = PchipInterpolator(q, self.cum)

    @classmethod
    def for_model(cls, model: CdfModel) -> "_BiasedTable":
        key = model.spec
        if key not in cls._cache:
            cls._cache[key] = cls(model)
        return cls._cache[key]

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        w = gen.random(size)
        j = np.clip(np.searchsorted(self.cum, w, side="right") - 1, 0, self.KNOTS - 1)
        lo, hi = self.q[j], self.q[j + 1]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            below = self.interp(mid) < w
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < 1e-12:
                break
        return np.asarray(self.model.quantile(0.5 * (lo + hi)))


class ObservationModel:
    """Law of observed squared circle radii induced by a sphere model."""

    def __init__(self, model: CdfModel):
        self.model = model
        self.m0 = float(model.m0())
        if not (self.m0 > 0 and math.isfinite(self.m0)):
            raise WicksellError(f"m0 = {self.m0} is not a positive finite number")

    def __repr__(self) -> str:
        return f"ObservationModel({self.model.spec}, m0={self.m0:.6g})"

    @property
    def z_max(self) -> float:
        return self.model.support[1]

    def g(self, z: ArrayLike) -> float | np.ndarray:
        """Observation density; ``+inf`` exactly at an atom."""
        arr = np.asarray(z, dtype=float)
        if np.any(arr < 0):
            raise ValueError("observation density is defined for z >= 0")
        flat = arr.ravel()
        if isinstance(self.model, Uniform01):
            vals = 1.5 * np.sqrt(np.maximum(1.0 - flat, 0.0))
        elif isinstance(self.model, FlatMixture):
            m = self.model
            diff = np.sqrt(np.maximum(m._b - flat[:, None], 0.0)) - np.sqrt(np.maximum(m._a - flat[:, None], 0.0))
            vals = (2 * m._d * diff).sum(axis=1) / (2 * self.m0)
        else:
            vals = np.array([self.model.g_unnormalized(float(v)) for v in flat]) / (2 * self.m0)
        return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)

    def g_quad(self, z: float) -> float:
        """Observation density by quadrature of the defining integral (oracle route)."""
        return CdfModel.g_unnormalized(self.model, z) / (2 * self.m0)

    def z_cdf(self, z: float) -> float:
        """Cdf of Z, ``1 - integral sqrt((x - z)_+) dF / m0``."""
        if z <= 0:
            return 0.0
        return min(max(1.0 - self.model.sqrt_tail(z) / self.m0, 0.0), 1.0)

    def v_exact(self, x: float) -> float:
        return math.pi * (1.0 - float(self.model.cdf(x))) / (2 * self.m0)

    def u_exact(self, x: float) -> float:
        return math.pi * self.model.expected_min(max(x, 0.0)) / (2 * self.m0)

    def v_quad(self, x: float) -> float:
        """``V(x) = integral_{z>x} g(z) / sqrt(z - x) dz`` by quadrature (oracle)."""
        hi = self.z_max
        if not math.isfinite(hi):
            hi = float(self.model.quantile(1 - 1e-16))
        if x >= hi:
            return 0.0
        t_hi = math.sqrt(hi - x)
        pts = [math.sqrt(b - x) for b in self.model.breakpoints if b > x]
        return 2.0 * integrate_pieces(lambda t: float(self.g(x + t * t)), [0.0, *pts, t_hi], rel=1e-10)

    def mean_z(self) -> float:
        """``E Z = (2 / (3 m0)) integral y**1.5 dF``."""
        return 2.0 * self.model.moment(1.5) / (3.0 * self.m0)


# ---- module-level API ------------------------------------------------------


def cdf_eval(model: CdfModel, u: ArrayLike):
    return model.cdf(u)


def m0(model: CdfModel) -> float:
    return float(model.m0())


def g_eval(obs: ObservationModel, z: ArrayLike):
    return obs.g(z)


def v_exact(obs: ObservationModel, x: float) -> float:
    return obs.v_exact(x)


def u_exact(obs: ObservationModel, x: float) -> float:
    return obs.u_exact(x)


def h_smooth(model: CdfModel, x: float, delta: float) -> float:
    return model.h_smooth(x, delta)


_KV = re.compile(r"^\s*(\w+)\s*=\s*([^,]+)\s*$")


def _kv(text: str) -> dict[str, float]:
    out = {}
    for part in text.split(","):
        m = _KV.match(part)
        if not m:
            raise ValueError(f"expected key=value, got {part!r}")
        out[m.group(1)] = float(m.group(2))
    return out


def parse_model(text: str) -> CdfModel:
    """Build a model from its spec string.

    Grammar: ``uniform01``, ``gamma:<shape>:<rate>`` (or ``gamma:<shape>:scale=<s>``),
    ``flat:default``, ``flat:<a1>,<b1>,<d1>;<a2>,<b2>,<d2>``,
    ``holder:x0=..,gamma=..,K=..,base=..``, ``discrete:x0=..,gamma=..``,
    ``point:<a>``.
    """
    s = text.strip()
    head, _, rest = s.partition(":")
    head = head.lower()
    try:
        if head == "uniform01" and not rest:
            return Uniform01()
        if head == "gamma":
            shape_s, _, rate_s = rest.partition(":")
            if rate_s.startswith("scale="):
                return GammaModel(float(shape_s), 1.0 / float(rate_s[6:]))
            return GammaModel(float(shape_s), float(rate_s) if rate_s else 1.0)
        if head == "flat":
            if rest == "default":
                return FlatMixture(FLAT_DEFAULT)
            pieces = [tuple(float(v) for v in p.split(",")) for p in rest.split(";") if p.strip()]
            if any(len(p) != 3 for p in pieces):
                raise ValueError("flat pieces need three numbers a,b,d")
            return FlatMixture(pieces)
        if head == "holder":
            kv = _kv(rest)
            return HolderPoint(kv["x0"], kv["gamma"], kv.get("K", 1.0), kv.get("base", 0.5))
        if head == "discrete":
            kv = _kv(rest)
            return DiscreteExample(kv["x0"], kv["gamma"])
        if head == "point":
            return PointMass(float(rest))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad model spec {text!r}: {exc}") from exc
    raise ValueError(f"unknown model spec {text!r}")
