"""Forward simulation of the sectioning experiment.

A plane hits a sphere with probability proportional to its radius, so the
sectioned spheres follow the length-biased law ``dF^b = sqrt(x) dF / m0``.
The section of a sphere with squared radius ``X^b`` at uniform relative
height ``U`` has squared circle radius ``Z = (1 - U**2) X^b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import WicksellError
from .models import CdfModel, DiscreteExample, ObservationModel

TABLE_KNOTS = 2**12


@dataclass
class RngStream:
    """Reproducible random stream for replication ``stream`` under ``seed``.

    Streams are derived through :class:`numpy.random.SeedSequence` with the
    replication index as spawn key, so replications are independent and can
    run in any order or thread. A stream object must not be shared between
    threads.
    """

    seed: int
    stream: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        self.generator = np.random.Generator(np.random.PCG64(ss))


RngLike = Union[RngStream, np.random.Generator]


def _gen(rng: RngLike) -> np.random.Generator:
    return rng.generator if isinstance(rng, RngStream) else rng


@dataclass(frozen=True)
class SampleSet:
    """Sorted observed squared circle radii."""

    values: np.ndarray
    seed: Optional[int] = None
    provenance: str = "ingested"

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        if v.size and (not np.all(np.isfinite(v)) or v[0] < 0):
            raise ValueError("observations must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    @classmethod
    def from_radii(cls, radii, squared: bool = False, provenance: str = "ingested") -> "SampleSet":
        """Build from circle radii, squaring them unless ``squared`` is set."""
        r = np.asarray(radii, dtype=np.float64)
        if not squared and np.any(r < 0):
            raise ValueError("radii must be nonnegative")
        return cls(r if squared else r * r, provenance=provenance)


def sample_sphere(model: CdfModel, rng: RngLike, size: Optional[int] = None):
    """Squared sphere radii from F by the inverse-cdf method."""
    u = _gen(rng).random(size)
    return model.quantile(u)


def sample_biased(model: CdfModel, rng: RngLike, size: Optional[int] = None):
    """Squared radii of sectioned spheres, from ``dF^b = sqrt(x) dF / m0``."""
    out = model.sample_biased(_gen(rng), 1 if size is None else size)
    return float(out[0]) if size is None else out


def section(xb, u):
    """Squared circle radius of a sphere ``xb`` cut at relative height ``u``."""
    return (1.0 - np.square(u)) * xb


def sample_observation(model: CdfModel, rng: RngLike, size: Optional[int] = None):
    """Observed squared circle radii ``Z = (1 - U**2) X^b``."""
    gen = _gen(rng)
    n = 1 if size is None else size
    xb = model.sample_biased(gen, n)
    z = section(xb, gen.random(n))
    return float(z[0]) if size is None else z


def sample_dataset(model: CdfModel, n: int, seed: int, stream: int = 0) -> SampleSet:
    """``n`` sorted observations from replication ``stream`` of ``seed``."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    z = sample_observation(model, RngStream(seed, stream), n)
    return SampleSet(z, seed=seed, provenance=f"simulated:{model.spec}")


class ObservationTable:
    """Tabulated cdf of Z on ``2**12`` knots for inverse-cdf sampling.

    Knots ``z_k = z_max (1 - (1 - k/K)**2)`` cluster near the top of the
    support where the cdf behaves like a square root.
    """

    _cache: dict[str, "ObservationTable"] = {}

    def __init__(self, obs: ObservationModel, knots: int = TABLE_KNOTS):
        zmax = obs.model.upper_observation()
        k = np.arange(knots + 1) / knots
        z = zmax * (1.0 - (1.0 - k) ** 2)
        if isinstance(obs.model, DiscreteExample):
            cdf = 1.0 - obs.model.sqrt_tail_many(z) / obs.m0
        else:
            cdf = np.array([obs.z_cdf(float(v)) for v in z])
        cdf = np.clip(cdf, 0.0, 1.0)
        cdf[0], cdf[-1] = 0.0, 1.0
        cdf = np.maximum.accumulate(cdf)
        if not np.all(np.isfinite(cdf)) or cdf[-1] - cdf[0] <= 0:
            raise WicksellError("observation cdf table could not be built")
        self.z = z
        self.cdf = cdf
        self.interp = PchipInterpolator(z, cdf)

    @classmethod
    def for_obs(cls, obs: ObservationModel) -> "ObservationTable":
        key = obs.model.spec
        if key not in cls._cache:
            cls._cache[key] = cls(obs)
        return cls._cache[key]

    def quantile(self, p: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        j = np.clip(np.searchsorted(self.cdf, p, side="right") - 1, 0, self.z.size - 2)
        lo, hi = self.z[j].copy(), self.z[j + 1].copy()
        while np.max(hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            below = self.interp(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def sample_observation_inverse(obs: ObservationModel, rng: RngLike, size: Optional[int] = None):
    """Observed squared radii by inverting the tabulated cdf of Z.

    Independent of :func:`sample_observation`; used to cross-validate it.
    """
    table = ObservationTable.for_obs(obs)
    u = _gen(rng).random(1 if size is None else size)
    z = table.quantile(u)
    return float(z[0]) if size is None else z
