"""Monte Carlo and deterministic experiments behind the command line."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import WicksellError
from .estimators import f_hat, f_naive, lcm, v_n
from .gp import GpSpec, l_x_distribution, make_gp_spec, kernel_matrix, sample_paths, l_x_from_paths, ks_fit_normal
from .lan import (
    PerturbationSpec,
    check_monotone,
    delta_n,
    efficient_variance,
    hadamard_ladder,
    j_matrix,
    loglik_sum,
    psi_dot,
    score_covariance,
)
from .models import CdfModel, ObservationModel
from .sampling import SampleSet, sample_dataset

log = logging.getLogger(__name__)


def _map(fn: Callable[[int], object], reps: int, threads: int = 1) -> list:
    """Evaluate ``fn(r)`` for each replication; order of results is by ``r``."""
    if threads <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(reps)))


def _var(x: np.ndarray) -> Optional[float]:
    return float(np.var(x, ddof=1)) if x.size > 1 else None


# --- estimation ----------------------------------------------------------------


def estimate_table(sample: SampleSet, grid: Sequence[float]) -> dict[str, np.ndarray]:
    """Columns ``x, f_hat, v_hat, f_naive`` on ``grid``.

    ``f_naive`` is NaN where it is undefined (grid point equal to an
    observation, or an observation at 0).
    """
    grid = np.asarray(grid, dtype=float)
    maj = lcm(sample)
    fh = np.asarray(f_hat(sample, grid, maj=maj))
    vh = np.asarray(maj.slope_at(grid))
    fn = np.full(grid.size, np.nan)
    for i, g in enumerate(grid):
        try:
            fn[i] = f_naive(sample, float(g))
        except WicksellError:
            pass
    return {"x": grid, "f_hat": fh, "v_hat": vh, "f_naive": fn}


# --- isotonic vs naive variance ---------------------------------------------------


@dataclass
class McReport:
    """Replication results for the pointwise estimators at ``x``."""

    model: str
    x: float
    n: int
    reps: int
    seed: int
    gamma0: float
    gammax: float
    iie_errors: np.ndarray
    naive_errors: np.ndarray
    iie_variance: Optional[float]
    naive_variance: Optional[float]
    variance_ratio: Optional[float]
    theory_variance: float
    ks: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "x": self.x,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "gamma0": self.gamma0,
            "gammax": self.gammax,
            "scaling": "sqrt(n/log n)",
            "iie_mean": float(np.mean(self.iie_errors)),
            "iie_variance": self.iie_variance,
            "naive_variance": self.naive_variance,
            "variance_ratio": self.variance_ratio,
            "theory_variance": self.theory_variance,
            "iie_variance_over_theory": None
            if self.iie_variance is None
            else self.iie_variance / self.theory_variance,
            "ks_standardized_iie": self.ks,
        }


def _gammas(model: CdfModel, x: float, gamma0: Optional[float], gammax: Optional[float]) -> tuple[float, float]:
    if gamma0 is not None and gammax is not None:
        return float(gamma0), float(gammax)
    sm = model.smoothness(x)
    if sm is None:
        raise WicksellError(f"{model.spec} has no declared smoothness at 0 and x={x}; pass gamma0 and gammax")
    return (float(gamma0) if gamma0 is not None else sm.gamma0, float(gammax) if gammax is not None else sm.gammax)


def run_mc_variance(
    model: CdfModel,
    x: float,
    n: int,
    reps: int,
    seed: int,
    gamma0: Optional[float] = None,
    gammax: Optional[float] = None,
    threads: int = 1,
) -> McReport:
    """Replicate both estimators of ``F(x)`` and compare their spreads.

    Errors are scaled by ``sqrt(n / log n)``. The KS entry compares the
    standardised isotonic errors (own mean and sd) with N(0, 1).
    """
    if x <= 0:
        raise ValueError("x must be positive")
    if reps < 1 or n < 2:
        raise ValueError("need reps >= 1 and n >= 2")
    g0, gx = _gammas(model, x, gamma0, gammax)
    obs = ObservationModel(model)
    fx = float(model.cdf(x))
    scale = math.sqrt(n / math.log(n))

    def one(r: int) -> tuple[float, float]:
        try:
            s = sample_dataset(model, n, seed, r)
            a = f_hat(s, x)
            try:
                b = f_naive(s, x)
            except WicksellError:
                b = math.nan
            return scale * (a - fx), scale * (b - fx)
        except Exception as exc:
            raise WicksellError(f"replication {r} failed: {exc}") from exc

    res = np.array(_map(one, reps, threads)).reshape(reps, 2)
    iie, naive = res[:, 0], res[:, 1]
    vi = _var(iie)
    finite = naive[np.isfinite(naive)]
    vn = _var(finite)
    ks = None
    if reps >= 8 and vi:
        mean, sd, d, p = ks_fit_normal(iie)
        ks = {"mean": mean, "sd": sd, "ks": d, "p": p}
    return McReport(
        model=model.spec,
        x=float(x),
        n=int(n),
        reps=int(reps),
        seed=int(seed),
        gamma0=g0,
        gammax=gx,
        iie_errors=iie,
        naive_errors=naive,
        iie_variance=vi,
        naive_variance=vn,
        variance_ratio=None if (vi is None or vn is None) else vn / vi,
        theory_variance=efficient_variance(obs, x, g0, gx),
        ks=ks,
    )


# --- flat regime ----------------------------------------------------------------


@dataclass
class FlatRateReport:
    model: str
    x: float
    ns: list[int]
    reps: int
    seed: int
    sd_unscaled: list[float]
    sd_scaled: list[float]
    slope_unscaled: float
    slope_scaled: float
    scaled_errors: dict[int, np.ndarray] = field(repr=False)
    ks_n: Optional[int] = None
    ks_reps: Optional[int] = None
    ks_statistic: Optional[float] = None
    ks_pvalue: Optional[float] = None
    lx_paths: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "x": self.x,
            "ns": self.ns,
            "reps": self.reps,
            "seed": self.seed,
            "sd_unscaled": self.sd_unscaled,
            "sd_scaled": self.sd_scaled,
            "slope_unscaled": self.slope_unscaled,
            "slope": self.slope_scaled,
            "ks_n": self.ks_n,
            "ks_reps": self.ks_reps,
            "ks_vs_lx": self.ks_statistic,
            "ks_vs_lx_p": self.ks_pvalue,
            "lx_paths": self.lx_paths,
        }


def flat_errors(model: CdfModel, x: float, n: int, reps: int, seed: int, threads: int = 1) -> np.ndarray:
    """``sqrt(n) (Vhat_n(x) - V(x))`` over replications."""
    v = ObservationModel(model).v_exact(x)
    root = math.sqrt(n)

    def one(r: int) -> float:
        return root * (float(lcm(sample_dataset(model, n, seed, r)).slope_at(x)) - v)

    return np.asarray(_map(one, reps, threads), dtype=float)


def run_flat_rate(
    model: CdfModel,
    x: float,
    ns: Sequence[int] = (1000, 10_000, 100_000),
    reps: int = 500,
    seed: int = 0,
    ks_n: Optional[int] = 10_000,
    ks_reps: int = 2000,
    lx_paths: int = 2000,
    threads: int = 1,
) -> FlatRateReport:
    """Spread of ``Vhat_n(x)`` across a size ladder and its match to the limit law."""
    if model.flat_interval(x) is None:
        raise WicksellError(f"{model.spec} is not flat at x={x}")
    ns = [int(n) for n in ns]
    errs = {}
    for k, n in enumerate(ns):
        # distinct seed offsets keep ladder levels independent
        errs[n] = flat_errors(model, x, n, reps, seed + 7919 * k, threads)
    sd_s = [float(np.std(errs[n], ddof=1)) for n in ns]
    sd_u = [s / math.sqrt(n) for s, n in zip(sd_s, ns)]
    lx = np.log(ns)
    slope_u = float(np.polyfit(lx, np.log(sd_u), 1)[0]) if len(ns) > 1 else math.nan
    slope_s = float(np.polyfit(lx, np.log(sd_s), 1)[0]) if len(ns) > 1 else math.nan
    rep = FlatRateReport(model.spec, float(x), ns, reps, seed, sd_u, sd_s, slope_u, slope_s, errs)
    if ks_n:
        e = flat_errors(model, x, ks_n, ks_reps, seed + 104729, threads)
        spec = make_gp_spec(ObservationModel(model), x)
        draws = l_x_distribution(spec, lx_paths, seed + 1299709).values
        res = stats.ks_2samp(e, draws)
        rep.ks_n, rep.ks_reps, rep.lx_paths = ks_n, ks_reps, lx_paths
        rep.ks_statistic, rep.ks_pvalue = float(res.statistic), float(res.pvalue)
        rep.scaled_errors[-ks_n] = e
    return rep


# --- limit process ----------------------------------------------------------------


@dataclass
class GpLimitResult:
    spec: GpSpec
    kernel: np.ndarray
    paths: np.ndarray
    lx: np.ndarray
    diagnostics: dict


def run_gp_limit(model: CdfModel, x: float, n_paths: int = 200, seed: int = 0, points: int = 241) -> GpLimitResult:
    """Simulate the limit process and the slope variable at ``x``."""
    obs = ObservationModel(model)
    spec = make_gp_spec(obs, x, points=points)
    paths = sample_paths(spec, n_paths, seed)
    lx = l_x_from_paths(spec, paths)
    diag = {"n_paths": n_paths, "seed": seed, "k_lo": spec.k_lo, "k_hi": spec.k_hi, "scale": spec.scale}
    if n_paths >= 3 and np.std(lx) > 0:
        mean, sd, ks, p = ks_fit_normal(lx)
        diag.update(mean=mean, sd=sd, ks=ks, p=p)
    return GpLimitResult(spec, kernel_matrix(obs, spec.grid), paths, lx, diag)


# --- local asymptotic normality -----------------------------------------------------

HADAMARD_NS = (1e4, 1e6, 1e8, 1e10)


@dataclass
class LanReport:
    n: int
    reps: int
    h: tuple[float, float]
    gamma0: float
    gammax: float
    eta: float
    loglik: np.ndarray
    deltas: np.ndarray
    J: np.ndarray
    finite_n_cov: Optional[np.ndarray]
    ladder_ns: list[float]
    ladder: list[float]
    ladder_limit: float

    @property
    def loglik_mean(self) -> float:
        return float(np.mean(self.loglik))

    @property
    def loglik_var(self) -> Optional[float]:
        return _var(self.loglik)

    @property
    def delta_cov(self) -> Optional[np.ndarray]:
        return np.cov(self.deltas.T) if self.reps > 1 else None

    @property
    def theory_var(self) -> float:
        h = np.asarray(self.h)
        return float(h @ self.J @ h)

    def to_dict(self) -> dict:
        h = np.asarray(self.h)
        out = {
            "n": self.n,
            "reps": self.reps,
            "h": list(self.h),
            "gamma0": self.gamma0,
            "gammax": self.gammax,
            "eta": self.eta,
            "loglik_mean": self.loglik_mean,
            "loglik_var": self.loglik_var,
            "theory_mean": -0.5 * self.theory_var,
            "theory_var": self.theory_var,
            "delta_mean": self.deltas.mean(axis=0).tolist(),
            "delta_cov": None if self.delta_cov is None else self.delta_cov.tolist(),
            "J": self.J.tolist(),
            "hadamard_ns": self.ladder_ns,
            "hadamard": self.ladder,
            "hadamard_limit": self.ladder_limit,
        }
        if self.finite_n_cov is not None:
            out["finite_n_cov"] = self.finite_n_cov.tolist()
            out["finite_n_theory_mean"] = -0.5 * float(h @ self.finite_n_cov @ h)
        return out


def run_lan_check(
    model: CdfModel,
    x: float,
    h: tuple[float, float],
    n: int,
    reps: int,
    seed: int,
    gamma0: Optional[float] = None,
    gammax: Optional[float] = None,
    eta: Optional[float] = None,
    threads: int = 1,
    ladder_ns: Sequence[float] = HADAMARD_NS,
    finite_n: bool = True,
) -> LanReport:
    """Log-likelihood ratios and scores along the perturbation path."""
    g0, gx = _gammas(model, x, gamma0, gammax)
    obs = ObservationModel(model)
    spec = PerturbationSpec(obs, x, tuple(h), n, g0, gx, eta)
    lo, hi = 0.0, max(model.upper_observation(), x + 2 * spec.window)
    if not check_monotone(spec, np.linspace(lo, hi, 10_001)):
        raise WicksellError(f"perturbed cdf is not monotone at n={n}; use a larger n or smaller h")

    def one(r: int):
        s = sample_dataset(model, n, seed, r)
        return loglik_sum(s, spec), delta_n(s, spec)

    out = _map(one, reps, threads)
    ll = np.array([o[0] for o in out])
    dl = np.array([o[1] for o in out]).reshape(reps, 2)
    ladder = hadamard_ladder(spec, ladder_ns) if ladder_ns else []
    limit = float(np.asarray(h) @ psi_dot(model, x, g0, gx))
    cov = score_covariance(spec) if finite_n else None
    return LanReport(
        n=int(n),
        reps=int(reps),
        h=spec.h,
        gamma0=g0,
        gammax=gx,
        eta=spec.window,
        loglik=ll,
        deltas=dl,
        J=j_matrix(obs, x, g0, gx),
        finite_n_cov=cov,
        ladder_ns=[float(v) for v in ladder_ns],
        ladder=ladder,
        ladder_limit=limit,
    )


def naive_at(sample: SampleSet, x: float) -> float:
    """``V_n(x)``; a convenience for diagnostics."""
    return float(v_n(sample, x))
