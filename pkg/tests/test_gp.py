import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, stats

from wicksell.errors import WicksellError
from wicksell.gp import (
    anchored_kernel,
    base_kernel,
    hull_right_slope,
    increment_ratio,
    increment_second_moment,
    kernel_matrix,
    kolmogorov_pvalue,
    ks_fit_normal,
    l_x_cdf_switch,
    l_x_distribution,
    l_x_from_paths,
    make_gp_spec,
    sample_paths,
)
from wicksell.sampling import sample_dataset


def kernel_scipy(s, t):
    """Base kernel for the uniform model straight from scipy quad."""
    g = lambda z: 1.5 * math.sqrt(max(1 - z, 0))  # noqa: E731
    phi = lambda a, z: math.sqrt(z) - math.sqrt(max(z - a, 0))  # noqa: E731
    e2, _ = integrate.quad(lambda z: phi(s, z) * phi(t, z) * g(z), 0, 1, points=[s, t], epsabs=1e-14, limit=200)
    e1s, _ = integrate.quad(lambda z: phi(s, z) * g(z), 0, 1, points=[s], epsabs=1e-14)
    e1t, _ = integrate.quad(lambda z: phi(t, z) * g(z), 0, 1, points=[t], epsabs=1e-14)
    return e2 - e1s * e1t


@pytest.mark.parametrize("s,t", [(0.2, 0.2), (0.3, 0.7), (0.9, 0.5), (1.0, 0.1)])
def test_base_kernel_uniform(uniform_obs, s, t):
    assert base_kernel(uniform_obs, s, t) == pytest.approx(kernel_scipy(s, t), rel=1e-8, abs=1e-12)


def test_matrix_matches_adaptive(flat_obs):
    grid = np.array([0.0, 0.7, 2.0, 2.5, 3.0, 3.6])
    k = kernel_matrix(flat_obs, grid)
    for i, s in enumerate(grid):
        for j, t in enumerate(grid):
            assert k[i, j] == pytest.approx(base_kernel(flat_obs, s, t), abs=1e-11)
    assert np.all(k[0] == 0)


def test_kernel_matches_monte_carlo(uniform, uniform_obs):
    # covariance of sqrt(n) (U_n - U) is four times the base kernel
    pts = np.array([0.3, 0.7])
    n, reps = 2000, 600
    vals = []
    for r in range(reps):
        s = sample_dataset(uniform, n, 77, r)
        from wicksell.estimators import u_n

        vals.append(math.sqrt(n) * (u_n(s, pts) - np.array([uniform_obs.u_exact(p) for p in pts])))
    emp = np.cov(np.array(vals).T)
    theo = 4 * kernel_matrix(uniform_obs, pts)
    np.testing.assert_allclose(emp, theo, rtol=0.15, atol=0.006)


class TestSpec:
    @pytest.fixture(scope="class")
    @classmethod
    def spec(cls, flat_obs):
        return make_gp_spec(flat_obs, 2.5)

    def test_layout(self, spec):
        assert (spec.k_lo, spec.k_hi) == (2.0, 3.0)
        assert spec.grid[spec.anchor_index] == 2.5
        assert np.all(spec.covariance[spec.anchor_index] == 0)
        assert spec.scale == 4.0
        assert np.linalg.eigvalsh(spec.covariance)[0] > -1e-12

    def test_anchored_entries(self, spec):
        i = int(np.flatnonzero(spec.grid == 2.0)[0])
        j = int(np.flatnonzero(spec.grid == 3.0)[0])
        assert spec.covariance[i, j] == pytest.approx(4 * anchored_kernel(spec, 2.0, 3.0), abs=1e-10)

    def test_paths_reproduce_covariance(self, spec):
        paths = sample_paths(spec, 4000, 3)
        assert np.all(paths[:, spec.anchor_index] == 0)
        emp = np.cov(paths.T)
        idx = np.flatnonzero(spec.in_interval)[::10]
        np.testing.assert_allclose(emp[np.ix_(idx, idx)], spec.covariance[np.ix_(idx, idx)], atol=0.08 * spec.covariance.max())

    def test_paths_deterministic(self, spec):
        np.testing.assert_array_equal(sample_paths(spec, 5, 9), sample_paths(spec, 5, 9))
        a = sample_paths(spec, 5, 9)
        b = sample_paths(spec, 3, 9)
        np.testing.assert_array_equal(a[:3], b)

    def test_switch_relation(self, spec):
        paths = sample_paths(spec, 300, 4)
        lx = l_x_from_paths(spec, paths)
        for a in np.quantile(lx, [0.1, 0.5, 0.9]) + 1e-9:
            np.testing.assert_array_equal(l_x_cdf_switch(spec, paths, a), lx <= a)

    def test_lx_distribution(self, spec):
        lx = l_x_distribution(spec, 200, 1).values
        assert lx.shape == (200,)
        assert abs(lx.mean()) < 0.2

    def test_not_flat(self, uniform_obs):
        with pytest.raises(WicksellError):
            make_gp_spec(uniform_obs, 0.5)


def test_hull_right_slope():
    s = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0.0, 2.0, 1.0, 1.5])
    # hull: (0,0) -> (1,2) -> (3,1.5)
    assert hull_right_slope(s, y, 0.5) == pytest.approx(2.0)
    assert hull_right_slope(s, y, 1.0) == pytest.approx(-0.25)
    assert hull_right_slope(s, y, 3.0) == pytest.approx(-0.25)


@pytest.mark.parametrize("lam", [0.3, 0.6, 1.0, 1.36, 2.0])
def test_kolmogorov_series(lam):
    assert kolmogorov_pvalue(lam) == pytest.approx(stats.kstwobign.sf(lam), abs=1e-12)


def test_ks_fit_normal(rng):
    v = rng.normal(3, 2, 500)
    mean, sd, ks, p = ks_fit_normal(v)
    ref = stats.kstest(v, "norm", args=(v.mean(), v.std(ddof=1))).statistic
    assert ks == pytest.approx(ref, abs=1e-14)
    assert p > 0.01
    assert ks_fit_normal(rng.exponential(size=2000))[3] < 1e-6
    with pytest.raises(ValueError):
        ks_fit_normal([1.0, 2.0])


def test_increment_moment_vs_mpmath(uniform_obs):
    mpmath.mp.dps = 30
    x, eps = mpmath.mpf("0.5"), mpmath.mpf("1e-3")
    g = lambda z: mpmath.mpf(1.5) * mpmath.sqrt(max(1 - z, 0))  # noqa: E731
    near = mpmath.quad(lambda z: (z - x) * g(z), [x, x + eps])
    far = mpmath.quad(lambda z: (mpmath.sqrt(z - x) - mpmath.sqrt(max(z - x - eps, 0))) ** 2 * g(z), [x + eps, x + 2 * eps, x + 0.1, 1])
    assert increment_second_moment(uniform_obs, 0.5, 1e-3) == pytest.approx(float(near + far), rel=1e-9)


def test_increment_ratio_tends_to_one(uniform_obs):
    r = [increment_ratio(uniform_obs, 0.5, e) for e in (1e-3, 1e-5, 1e-7)]
    assert r[0] > r[1] > r[2] > 1.0
    assert increment_ratio(uniform_obs, 0.5, 1e-7, constant=1.0) == pytest.approx(r[2] / 4)


class TestReferenceValues:
    def test_uniform_kernel_at_one(self, uniform_obs):
        # E Z - (E sqrt Z)**2 = 0.4 - (3 pi / 16)**2
        assert base_kernel(uniform_obs, 1.0, 1.0) == pytest.approx(0.4 - (3 * math.pi / 16) ** 2, rel=1e-10)
        assert base_kernel(uniform_obs, 1.0, 1.0) == pytest.approx(0.053022, abs=5e-7)

    def test_flat_kernel_monte_carlo(self, flat, flat_obs):
        from wicksell.sampling import RngStream, sample_observation

        z = sample_observation(flat, RngStream(17), 1_000_000)
        s, t = 2.2, 2.8
        a = np.sqrt(z) - np.sqrt(np.maximum(z - s, 0))
        b = np.sqrt(z) - np.sqrt(np.maximum(z - t, 0))
        prod = (a - a.mean()) * (b - b.mean())
        se = prod.std() / math.sqrt(z.size)
        assert abs(prod.mean() - base_kernel(flat_obs, s, t)) < 3 * se

    def test_path_variance(self, flat_obs):
        spec = make_gp_spec(flat_obs, 2.5)
        paths = sample_paths(spec, 10_000, 6)
        diag = np.diag(spec.covariance)
        ok = diag > 1e-6 * diag.max()
        np.testing.assert_allclose(paths.var(axis=0, ddof=1)[ok], diag[ok], rtol=0.05)

    def test_skewness_and_coupling(self, flat_obs):
        spec = make_gp_spec(flat_obs, 2.5)
        paths = sample_paths(spec, 2000, 7)
        lx = l_x_from_paths(spec, paths)
        assert abs(stats.skew(lx)) < 0.2
        # lifting the right side can only steepen the slope; lifting the left only flattens it
        right = paths[:50].copy()
        right[:, spec.grid > spec.x] += 0.3
        assert np.all(l_x_from_paths(spec, right) >= lx[:50] - 1e-12)
        left = paths[:50].copy()
        left[:, spec.grid < spec.x] += 0.3
        assert np.all(l_x_from_paths(spec, left) <= lx[:50] + 1e-12)

    def test_ks_hand_values(self):
        # sup just above -1: 1/3 - Phi(-1)
        d = ks_fit_normal([-1.0, 0.0, 1.0])[2]
        assert d == pytest.approx(1 / 3 - stats.norm.cdf(-1.0), rel=1e-12)
        assert d == pytest.approx(0.17466, abs=5e-5)
        q = stats.norm.ppf((np.arange(1, 101) - 0.5) / 100)
        assert ks_fit_normal(q)[2] < 0.01
