import math

import numpy as np
import pytest
from scipy import stats

from wicksell.models import GammaModel, ObservationModel, PointMass, Uniform01, parse_model
from wicksell.sampling import (
    RngStream,
    SampleSet,
    sample_biased,
    sample_dataset,
    sample_observation,
    sample_observation_inverse,
    sample_sphere,
    section,
)


def test_streams_reproducible_and_distinct():
    a = RngStream(7, 3).generator.random(5)
    b = RngStream(7, 3).generator.random(5)
    c = RngStream(7, 4).generator.random(5)
    d = RngStream(8, 3).generator.random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)


def test_seed_range():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)


def test_dataset_deterministic(uniform):
    s1 = sample_dataset(uniform, 500, 11, 2)
    s2 = sample_dataset(uniform, 500, 11, 2)
    assert s1.values.tobytes() == s2.values.tobytes()
    assert np.all(np.diff(s1.values) >= 0)
    assert not s1.values.flags.writeable


def test_sampleset_from_radii():
    s = SampleSet.from_radii([2.0, 1.0, 0.5])
    np.testing.assert_array_equal(s.values, [0.25, 1.0, 4.0])
    s2 = SampleSet.from_radii([2.0, 1.0], squared=True)
    np.testing.assert_array_equal(s2.values, [1.0, 2.0])
    with pytest.raises(ValueError):
        SampleSet.from_radii([-1.0])
    with pytest.raises(ValueError):
        SampleSet([np.nan])


def test_section_formula():
    assert section(4.0, 0.5) == pytest.approx(3.0)
    assert section(4.0, 1.0) == 0.0


def test_sphere_sampler_matches_cdf():
    gen = np.random.default_rng(1)
    model = GammaModel(2.0, 1.0)
    x = sample_sphere(model, gen, 20000)
    assert stats.kstest(x, stats.gamma(2.0).cdf).pvalue > 1e-3


def test_biased_uniform_law():
    # dF^b = (3/2) sqrt(x) dx on [0, 1]: cdf x**1.5
    x = sample_biased(Uniform01(), np.random.default_rng(2), 20000)
    assert stats.kstest(x, lambda t: np.clip(t, 0, 1) ** 1.5).pvalue > 1e-3


def test_biased_generic_table_gamma():
    # length-biased gamma(k, r) is gamma(k + 1/2, r); check the generic tabulated route too
    model = GammaModel(2.0, 1.0)
    from wicksell.models import CdfModel

    x = CdfModel.sample_biased(model, np.random.default_rng(3), 20000)
    assert stats.kstest(x, stats.gamma(2.5).cdf).pvalue > 1e-3


def test_observation_uniform_against_closed_cdf():
    # P(Z <= z) = 1 - (1 - z)**1.5 for the uniform model
    z = sample_observation(Uniform01(), np.random.default_rng(4), 20000)
    assert stats.kstest(z, lambda t: 1 - np.clip(1 - t, 0, 1) ** 1.5).pvalue > 1e-3


def test_point_mass_observation():
    z = sample_observation(PointMass(4.0), np.random.default_rng(5), 5000)
    assert np.all((z >= 0) & (z <= 4))
    assert stats.kstest(z, lambda t: 1 - np.sqrt(np.clip(4 - t, 0, 4)) / 2).pvalue > 1e-3


@pytest.mark.parametrize("spec", ["uniform01", "gamma:2:1", "flat:default", "holder:x0=1,gamma=0.5,K=0.5"])
def test_two_routes_agree(spec):
    model = parse_model(spec)
    obs = ObservationModel(model)
    a = sample_observation(model, RngStream(101, 0), 50_000)
    b = sample_observation_inverse(obs, RngStream(202, 0), 50_000)
    assert stats.ks_2samp(a, b).statistic < 0.02


def test_mean_z(uniform_obs):
    z = sample_observation(Uniform01(), np.random.default_rng(6), 200_000)
    assert z.mean() == pytest.approx(uniform_obs.mean_z(), abs=4 * z.std() / math.sqrt(z.size))
    # E Z = (2 / (3 m0)) E X**1.5 = 0.4 for the uniform model
    assert uniform_obs.mean_z() == pytest.approx(0.4)


class TestReferenceValues:
    def test_gamma_mean(self):
        x = sample_sphere(GammaModel(2.0, 0.5), RngStream(1), 100_000)
        assert x.mean() == pytest.approx(4.0, rel=0.02)

    def test_biased_uniform_median_and_mean(self):
        xb = sample_biased(Uniform01(), RngStream(2), 100_000)
        assert np.median(xb) == pytest.approx(0.5 ** (2 / 3), abs=0.005)
        assert 0.5 ** (2 / 3) == pytest.approx(0.62996, abs=5e-6)
        assert xb.mean() == pytest.approx(0.6, rel=0.01)

    def test_observation_uniform(self):
        z = sample_observation(Uniform01(), RngStream(3), 100_000)
        assert z.mean() == pytest.approx(0.4, rel=0.01)
        assert np.median(z) == pytest.approx(1 - 0.5 ** (2 / 3), abs=0.005)

    @pytest.mark.parametrize("spec", ["gamma:2:0.5", "flat:default", "holder:x0=1,gamma=0.6,K=1"])
    def test_mean_moment_constraint(self, spec):
        model = parse_model(spec)
        z = sample_observation(model, RngStream(4), 100_000)
        assert z.mean() == pytest.approx(ObservationModel(model).mean_z(), rel=0.02)

    def test_point_mass_two_routes(self):
        model = PointMass(2.0)
        a = sample_observation(model, RngStream(5), 100_000)
        b = sample_observation_inverse(ObservationModel(model), RngStream(6), 100_000)
        assert stats.ks_2samp(a, b).statistic < 0.02
        p = np.array([0.1, 0.5, 0.9])
        # quantile of (1 - U**2) a: a (1 - (1 - p)**2)
        np.testing.assert_allclose(np.quantile(a, p), 2.0 * (1 - (1 - p) ** 2), atol=0.02)
