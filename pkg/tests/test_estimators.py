import math

import numpy as np
import pytest

from wicksell import _core, _pycore
from wicksell.errors import WicksellError
from wicksell.estimators import argmax_t, f_hat, f_naive, lcm, u_n, v_hat, v_n
from wicksell.sampling import SampleSet, sample_dataset

from oracles import check_lcm_case, hull_brute, u_brute


class TestHandExamples:
    def test_two_points(self):
        z = [1.0, 4.0]
        assert v_n(z, 0.0) == pytest.approx((1 + 0.5) / 2)
        assert v_n(z, 2.0) == pytest.approx(0.5 / math.sqrt(2))
        assert u_n(z, 2.0) == pytest.approx((1 + 2 - math.sqrt(2)))
        assert u_n(z, 10.0) == pytest.approx(3.0)
        assert v_n(z, 1.0) == math.inf

    def test_majorant_two_points(self):
        # U_n(1) = 1 + 2 - sqrt(3) = 1.26795, U_n(4) = 3; slope from 0 to 1 beats 1 -> 4
        maj = lcm([1.0, 4.0])
        np.testing.assert_allclose(maj.knots, [0, 1, 4])
        s0 = 3 - math.sqrt(3)
        np.testing.assert_allclose(maj.slopes, [s0, (3 - s0) / 3])
        assert f_hat([1.0, 4.0], 2.5) == pytest.approx(1 - ((3 - s0) / 3) / s0)
        assert f_hat([1.0, 4.0], 5.0) == 1.0
        assert f_hat([1.0, 4.0], -1.0) == 0.0

    def test_single_observation(self):
        maj = lcm([2.0])
        assert maj.slopes[0] == pytest.approx(math.sqrt(2))
        assert f_hat([2.0], 1.0) == 0.0

    def test_ties_and_zero(self):
        maj = lcm([0.0, 1.0, 1.0])
        assert maj.knots[0] == 0.0 and maj.knots[-1] == 1.0
        with pytest.raises(WicksellError):
            f_naive([0.0, 1.0], 0.5)

    def test_all_zero(self):
        with pytest.raises(WicksellError):
            f_hat([0.0, 0.0], 0.5)

    def test_naive_at_observation(self):
        with pytest.raises(WicksellError):
            f_naive([1.0, 2.0], 1.0)


def test_u_matches_brute(rng):
    z = np.sort(rng.exponential(size=40))
    for x in (0.0, 0.1, z[3], 1.5, 9.0):
        assert u_n(z, x) == pytest.approx(u_brute(z, x), rel=1e-13, abs=1e-15)


def test_v_is_derivative_of_u(rng):
    z = np.sort(rng.exponential(size=30))
    x, h = 0.731, 1e-6
    assert (u_n(z, x + h) - u_n(z, x - h)) / (2 * h) == pytest.approx(v_n(z, x), rel=1e-6)


@pytest.mark.parametrize("case", range(100))
def test_lcm_properties_brute_force(case):
    check_lcm_case(1000 + case)


def test_estimators_consistent(uniform):
    s = sample_dataset(uniform, 20_000, 5)
    xs = np.array([0.2, 0.5, 0.8])
    np.testing.assert_allclose(f_hat(s, xs), xs, atol=0.05)
    np.testing.assert_allclose(f_naive(s, xs), xs, atol=0.15)
    fh = f_hat(s, np.linspace(0, 1.2, 50))
    assert np.all(np.diff(fh) >= 0) and fh[0] == 0.0 and fh[-1] == 1.0


def test_sampleset_and_array_agree(uniform):
    s = sample_dataset(uniform, 300, 9)
    assert f_hat(s, 0.4) == f_hat(np.asarray(s.values)[::-1], 0.4)


class TestBackends:
    def test_tail_sums_agree(self, rng):
        z = np.sort(rng.gamma(2.0, size=5000))
        t = np.concatenate([[0.0], rng.uniform(0, z[-1], 300), z[::50], [z[-1], z[-1] + 1]])
        a = _core.tail_sqrt_sums(z, t)
        b = _pycore.tail_sqrt_sums(z, t)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_tail_sums_tiny(self):
        z = np.array([1.0, 4.0])
        t = np.array([0.0, 1.0, 3.0, 5.0])
        expected = [3.0, math.sqrt(3), 1.0, 0.0]
        np.testing.assert_allclose(_core.tail_sqrt_sums(z, t), expected, atol=1e-14)
        np.testing.assert_allclose(_pycore.tail_sqrt_sums(z, t), expected, atol=1e-14)

    def test_hull_agree(self, rng):
        x = np.sort(rng.uniform(size=200))
        y = rng.normal(size=200)
        np.testing.assert_array_equal(_core.upper_hull(x, y), _pycore.upper_hull(x, y))
        np.testing.assert_array_equal(_core.upper_hull(x[:30], y[:30]), hull_brute(x[:30], y[:30]))

    def test_collinear_points_dropped(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        y = np.array([0.0, 1.0, 2.0, 2.5])
        np.testing.assert_array_equal(_core.upper_hull(x, y), [0, 2, 3])
        np.testing.assert_array_equal(_pycore.upper_hull(x, y), [0, 2, 3])

    def test_fallback_selected_by_env(self):
        import subprocess
        import sys

        code = "import wicksell._backend as b; print(b.COMPILED)"
        out = subprocess.run(
            [sys.executable, "-c", code], env={"WICKSELL_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True
        )
        assert out.stdout.strip() == "False"


class TestReferenceValues:
    def test_plug_in(self):
        z = [1.0, 4.0]
        assert v_n(z, 0.0) == pytest.approx(0.75)
        assert v_n(z, 0.5) == pytest.approx(0.974368, abs=5e-7)
        assert u_n(z, 1.0) == pytest.approx(1.267949, abs=5e-7)
        assert u_n(z, 4.0) == pytest.approx(3.0)

    def test_majorant_values(self):
        maj = lcm([1.0, 4.0])
        np.testing.assert_allclose(maj.slopes, [1.267949, 0.577350], atol=5e-7)
        assert v_hat(maj, 0.0) == pytest.approx(1.267949, abs=5e-7)
        assert v_hat(maj, 1.0) == pytest.approx(0.577350, abs=5e-7)
        assert v_hat(maj, 4.0) == 0.0
        assert f_hat([1.0, 4.0], 2.0) == pytest.approx(0.544658, abs=5e-7)
        assert f_hat([1.0, 4.0], 0.5) == 0.0
        assert f_naive([1.0, 4.0], 0.5) == pytest.approx(-0.299157, abs=5e-7)

    def test_pooling(self):
        assert u_n([1.0, 1.21], 1.0) == pytest.approx(1.641742, abs=5e-7)
        maj = lcm([1.0, 1.21])
        np.testing.assert_allclose(maj.knots, [0.0, 1.21])
        assert maj.slopes[0] == pytest.approx(2.1 / 1.21)
        assert maj.slopes[0] == pytest.approx(1.735537, abs=5e-7)

    @pytest.mark.parametrize("z", [0.3, 2.0, 7.5])
    def test_single(self, z):
        maj = lcm([z])
        assert maj.slopes[0] == pytest.approx(2 / math.sqrt(z))
        assert v_hat(maj, z) == 0.0

    def test_argmax(self):
        z = [1.0, 4.0]
        assert argmax_t(z, 2.0) == 0.0
        assert argmax_t(z, 0.0) == 4.0
        assert argmax_t(z, 1.0) == 1.0

    def test_grid_oracle(self):
        # right slope of the majorant from a brute-force hull of U_n on a fine grid
        z = np.array([1.0, 1.21, 2.5, 4.0])
        grid = np.linspace(0, 4, 4001)
        u = u_n(z, grid)
        idx = hull_brute(grid[::40], u[::40])
        maj = lcm(z)
        hs, hu = grid[::40][idx], u[::40][idx]
        slopes = np.diff(hu) / np.diff(hs)
        for t in (0.5, 1.5, 3.0):
            j = np.searchsorted(hs, t, side="right") - 1
            assert slopes[j] == pytest.approx(v_hat(maj, t), rel=0.05)
