import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import PchipInterpolator

from agepension.interp import LogWealthInterpolant, interp_policy, interpolate_value, pchip_slopes

GRID = np.geomspace(1e3, 3e6, 120)


def monotone_surface(seed, n=GRID.size):
    rng = np.random.default_rng(seed)
    steps = rng.exponential(size=n) * (rng.random(n) < 0.7)  # flat stretches included
    return -1.0 + np.cumsum(steps) * 1e-3


class TestAgainstScipy:
    @pytest.mark.parametrize("seed", range(5))
    def test_uniform_log_grid(self, seed):
        y = monotone_surface(seed)
        f = LogWealthInterpolant(GRID, y)
        q = np.exp(np.random.default_rng(99).uniform(np.log(GRID[0]), np.log(GRID[-1]), 5_000))
        ref = PchipInterpolator(np.log(GRID), y)(np.log(q))
        assert np.max(np.abs(f(q) - ref)) <= 1e-13 * np.max(np.abs(y))

    def test_nonuniform_slopes(self):
        x = np.array([0.0, 0.3, 1.0, 1.1, 2.5, 4.0])
        y = np.array([0.0, 1.0, 1.5, 1.5, 3.0, -1.0])
        ref = PchipInterpolator(x, y).derivative()(x)
        assert np.allclose(pchip_slopes(x, y), ref, rtol=1e-13, atol=1e-14)

    def test_stacked(self):
        ys = np.stack([monotone_surface(s) for s in range(3)])
        q = np.array([1.5e3, 7e4, 2.9e6])
        out = LogWealthInterpolant(GRID, ys)(q)
        assert out.shape == (3, 3)
        for i in range(3):
            assert np.allclose(out[i], LogWealthInterpolant(GRID, ys[i])(q), rtol=0, atol=1e-15)


class TestShape:
    def test_nodes_exact(self):
        y = monotone_surface(1)
        f = LogWealthInterpolant(GRID, y)
        assert np.array_equal(f(GRID), y)
        assert f(float(GRID[17])) == y[17]

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_on_random_queries(self, seed):
        f = LogWealthInterpolant(GRID, monotone_surface(seed))
        q = np.sort(np.exp(np.random.default_rng(seed).uniform(np.log(1e3), np.log(3e6), 1_000)))
        assert np.all(np.diff(f(q)) >= 0)

    @given(st.lists(st.floats(0, 10), min_size=4, max_size=40), st.integers(0, 2 ** 31))
    @settings(max_examples=100, deadline=None)
    def test_monotone_property(self, steps, seed):
        y = np.cumsum(steps)
        w = np.geomspace(1e3, 1e6, y.size)
        q = np.sort(np.exp(np.random.default_rng(seed).uniform(np.log(1e3), np.log(2e6), 300)))
        assert np.all(np.diff(LogWealthInterpolant(w, y)(q)) >= -1e-12 * max(1.0, y[-1]))

    def test_linear_in_log_wealth_is_exact(self):
        y = 3.0 + 2.0 * np.log(GRID)
        mid = np.sqrt(GRID[:-1] * GRID[1:])
        assert np.allclose(LogWealthInterpolant(GRID, y)(mid), 3.0 + 2.0 * np.log(mid),
                           rtol=1e-14, atol=0)


class TestEnds:
    def test_linear_extrapolation_above(self):
        y = monotone_surface(2)
        f = LogWealthInterpolant(GRID, y)
        slope = f.derivative_log(GRID[-1])
        W = np.array([4e6, 1e7])
        assert np.allclose(f(W), y[-1] + slope * (np.log(W) - np.log(GRID[-1])), rtol=1e-14)

    def test_clamped_below_and_counted(self):
        y = monotone_surface(3)
        f = LogWealthInterpolant(GRID, y)
        assert np.all(f(np.array([0.0, 10.0, 999.0])) == y[0])
        assert f.below_range == 3

    def test_scalar(self):
        assert isinstance(interpolate_value(GRID, monotone_surface(0), 5e4), float)

    def test_bad_nodes(self):
        with pytest.raises(ValueError):
            LogWealthInterpolant(np.array([1.0, 1.0, 2.0]), np.zeros(3))
        with pytest.raises(ValueError):
            LogWealthInterpolant(np.array([0.0, 1.0]), np.zeros(2))


class TestPolicyLookup:
    def test_linear_between_nodes(self):
        w = np.array([1e3, 1e4, 1e5])
        assert interp_policy(w, np.array([0.0, 1.0, 0.5]), np.sqrt(1e3 * 1e4)) == pytest.approx(0.5)

    def test_clamped(self):
        w = np.array([1e3, 1e4])
        p = np.array([0.2, 0.8])
        assert interp_policy(w, p, 0.0) == 0.2 and interp_policy(w, p, 1e9) == 0.8
