import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agepension.errors import ConfigError, DomainError
from agepension.lifecycle import (MarketParams, QuadratureRule, WithdrawalSchedule,
                                  discount_factor, expected_value_next, family_transition_probs,
                                  load_life_table, parse_life_table, wealth_step)
from agepension.utility import FamilyState

M = MarketParams()


class TestWealthStep:
    def test_full_drawdown(self):
        assert wealth_step(100.0, 1.0, 0.7, 0.3, 0.005) == 0.0

    def test_risk_free(self):
        assert wealth_step(100.0, 0.0, 0.0, 123.0, 0.005) == pytest.approx(100 * np.exp(0.005))

    def test_mixed(self):
        expected = 95 * (0.5 * np.exp(0.056) + 0.5 * np.exp(0.005))
        assert wealth_step(100.0, 0.05, 0.5, 0.056, 0.005) == pytest.approx(expected, rel=1e-15)

    def test_negative(self):
        with pytest.raises(DomainError):
            wealth_step(-1.0, 0.1, 0.1, 0.0, 0.0)

    @given(W=st.floats(0, 1e7), a=st.floats(0, 1), d=st.floats(0, 1), z=st.floats(-1, 1))
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, W, a, d, z):
        assert wealth_step(W, a, d, z, 0.005) >= 0


class TestMarket:
    def test_real_drift(self):
        assert M.real_drift == pytest.approx(0.056, abs=1e-15)

    def test_gross(self):
        assert M.expected_gross_risky() == pytest.approx(np.exp(0.056 + 0.133 ** 2 / 2))
        assert M.median_gross_risky() == pytest.approx(np.exp(0.056))

    def test_bad_sigma(self):
        with pytest.raises(ConfigError):
            MarketParams(sigma=-0.1)


class TestTransitions:
    table = load_life_table()

    def test_absorbing(self):
        assert family_transition_probs(FamilyState.DEAD, 80, self.table) == {FamilyState.DEAD: 1.0}
        assert family_transition_probs(FamilyState.DIED, 80, self.table) == {FamilyState.DEAD: 1.0}

    def test_single(self):
        from agepension.lifecycle import MortalityTable
        t = MortalityTable(np.array([80]), np.array([0.97]))
        out = family_transition_probs(FamilyState.SINGLE, 80, t)
        assert out[FamilyState.SINGLE] == 0.97
        assert out[FamilyState.DIED] == pytest.approx(0.03)

    def test_couple_never_skips(self):
        out = family_transition_probs(FamilyState.COUPLE, 70, self.table)
        assert set(out) == {FamilyState.COUPLE, FamilyState.SINGLE}
        assert sum(out.values()) == pytest.approx(1.0)


class TestDiscount:
    def test_empty_sum(self):
        assert discount_factor(70, 70, 0.005) == 1.0

    def test_ten_years(self):
        assert discount_factor(65, 75, 0.005) == pytest.approx(np.exp(-0.05), rel=1e-15)

    def test_backwards(self):
        with pytest.raises(DomainError):
            discount_factor(70, 69, 0.005)

    def test_time_varying_composes(self):
        rates = {t: 0.001 * (t - 60) for t in range(60, 100)}
        rate = rates.__getitem__
        whole = discount_factor(65, 90, rate)
        assert whole == pytest.approx(discount_factor(65, 77, rate) * discount_factor(77, 90, rate),
                                      rel=1e-14)


class TestWithdrawal:
    @pytest.mark.parametrize("age,rate", [(60, 0.04), (64, 0.04), (65, 0.05), (74, 0.05),
                                          (75, 0.06), (80, 0.07), (85, 0.09), (90, 0.11),
                                          (94, 0.11), (95, 0.14), (99, 0.14)])
    def test_bands(self, age, rate):
        assert WithdrawalSchedule().min_rate(age) == rate

    def test_edges(self):
        assert WithdrawalSchedule().band_edges() == [65, 75, 80, 85, 90, 95]

    def test_unenforced(self):
        assert WithdrawalSchedule(enforced=False).min_rate(90) == 0.0

    def test_rejects_decreasing(self):
        with pytest.raises(ConfigError):
            WithdrawalSchedule(bands=((70, 0.05), (None, 0.04)))


class TestQuadrature:
    def test_weights(self):
        q = QuadratureRule.gauss_hermite(10)
        assert q.weights.sum() == pytest.approx(1.0, abs=1e-15)
        assert q.expect(lambda z: z ** 2) == pytest.approx(1.0, rel=1e-13)

    def test_constant_continuation(self):
        q = QuadratureRule.gauss_hermite(10)
        assert expected_value_next(1e5, 0.05, 0.6, np.ones_like, q, M) == pytest.approx(1.0, abs=1e-15)

    def test_riskless(self):
        W, a = 2e5, 0.07
        for n in (1, 3, 10):
            q = QuadratureRule.gauss_hermite(n)
            got = expected_value_next(W, a, 0.0, np.log, q, M)
            assert got == pytest.approx(np.log((W - a * W) * np.exp(M.r)), rel=1e-15)

    @pytest.mark.parametrize("n", [10, 20])
    def test_lognormal_mean(self, n):
        q = QuadratureRule.gauss_hermite(n)
        W, a = 1e5, 0.05
        got = expected_value_next(W, a, 1.0, lambda w: w, q, M)
        exact = (W - a * W) * np.exp(M.real_drift + M.sigma ** 2 / 2)
        assert abs(got / exact - 1) < 1e-8

    def test_node_doubling(self):
        f = lambda w: -1.0 / w  # noqa: E731  (a smooth, HARA-like continuation)
        e10 = expected_value_next(1e5, 0.05, 0.7, f, QuadratureRule.gauss_hermite(10), M)
        e20 = expected_value_next(1e5, 0.05, 0.7, f, QuadratureRule.gauss_hermite(20), M)
        assert abs(e20 / e10 - 1) < 1e-8

    def test_no_nodes(self):
        with pytest.raises(ConfigError):
            QuadratureRule.gauss_hermite(0)


class TestLifeTable:
    def test_bundled(self):
        t = load_life_table()
        assert t.ages[0] <= 65 and t.ages[-1] >= 99
        assert np.all(np.diff(t.survival) < 0)
        assert 19 < t.life_expectancy(65, 100) < 22

    def test_unisex_header(self):
        t = parse_life_table("age,unisex\n65,0.99\n66,0.98\n")
        assert t.p(66) == 0.98

    def test_male_female_mean(self):
        t = parse_life_table("# note\nage,male,female\n65,0.98,0.99\n")
        assert t.p(65) == pytest.approx(0.985)

    def test_probability_above_one(self):
        with pytest.raises(ConfigError) as err:
            parse_life_table("age,unisex\n65,0.99\n66,1.2\n")
        assert err.value.field == "life_table.row[1]"

    def test_bad_row(self):
        with pytest.raises(ConfigError, match=r"row\[0\]"):
            parse_life_table("age,unisex\n65,abc\n")

    def test_gap(self):
        with pytest.raises(ConfigError, match="consecutive"):
            parse_life_table("age,unisex\n65,0.99\n67,0.98\n")

    def test_header(self):
        with pytest.raises(ConfigError, match="header"):
            parse_life_table("years,unisex\n65,0.99\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_life_table(tmp_path / "nope.csv")

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            load_life_table().p(120)
