import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ndtri

from qcvstable import benchmarks as B, stable
from qcvstable.errors import DegenerateSampleError, EstimationError
from qcvstable.stable import StableParams


class TestMcCulloch:
    def test_gaussian_nu(self):
        assert B.mcculloch_nu(2.0) == pytest.approx(ndtri(0.95) / ndtri(0.75), rel=1e-12)
        assert B.mcculloch_nu(2.0) == pytest.approx(2.43866, abs=1e-5)

    def test_cauchy_nu(self):
        assert B.mcculloch_nu(1.0) == pytest.approx(math.tan(0.45 * math.pi), rel=1e-12)
        assert B.mcculloch_nu(1.0) == pytest.approx(6.31375, abs=1e-5)

    def test_table_monotone(self):
        t = B.get_nu_table()
        assert t.alpha_range == (0.5, 2.0)
        assert t.direction == "decreasing"
        assert t.meta["estimator"] == "mcculloch"

    def test_table_csv(self, tmp_path):
        t = B.build_nu_table(1.0, 1.2, 0.05)
        t.to_csv(tmp_path / "nu.csv")
        assert (tmp_path / "nu.csv").read_text().startswith("#estimator=mcculloch")
        back = B.NuTable.from_csv(tmp_path / "nu.csv")
        np.testing.assert_array_equal(back.values, t.values)

    def test_consistency(self):
        g = stable.sample(StableParams(2.0), 1_000_000, 1)
        assert 1.97 <= B.mcculloch_estimate(g).alpha_hat <= 2.0
        c = stable.sample(StableParams(1.0), 1_000_000, 2)
        assert B.mcculloch_estimate(c).alpha_hat == pytest.approx(1.0, abs=0.02)

    def test_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            B.mcculloch_estimate(np.r_[np.zeros(90), np.arange(10.0)])
        with pytest.raises(EstimationError):
            B.mcculloch_estimate(np.arange(10.0))

    def test_affine_invariance(self):
        x = stable.sample(StableParams(1.3), 800, 3)
        a = B.mcculloch_estimate(x).alpha_hat
        assert B.mcculloch_estimate(3.0 * x + 8.0).alpha_hat == pytest.approx(a, abs=1e-6)


class TestRegression:
    def test_ecf_trivia(self):
        assert B.sample_char_function(np.zeros(10), 3.0) == 1
        assert B.sample_char_function(np.arange(5.0), 0.0) == 1

    def test_ecf_modulus(self):
        x = stable.sample(StableParams(1.5), 1_000_000, 4)
        assert abs(B.sample_char_function(x, 1.0)) == pytest.approx(math.exp(-1), abs=0.005)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    def test_exact_cf_recovers_alpha(self, alpha):
        u = np.array(B.RegConfig().u_grid)
        res = B.reg_fit(u, np.exp(-u**alpha))
        assert abs(res.alpha_hat - alpha) < 1e-10

    @given(st.floats(0.3, 2.0), st.floats(0.2, 5.0))
    @settings(max_examples=50)
    def test_exact_cf_any_scale(self, alpha, scale):
        u = np.array([0.05, 0.2, 0.4, 0.9])
        res = B.reg_fit(u, np.exp(-(scale * u) ** alpha), B.RegConfig(fit_intercept=True))
        assert res.alpha_hat == pytest.approx(alpha, abs=1e-9)

    def test_drops_points(self):
        u = np.array([0.1, 0.2, 0.3])
        res = B.reg_fit(u, np.array([1.0, math.exp(-0.2**1.5), math.exp(-0.3**1.5)]))
        assert res.alpha_hat == pytest.approx(1.5, abs=1e-12)
        with pytest.raises(EstimationError):
            B.reg_fit(u, np.array([1.0, 0.0, 0.5]))

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            B.RegConfig(u_grid=(0.1, 0.1))
        with pytest.raises(ValueError):
            B.RegConfig(u_grid=(-0.1, 0.3))

    def test_location_invariance(self):
        x = stable.sample(StableParams(1.7), 1000, 5)
        for cfg in (B.RegConfig(), B.RegConfig(fit_intercept=True)):
            a = B.reg_estimate(x, cfg).alpha_hat
            assert B.reg_estimate(x + 5.0, cfg).alpha_hat == pytest.approx(a, abs=1e-9)

    def test_intercept_absorbs_scale(self):
        u = np.array(B.RegConfig().u_grid)
        res = B.reg_fit(u, np.exp(-(3.0 * u) ** 1.4), B.RegConfig(fit_intercept=True))
        assert res.alpha_hat == pytest.approx(1.4, abs=1e-10)
        biased = B.reg_fit(u, np.exp(-(3.0 * u) ** 1.4), B.RegConfig(fit_intercept=False))
        assert abs(biased.alpha_hat - 1.4) > 0.1

    def test_clamps_to_two(self):
        x = stable.sample(StableParams(2.0), 1000, 6)
        r = B.reg_estimate(x)
        assert r.alpha_hat <= 2.0
        if r.statistic > 2:
            assert r.clamped and r.alpha_hat == 2.0


class TestMle:
    def test_golden_section(self):
        x, fx = B.golden_section_max(lambda t: -(t - 1.234) ** 2, 0.5, 2.0, 1e-6)
        assert x == pytest.approx(1.234, abs=1e-6)
        x, _ = B.golden_section_max(lambda t: t, 0.5, 2.0)
        assert x == 2.0

    def test_cauchy(self):
        x = stable.sample(StableParams(1.0), 10_000, 7)
        assert B.mle_estimate(x).alpha_hat == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize("alpha", [1.2, 1.6])
    def test_likelihood_dominance(self, alpha):
        x = stable.sample(StableParams(alpha), 100_000, 8)
        L = B.log_likelihood(x, alpha)
        assert L > B.log_likelihood(x, alpha - 0.3)
        assert L > B.log_likelihood(x, alpha + 0.3)

    def test_tabulated_matches_direct(self):
        x = stable.sample(StableParams(1.45), 2000, 9)
        tab = B._TabulatedLikelihood(x, B._nodes(0.0025, stable.DEFAULT_CONFIG))
        for a in (0.8, 1.45, 1.9, 2.0):
            assert tab(a) == pytest.approx(B.log_likelihood(x, a), abs=1e-3)

    def test_exact_mode_agrees(self):
        x = stable.sample(StableParams(1.45), 1000, 10)
        fast = B.mle_estimate(x).alpha_hat
        slow = B.mle_estimate(x, B.MleConfig(exact=True, tolerance=1e-3)).alpha_hat
        assert fast == pytest.approx(slow, abs=4e-3)

    def test_standardize(self):
        x = stable.sample(StableParams(1.5, 0.0, 5.0, 100.0), 3000, 11)
        a = B.mle_estimate(x, B.MleConfig(standardize=True)).alpha_hat
        assert a == pytest.approx(1.5, abs=0.15)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            B.MleConfig(alpha_bracket=(1.5, 1.0))


class TestEnsemble:
    def test_average(self):
        x = stable.sample(StableParams(1.5), 1000, 12)
        from qcvstable import qcv
        for which, spec in (("M1", qcv.N1), ("M2", qcv.N2)):
            r = B.ensemble_estimate(x, which)
            q = qcv.estimate_alpha(x, spec).alpha_hat
            g = B.reg_estimate(x).alpha_hat
            assert r.alpha_hat == pytest.approx((q + g) / 2, abs=1e-15)

    def test_unknown(self):
        with pytest.raises(ValueError):
            B.ensemble_estimate(np.arange(100.0), "M3")


def test_reg_standardized_affine_invariance():
    x = stable.sample(StableParams(1.6), 1000, 13)
    cfg = B.RegConfig(fit_intercept=True, standardize=True)
    a = B.reg_estimate(x, cfg).alpha_hat
    assert B.reg_estimate(4.0 * x, cfg).alpha_hat == a
    assert B.reg_estimate(3.3 * x - 7.0, cfg).alpha_hat == pytest.approx(a, abs=1e-9)
