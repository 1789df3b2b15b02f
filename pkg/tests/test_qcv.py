import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcvstable import qcv, stable
from qcvstable.errors import NonMonotoneTableError, WindowTooSmallError, ZeroDenominatorError
from qcvstable.qcv import N1, N2, QuantileSplit, RatioSpec

# 2 * Var(Z | z_a < Z < z_b) from scipy.stats.truncnorm
GAUSS_REF = {(0.25, 0.75): 0.28530367097703757, (0.015, 0.25): 0.28733095167481726,
             (0.01, 0.17): 0.23865984875273716, (0.1, 0.9): 0.8754491898072776}
# conditional Cauchy moments by mpmath quadrature
CAUCHY_REF = {(0.25, 0.75): 0.27323954473516269, (0.015, 0.25): 12.905815629703415,
              (0.01, 0.17): 28.234554776053779, (0.1, 0.9): 1.4491427410699535}


class TestTypes:
    @pytest.mark.parametrize("ab", [(0.0, 0.5), (0.5, 0.5), (0.6, 0.4), (0.2, 1.0)])
    def test_split_rejects(self, ab):
        with pytest.raises(ValueError):
            QuantileSplit(*ab)

    def test_spec_rejects(self):
        with pytest.raises(ValueError):
            RatioSpec(0.1, 0.2, 0.5)
        with pytest.raises(ValueError):
            RatioSpec(0.3, 0.2, 0.25)

    def test_builtins(self):
        assert (N1.a, N1.b, N1.d) == (0.015, 0.25, 0.25)
        assert (N2.a, N2.b, N2.d) == (0.01, 0.17, 0.1)


class TestSampleQcv:
    def test_hand_example(self):
        v = qcv.sample_qcv(np.arange(1, 11), 0.2, 0.7)
        assert v.value == pytest.approx(2.0, abs=1e-15)

    def test_order_irrelevant(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(200)
        assert qcv.sample_qcv(x, 0.1, 0.6).value == qcv.sample_qcv(rng.permutation(x), 0.1, 0.6).value

    def test_constant(self):
        assert qcv.sample_qcv(np.full(100, 3.7), 0.1, 0.9).value == 0.0

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmallError):
            qcv.sample_qcv(np.arange(10.0), 0.5, 0.6)

    def test_floor_at_exact_products(self):
        # n*a lands on an integer only up to rounding; the window must still start right after it
        x = np.arange(1.0, 1001.0)
        v = qcv.sample_qcv(x, 0.015, 0.25)
        w = np.arange(16.0, 251.0)
        assert v.value == pytest.approx(w.var(), rel=1e-14)

    def test_cauchy_large_sample(self):
        x = stable.sample(stable.StableParams(1.0), 1_000_000, 21)
        assert qcv.sample_qcv(x, 0.25, 0.75).value == pytest.approx(0.275, abs=0.005)


class TestTheoretical:
    @pytest.mark.parametrize("w", list(GAUSS_REF))
    def test_gaussian_closed(self, w):
        assert qcv.gaussian_qcv_closed(QuantileSplit(*w)).value == pytest.approx(GAUSS_REF[w], rel=1e-12)

    @pytest.mark.parametrize("w", list(CAUCHY_REF))
    def test_cauchy_closed(self, w):
        assert qcv.cauchy_qcv_closed(QuantileSplit(*w)).value == pytest.approx(CAUCHY_REF[w], rel=1e-12)

    @pytest.mark.parametrize("w", list(GAUSS_REF))
    def test_quadrature_vs_closed(self, w):
        s = QuantileSplit(*w)
        assert abs(qcv.theoretical_qcv(2.0, s).value - GAUSS_REF[w]) < 1e-3
        assert abs(qcv.theoretical_qcv(1.0, s).value - CAUCHY_REF[w]) < 1e-3

    def test_closed_forms_symmetric(self):
        s = QuantileSplit(0.015, 0.25)
        assert qcv.gaussian_qcv_closed(s).value == pytest.approx(qcv.gaussian_qcv_closed(s.mirrored()).value, rel=1e-12)
        assert qcv.cauchy_qcv_closed(s).value == pytest.approx(qcv.cauchy_qcv_closed(s.mirrored()).value, rel=1e-12)

    def test_gaussian_closed_monte_carlo(self):
        x = stable.sample(stable.StableParams(2.0), 2_000_000, 5)
        assert qcv.sample_qcv(x, 0.015, 0.25).value == pytest.approx(GAUSS_REF[(0.015, 0.25)], abs=5e-3)

    @given(st.sampled_from([0.7, 1.0, 1.3, 1.8, 2.0]), st.floats(0.02, 0.45), st.floats(0.05, 0.5))
    @settings(max_examples=25, deadline=None)
    def test_mirror_identity(self, alpha, a, width):
        s = QuantileSplit(a, min(a + width, 0.98))
        v1 = qcv.theoretical_qcv(alpha, s).value
        v2 = qcv.theoretical_qcv(alpha, s.mirrored()).value
        assert v1 == pytest.approx(v2, rel=1e-9)

    def test_nonnegative(self):
        assert qcv.theoretical_qcv(1.5, QuantileSplit(0.49, 0.5)).value >= 0

    def test_qcv_ordering_upper_windows(self):
        alphas = np.arange(1.0, 2.001, 0.25)
        for a, b in [(0.65, 0.8), (0.7, 0.95), (0.8, 0.99), (0.9, 0.97)]:
            v = [qcv.theoretical_qcv(al, QuantileSplit(a, b)).value for al in alphas]
            assert np.all(np.diff(v) < 0), (a, b, v)


class TestRatio:
    def test_closed_form_ratios(self):
        g = 2 * GAUSS_REF[(0.015, 0.25)] / GAUSS_REF[(0.25, 0.75)]
        c = 2 * CAUCHY_REF[(0.015, 0.25)] / CAUCHY_REF[(0.25, 0.75)]
        assert qcv.ratio_value(2.0, N1) == pytest.approx(g, rel=1e-4)
        assert qcv.ratio_value(1.0, N1) == pytest.approx(c, rel=1e-4)

    def test_affine_invariance(self):
        x = stable.sample(stable.StableParams(1.4), 1000, 1)
        r = qcv.sample_ratio(x, N1)
        assert qcv.sample_ratio(4.0 * x, N1) == r
        assert qcv.sample_ratio(0.125 * x, N1) == r
        for s, m in [(3.7, -2.2), (1e-3, 50.0), (250.0, 1e4)]:
            assert qcv.sample_ratio(s * x + m, N1) == pytest.approx(r, rel=1e-9)

    def test_zero_denominator(self):
        x = np.concatenate([np.full(80, 1.0), np.linspace(-50, -10, 10), np.linspace(10, 50, 10)])
        with pytest.raises(ZeroDenominatorError):
            qcv.sample_ratio(x, N1)

    def test_consistency(self):
        g = stable.sample(stable.StableParams(2.0), 1_000_000, 2)
        assert qcv.sample_ratio(g, N1) == pytest.approx(qcv.ratio_value(2.0, N1), abs=0.01)
        c = stable.sample(stable.StableParams(1.0), 1_000_000, 3)
        assert qcv.sample_ratio(c, N1) == pytest.approx(qcv.ratio_value(1.0, N1), abs=0.02 * qcv.ratio_value(1.0, N1))


class TestTables:
    def test_small_table_roundtrip(self, tmp_path):
        t = qcv.build_table(N1, 1.4, 1.6, 0.05)
        assert t.direction == "decreasing"
        path = tmp_path / "t.csv"
        t.to_csv(path)
        back = qcv.RatioTable.from_csv(path)
        np.testing.assert_array_equal(back.alphas, t.alphas)
        np.testing.assert_array_equal(back.values, t.values)
        assert back.spec == N1
        t.to_csv(tmp_path / "u.csv")
        assert (tmp_path / "u.csv").read_bytes() == path.read_bytes()

    def test_invert_grid_point(self):
        t = qcv.get_table(N1)
        i = int(np.argmin(np.abs(t.alphas - 1.5)))
        res = qcv.invert(t, t.values[i])
        assert res.alpha_hat == 1.5 and not res.clamped

    def test_invert_clamps(self):
        t = qcv.get_table(N1)
        res = qcv.invert(t, t.values.min() * 0.9)
        assert res.alpha_hat == 2.0 and res.clamped
        res = qcv.invert(t, t.values.max() * 1.1)
        assert res.alpha_hat == t.alphas[0] and res.clamped

    def test_builtin_tables_monotone(self):
        for spec in (N1, N2):
            t = qcv.get_table(spec)
            assert t.alpha_range == (0.6, 2.0)
            assert np.all(np.diff(t.alphas) <= 0.0025 + 1e-12)
            assert np.all(np.diff(t.values) < 0)

    def test_nonmonotone_spec_fails(self):
        with pytest.raises(NonMonotoneTableError):
            qcv.build_table(RatioSpec(0.1, 0.2, 0.01, "bad"), 0.6, 2.0, 0.05)

    @given(st.floats(1.0, 2.0))
    @settings(max_examples=40, deadline=None)
    def test_invert_inverse(self, alpha):
        t = qcv.get_table(N1)
        n_val = float(t.value_at(alpha))
        assert qcv.invert(t, n_val).alpha_hat == pytest.approx(alpha, abs=1e-9)


class TestEstimate:
    def test_gaussian(self):
        x = stable.sample(stable.StableParams(2.0), 1_000_000, 7)
        assert 1.95 <= qcv.estimate_alpha(x, N1).alpha_hat <= 2.0

    def test_cauchy(self):
        x = stable.sample(stable.StableParams(1.0), 1_000_000, 8)
        assert qcv.estimate_alpha(x, N1).alpha_hat == pytest.approx(1.0, abs=0.02)

    def test_invariance(self):
        x = stable.sample(stable.StableParams(1.6), 500, 9)
        for spec in (N1, N2):
            a = qcv.estimate_alpha(x, spec).alpha_hat
            assert qcv.estimate_alpha(2.0 * x, spec).alpha_hat == a
            assert qcv.estimate_alpha(7.3 * x - 11.0, spec).alpha_hat == pytest.approx(a, abs=1e-9)

    def test_result_fields(self):
        x = stable.sample(stable.StableParams(1.6), 500, 9)
        r = qcv.estimate_alpha(x, N2)
        assert r.method == "n2" and r.n == 500 and r.statistic > 0
        d = r.to_dict()
        assert set(d) == {"method", "alpha_hat", "clamped", "n", "seed"}
        assert math.isfinite(d["alpha_hat"])
