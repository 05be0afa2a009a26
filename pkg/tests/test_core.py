import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bayescoint.core import (
    Dataset,
    Method,
    RegressionSpec,
    TestResult,
    Verdict,
    build_residuals,
    decide,
    first_differences,
)
from bayescoint.errors import DimensionError, DomainError, InsufficientData, MissingDataError

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestDataset:
    def test_split_defaults_to_first_column(self):
        v = np.arange(12.0).reshape(4, 3) ** 1.5
        d = Dataset(np.vstack([v, v + 1, v * 2]))
        np.testing.assert_array_equal(d.y, d.values[:, 0])
        np.testing.assert_array_equal(d.x, d.values[:, 1:])
        assert d.labels == ("z0", "z1", "z2")

    def test_regressand_by_name(self):
        rng = np.random.default_rng(0)
        d = Dataset(rng.normal(size=(10, 3)), labels=("a", "b", "c")).with_regressand("c")
        np.testing.assert_array_equal(d.y, d.values[:, 2])
        assert d.regressor_labels == ("a", "b")
        with pytest.raises(DimensionError):
            d.with_regressand("zz")

    def test_values_are_read_only_copies(self):
        src = np.ones((6, 2))
        d = Dataset(src)
        src[0, 0] = 5.0
        assert d.values[0, 0] == 1.0
        with pytest.raises(ValueError):
            d.values[0, 0] = 2.0

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            Dataset(np.ones((4, 2)))

    def test_missing_value_position(self):
        v = np.ones((6, 2))
        v[3, 1] = np.nan
        with pytest.raises(MissingDataError) as err:
            Dataset(v)
        assert (err.value.line, err.value.column) == (3, 1)


class TestResiduals:
    def test_identity_case(self):
        z = np.linspace(0, 1, 6)
        d = Dataset.from_columns(z, z)
        np.testing.assert_array_equal(build_residuals(d, [1.0], 0.0).r, 0.0)

    def test_exact_linear_relation(self):
        d = Dataset.from_columns([1, 2, 3, 4, 5], [0, 1, 2, 3, 4])
        np.testing.assert_array_equal(build_residuals(d, [1.0], 1.0).r, 0.0)

    def test_matches_elementwise_loop(self):
        rng = np.random.default_rng(7)
        v = rng.normal(size=(30, 4))
        beta = rng.normal(size=3)
        res = build_residuals(Dataset(v), beta, 0.3).r
        for t in range(30):
            expected = v[t, 0] - 0.3
            for j in range(3):
                expected -= beta[j] * v[t, 1 + j]
            assert res[t] == pytest.approx(expected, abs=1e-12)

    def test_wrong_beta_length(self):
        with pytest.raises(DimensionError):
            build_residuals(Dataset(np.ones((6, 3))), [1.0])

    @given(arrays(np.float64, (8, 3), elements=finite), arrays(np.float64, 2, elements=finite), finite,
           st.floats(0.1, 10.0))
    @settings(max_examples=50, deadline=None)
    def test_linear_in_y_and_coefficients(self, v, beta, alpha, c):
        d = Dataset(v)
        scaled = Dataset(np.column_stack([c * v[:, 0], v[:, 1:]]))
        lhs = build_residuals(scaled, c * beta, c * alpha).r
        rhs = c * build_residuals(d, beta, alpha).r
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + np.abs(rhs).max()))


class TestDifferences:
    @pytest.mark.parametrize("series, expected", [([1, 1, 1], [0, 0]), ([0, 1, 3, 6], [1, 2, 3])])
    def test_examples(self, series, expected):
        np.testing.assert_array_equal(first_differences(series), expected)

    def test_shifted_subtraction(self):
        s = np.random.default_rng(3).normal(size=50)
        np.testing.assert_array_equal(first_differences(s), [s[i + 1] - s[i] for i in range(49)])

    @given(arrays(np.float64, st.integers(1, 30), elements=st.integers(-1000, 1000).map(float)))
    def test_inverts_cumulative_sum(self, v):
        np.testing.assert_array_equal(first_differences(np.concatenate([[0.0], np.cumsum(v)])), v)

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            first_differences([1.0])


class TestDecision:
    @pytest.mark.parametrize("stat, thr, method, verdict", [
        (2.0, 1.0, Method.AR1_BAYES_FACTOR, Verdict.NOT_COINTEGRATED),
        (1.0, 1.0, Method.AR1_BAYES_FACTOR, Verdict.NOT_COINTEGRATED),
        (0.5, 1.0, Method.AR1_BAYES_FACTOR, Verdict.COINTEGRATED),
        (0.01, 0.05, Method.AR1_CREDIBLE, Verdict.COINTEGRATED),
        (0.05, 0.05, Method.GIBBS, Verdict.COINTEGRATED),
        (0.5, 0.05, Method.RJMCMC, Verdict.NOT_COINTEGRATED),
        (-4.0, -3.3, Method.ENGLE_GRANGER, Verdict.COINTEGRATED),
        (-2.0, -3.3, Method.ENGLE_GRANGER, Verdict.NOT_COINTEGRATED),
    ])
    def test_rule(self, stat, thr, method, verdict):
        assert decide(stat, thr, method) is verdict

    @pytest.mark.parametrize("method", list(Method))
    def test_threshold_sweep_switches_at_most_once(self, method):
        verdicts = [decide(0.3, thr, method) for thr in np.linspace(-1, 2, 61)]
        switches = sum(a is not b for a, b in zip(verdicts, verdicts[1:]))
        assert switches <= 1

    def test_result_keys_are_stable(self):
        r = TestResult.from_statistic(0.2, 0.05, Method.RJMCMC, diagnostics={"b": 1.0, "a": 2.0})
        keys = [k for k, _ in r.key_values()]
        assert keys == ["method", "verdict", "statistic", "threshold", "a", "b"]
        assert r.verdict is Verdict.NOT_COINTEGRATED


class TestRegressionSpec:
    def test_gibbs_needs_order(self):
        with pytest.raises(DomainError):
            RegressionSpec(method=Method.GIBBS)
        with pytest.raises(DomainError):
            RegressionSpec(method=Method.GIBBS, order=6, k_max=5)
        assert RegressionSpec(method="gibbs", order=2).method is Method.GIBBS

    def test_level_range(self):
        with pytest.raises(DomainError):
            RegressionSpec(method=Method.AR1_CREDIBLE, alpha_level=1.5)
