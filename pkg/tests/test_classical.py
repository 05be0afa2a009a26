import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayescoint.classical import adf_test, critical_values, engle_granger_test, ols, pvalue
from bayescoint.core import Dataset, Method, RegressionSpec, Verdict
from bayescoint.datagen import embed_unit_root, simulate_ar
from bayescoint.errors import CollinearRegressors, DegenerateFit, DomainError, InsufficientData

sm_tools = pytest.importorskip("statsmodels.tsa.stattools")
sm_api = pytest.importorskip("statsmodels.api")

EG = RegressionSpec(True, Method.ENGLE_GRANGER, k_max=1)


def pair(seed, T, phi, beta=2.0, alpha=1.0):
    rng = np.random.default_rng(seed)
    x = np.cumsum(rng.normal(size=T))
    r = simulate_ar(phi, rng.normal(size=T + 100))[100:]
    return Dataset.from_columns(alpha + beta * x + r, x)


class TestOls:
    @pytest.mark.parametrize("intercept", [False, True])
    def test_matches_statsmodels(self, intercept):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 3))
        y = X @ [1.0, -2.0, 0.5] + 0.3 + rng.normal(size=50)
        fit = ols(y, X, intercept)
        design = sm_api.add_constant(X) if intercept else X
        ref = sm_api.OLS(y, design).fit()
        np.testing.assert_allclose(fit.coef, ref.params, rtol=1e-10)
        assert fit.ssr == pytest.approx(ref.ssr, rel=1e-10)
        np.testing.assert_allclose(fit.cov_unscaled * ref.scale, ref.cov_params(), rtol=1e-9)

    def test_collinear(self):
        X = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
        with pytest.raises(CollinearRegressors):
            ols(np.arange(10.0), X)

    def test_too_few_rows(self):
        with pytest.raises(InsufficientData):
            ols(np.ones(2), np.ones((2, 2)))


class TestCriticalValues:
    @pytest.mark.parametrize("nobs", [25, 100, 500])
    @pytest.mark.parametrize("n_series", [1, 2, 3])
    def test_constant_case_matches_statsmodels(self, nobs, n_series):
        ref = sm_tools.mackinnoncrit(N=n_series, regression="c", nobs=nobs)
        np.testing.assert_allclose(critical_values(nobs, n_series, "c"), ref, rtol=1e-10)

    def test_no_constant_single_series_matches_statsmodels(self):
        ref = sm_tools.mackinnoncrit(N=1, regression="n", nobs=200)
        np.testing.assert_allclose(critical_values(200, 1, "n"), ref, rtol=1e-10)

    def test_no_constant_falls_back_to_constant(self):
        np.testing.assert_array_equal(critical_values(100, 2, "n"), critical_values(100, 2, "c"))

    def test_pvalue_hits_levels(self):
        cv = critical_values(200, 2, "c")
        for level, c in zip((0.01, 0.05, 0.10), cv):
            assert pvalue(c, 200, 2, "c") == pytest.approx(level)

    def test_pvalue_clamped(self):
        assert pvalue(-50.0, 200) == 0.001
        assert pvalue(50.0, 200) == 0.999

    def test_unknown_trend(self):
        with pytest.raises(DomainError):
            critical_values(100, 1, "ct")


class TestAdf:
    @pytest.mark.parametrize("psi", [[0.6], [0.5, -0.4, 0.3]])
    def test_selected_lag_statistic_matches_statsmodels(self, psi):
        # differences follow AR(len(psi)) strongly enough that BIC picks exactly that many lags
        s = simulate_ar(embed_unit_root(psi), np.random.default_rng(len(psi)).normal(size=1500))
        ours = adf_test(s, 4)
        assert ours.selected_lags == len(psi)
        ref = sm_tools.adfuller(s, maxlag=len(psi), regression="n", autolag=None)
        assert ours.statistic == pytest.approx(ref[0], rel=1e-9)

    def test_zero_lags_matches_statsmodels(self):
        s = simulate_ar([0.8], np.random.default_rng(3).normal(size=200))
        ref = sm_tools.adfuller(s, maxlag=0, regression="n", autolag=None)
        assert adf_test(s, 0).statistic == pytest.approx(ref[0], rel=1e-10)

    def test_bic_picks_true_lag(self):
        s = simulate_ar([0.3, 0.5], np.random.default_rng(4).normal(size=2000))
        assert adf_test(s, 4).selected_lags == 1

    def test_random_walk_not_rejected(self):
        s = np.cumsum(np.random.default_rng(5).normal(size=500))
        assert not adf_test(s, 2).reject

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            adf_test(np.arange(8.0), 2)


class TestEngleGranger:
    def test_matches_statsmodels_coint(self):
        d = pair(6, 200, [0.7])
        ours = engle_granger_test(d, EG, k_max=0)
        ref = sm_tools.coint(d.y, d.x[:, 0], trend="c", maxlag=0, autolag=None)
        assert ours.statistic == pytest.approx(ref[0], rel=1e-9)
        assert ours.threshold == pytest.approx(ref[2][1], rel=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
    def test_affine_invariance_of_regressand(self, scale, shift):
        d = pair(7, 120, [0.6])
        a = engle_granger_test(d, EG).statistic
        moved = Dataset.from_columns(scale * d.y + shift, d.x[:, 0])
        assert engle_granger_test(moved, EG).statistic == pytest.approx(a, rel=1e-7)

    def test_stationary_residual_detected(self):
        assert engle_granger_test(pair(8, 500, [0.5]), EG).verdict is Verdict.COINTEGRATED

    def test_diagnostics(self):
        res = engle_granger_test(pair(9, 300, [0.5]), EG)
        assert res.diagnostics["beta2_0"] == pytest.approx(2.0, abs=0.05)
        assert res.diagnostics["bic_order"] == res.diagnostics["selected_lags"] + 1

    def test_exact_fit(self):
        x = np.cumsum(np.random.default_rng(0).normal(size=50))
        with pytest.raises(DegenerateFit):
            engle_granger_test(Dataset.from_columns(3 * x + 1, x), EG)

    def test_wrong_method(self):
        with pytest.raises(DomainError):
            engle_granger_test(pair(0, 100, [0.5]), RegressionSpec(True, Method.GIBBS, order=1))

    def test_rejection_rate_under_null(self):
        # independent random walks: rejections should stay near the nominal 5%
        rng = np.random.default_rng(10)
        rejects = 0
        for _ in range(400):
            y, x = np.cumsum(rng.normal(size=(2, 200)), axis=1)
            rejects += engle_granger_test(Dataset.from_columns(y, x), EG).verdict is Verdict.COINTEGRATED
        assert 0.02 < rejects / 400 < 0.09
