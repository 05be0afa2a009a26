"""Frequentist baseline: OLS, augmented Dickey-Fuller and the Engle-Granger test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._critical_values import LEVELS, RESPONSE_SURFACE
from .core import Dataset, Method, RegressionSpec, TestResult
from .errors import CollinearRegressors, DegenerateFit, DomainError, InsufficientData

__all__ = [
    "AdfResult",
    "OlsResult",
    "adf_test",
    "critical_values",
    "engle_granger_test",
    "ols",
    "pvalue",
]


@dataclass(frozen=True)
class OlsResult:
    coef: np.ndarray
    residuals: np.ndarray
    ssr: float
    intercept: float | None = None
    cov_unscaled: np.ndarray | None = None

    @property
    def slopes(self) -> np.ndarray:
        return self.coef[1:] if self.intercept is not None else self.coef


def ols(y, X, intercept: bool = False) -> OlsResult:
    """Least squares of ``y`` on the columns of ``X`` (plus a leading constant if asked)."""
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64).reshape(y.shape[0], -1)
    if intercept:
        X = np.column_stack([np.ones(y.shape[0]), X])
    n, p = X.shape
    if n <= p:
        raise InsufficientData(f"{n} rows cannot fit {p} coefficients")
    if p == 0:
        return OlsResult(np.zeros(0), y.copy(), float(y @ y), None, np.zeros((0, 0)))
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * max(diag.max(), 1e-300):
        raise CollinearRegressors("regressors are rank deficient")
    coef = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ coef
    Rinv = np.linalg.inv(R)
    return OlsResult(coef, resid, float(resid @ resid), float(coef[0]) if intercept else None, Rinv @ Rinv.T)


def _surface(n_series: int, trend: str) -> tuple[tuple[float, ...], ...]:
    if trend not in RESPONSE_SURFACE:
        raise DomainError(f"unknown deterministic specification {trend!r}")
    table = RESPONSE_SURFACE[trend]
    if not 1 <= n_series <= len(table):
        if trend == "n":
            # only tabulated for one series; the constant case is the conservative stand-in
            return _surface(n_series, "c")
        raise DomainError(f"critical values tabulated for 1..{len(table)} series, got {n_series}")
    return table[n_series - 1]


def critical_values(nobs: int, n_series: int = 1, trend: str = "n") -> np.ndarray:
    """Critical values at the 1%, 5% and 10% levels for ``nobs`` observations."""
    T = float(nobs)
    return np.array([b0 + b1 / T + b2 / T ** 2 + b3 / T ** 3 for b0, b1, b2, b3 in _surface(n_series, trend)])


def pvalue(statistic: float, nobs: int, n_series: int = 1, trend: str = "n") -> float:
    """Tail probability by linear interpolation between the tabulated quantiles, clamped to [0.001, 0.999]."""
    cv = critical_values(nobs, n_series, trend)
    seg = 0 if statistic <= cv[1] else 1
    slope = (LEVELS[seg + 1] - LEVELS[seg]) / (cv[seg + 1] - cv[seg])
    return float(np.clip(LEVELS[seg] + slope * (statistic - cv[seg]), 0.001, 0.999))


def _threshold(level: float, nobs: int, n_series: int, trend: str) -> float:
    """Critical value at ``level``; the inverse of the piecewise-linear :func:`pvalue` map."""
    cv = critical_values(nobs, n_series, trend)
    seg = 0 if level <= LEVELS[1] else 1
    slope = (cv[seg + 1] - cv[seg]) / (LEVELS[seg + 1] - LEVELS[seg])
    return float(cv[seg] + slope * (level - LEVELS[seg]))


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    selected_lags: int
    pvalue_band: float
    reject: bool
    critical_value: float
    nobs: int
    bic: np.ndarray


def _adf_design(series: np.ndarray, lags: int, start: int, constant: bool) -> tuple[np.ndarray, np.ndarray]:
    """Rows for dR_t, t >= start (indices into the differenced series), regressors R_{t-1}, dR_{t-1..t-lags}."""
    d = np.diff(series)
    cols = [series[start:-1]]
    for i in range(1, lags + 1):
        cols.append(d[start - i:d.size - i])
    if constant:
        cols.append(np.ones(d.size - start))
    return d[start:], np.column_stack(cols)


def adf_test(series, k_max: int = 4, level: float = 0.05, *, n_series: int = 1, trend: str = "n",
             constant: bool = False) -> AdfResult:
    """ADF regression dR_t = gamma R_{t-1} + sum_i xi_i dR_{t-i} + e_t with BIC lag choice.

    Lag counts 0..k_max are compared by BIC on a common sample (the last
    T - 1 - k_max differences); the chosen one is refitted on all available
    rows. The t-ratio of gamma is compared with the response-surface critical
    value for ``n_series`` series and cointegrating-regression terms
    ``trend``. ``constant`` adds a constant to the ADF regression itself.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or series.size <= k_max + 10:
        raise InsufficientData(f"series of length {series.size} is too short for {k_max} lags")
    if k_max < 0:
        raise DomainError("k_max must be non-negative")
    bic = np.empty(k_max + 1)
    for p in range(k_max + 1):
        y, X = _adf_design(series, p, k_max, constant)
        fit = ols(y, X)
        n = y.size
        if fit.ssr <= 0.0:
            raise DegenerateFit("ADF regression fits exactly")
        bic[p] = n * np.log(fit.ssr / n) + X.shape[1] * np.log(n)
    lags = int(np.argmin(bic))
    y, X = _adf_design(series, lags, lags, constant)
    fit = ols(y, X)
    n, q = X.shape
    if fit.ssr <= 0.0:
        raise DegenerateFit("ADF regression fits exactly")
    s2 = fit.ssr / (n - q)
    stat = float(fit.coef[0] / np.sqrt(s2 * fit.cov_unscaled[0, 0]))
    thr = _threshold(level, n, n_series, trend)
    return AdfResult(stat, lags, pvalue(stat, n, n_series, trend), stat < thr, thr, n, bic)


def engle_granger_test(data: Dataset, spec: RegressionSpec, k_max: int | None = None) -> TestResult:
    """Two-stage test: OLS cointegrating regression, then ADF on its residuals.

    The ADF regression has no deterministic terms; critical values are the
    residual-based ones for ``data.n`` series with or without a constant in
    the cointegrating regression, following ``spec.intercept``. Lags are
    chosen by BIC up to ``k_max`` (default ``spec.k_max - 1``, i.e. residual
    autoregressions up to order ``spec.k_max``).
    """
    if spec.method is not Method.ENGLE_GRANGER:
        raise DomainError(f"engle_granger_test does not handle method {spec.method.value}")
    fit = ols(data.y, data.x, spec.intercept)
    scale = float(data.y @ data.y) or 1.0
    if fit.ssr <= 1e-24 * scale:
        raise DegenerateFit("cointegrating regression fits exactly; residuals are zero")
    lags = max(spec.k_max - 1, 0) if k_max is None else k_max
    adf = adf_test(fit.residuals, lags, spec.alpha_level, n_series=data.n, trend="c" if spec.intercept else "n")
    diag = {"pvalue": adf.pvalue_band, "selected_lags": float(adf.selected_lags), "bic_order": float(
        adf.selected_lags + 1), "nobs": float(adf.nobs)}
    for j, b in enumerate(fit.slopes):
        diag[f"beta2_{j}"] = float(b)
    if fit.intercept is not None:
        diag["intercept"] = fit.intercept
    return TestResult.from_statistic(adf.statistic, adf.critical_value, spec.method, diagnostics=diag, posterior=adf)
