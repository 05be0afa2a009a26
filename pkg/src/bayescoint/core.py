"""Data model: observed series, regression options, residuals and decisions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DimensionError, DomainError, InsufficientData, MissingDataError

__all__ = [
    "Dataset",
    "Method",
    "RegressionSpec",
    "ResidualSeries",
    "TestResult",
    "Verdict",
    "build_residuals",
    "decide",
    "first_differences",
]


class Method(str, enum.Enum):
    AR1_BAYES_FACTOR = "ar1-bf"
    AR1_CREDIBLE = "ar1-credible"
    GIBBS = "gibbs"
    RJMCMC = "rjmcmc"
    ENGLE_GRANGER = "engle-granger"

    @property
    def is_credible(self) -> bool:
        return self in (Method.AR1_CREDIBLE, Method.GIBBS, Method.RJMCMC)


class Verdict(str, enum.Enum):
    COINTEGRATED = "cointegrated"
    NOT_COINTEGRATED = "not-cointegrated"


@dataclass(frozen=True)
class Dataset:
    """A T x n block of observations; one column is the regressand.

    Parameters
    ----------
    values : array_like
        Observations, rows are time points and columns are series.
    regressand_index : int
        Column holding Y_t. The remaining columns, in order, are X_t.
    labels : sequence of str, optional
        Column names. Defaults to ``z0, z1, ...``.
    """

    values: np.ndarray
    regressand_index: int = 0
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DimensionError("values must be a T x n matrix")
        T, n = values.shape
        if n < 1:
            raise DimensionError("need at least one series")
        if not 0 <= self.regressand_index < n:
            raise DimensionError(f"regressand_index {self.regressand_index} out of range for n={n}")
        if T < n + 3:
            raise InsufficientData(f"T={T} observations is too few for n={n} series (need T >= n + 3)")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            row, col = bad[0]
            raise MissingDataError("non-finite value in data", line=int(row), column=int(col))
        labels = tuple(self.labels) if self.labels else tuple(f"z{i}" for i in range(n))
        if len(labels) != n:
            raise DimensionError(f"{len(labels)} labels for {n} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_columns(cls, y: Sequence[float], x: Any = None, labels: Sequence[str] = ()) -> "Dataset":
        """Build a dataset with ``y`` as column 0 and the columns of ``x`` after it."""
        y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
        if x is None:
            values = y
        else:
            x = np.asarray(x, dtype=np.float64)
            if x.ndim == 1:
                x = x[:, None]
            values = np.hstack([y, x])
        return cls(values, 0, tuple(labels))

    def with_regressand(self, name: str) -> "Dataset":
        try:
            idx = self.labels.index(name)
        except ValueError:
            raise DimensionError(f"no column named {name!r}; have {list(self.labels)}") from None
        return Dataset(self.values, idx, self.labels)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def y(self) -> np.ndarray:
        return self.values[:, self.regressand_index]

    @property
    def x(self) -> np.ndarray:
        """Regressors as a T x (n-1) matrix (possibly with zero columns)."""
        keep = [i for i in range(self.n) if i != self.regressand_index]
        return self.values[:, keep]

    @property
    def regressor_labels(self) -> tuple[str, ...]:
        return tuple(l for i, l in enumerate(self.labels) if i != self.regressand_index)


@dataclass(frozen=True)
class RegressionSpec:
    intercept: bool = True
    method: Method = Method.RJMCMC
    order: int | None = None
    k_max: int = 5
    alpha_level: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if self.k_max < 0:
            raise DomainError("k_max must be non-negative")
        if self.method is Method.GIBBS:
            if self.order is None:
                raise DomainError("GibbsFixedOrder requires an order")
            if not 1 <= self.order <= self.k_max:
                raise DomainError(f"order {self.order} outside 1..k_max={self.k_max}")
        if self.method.is_credible and not 0.0 < self.alpha_level < 1.0:
            raise DomainError("alpha_level must lie in (0, 1) for credible tests")
        if self.method is Method.AR1_BAYES_FACTOR and not self.alpha_level > 0.0:
            raise DomainError("Bayes factor threshold must be positive")
        if self.method is Method.ENGLE_GRANGER and not 0.0 < self.alpha_level < 1.0:
            raise DomainError("significance level must lie in (0, 1)")


@dataclass(frozen=True)
class ResidualSeries:
    r: np.ndarray
    beta2: np.ndarray
    intercept_value: float | None = None


def build_residuals(data: Dataset, beta2: Any, intercept: float | None = None) -> ResidualSeries:
    """Residual process r_t = y_t - beta2' x_t - alpha."""
    beta2 = np.atleast_1d(np.asarray(beta2, dtype=np.float64))
    if beta2.ndim != 1 or beta2.shape[0] != data.n - 1:
        raise DimensionError(f"beta2 must have length n-1={data.n - 1}, got shape {beta2.shape}")
    r = data.y - data.x @ beta2
    if intercept is not None:
        r = r - float(intercept)
    return ResidualSeries(r, beta2.copy(), None if intercept is None else float(intercept))


def first_differences(series: Any) -> np.ndarray:
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or series.shape[0] < 2:
        raise InsufficientData("first differences need a vector of length >= 2")
    return series[1:] - series[:-1]


def decide(statistic: float, threshold: float, method: Method) -> Verdict:
    """Map a test statistic to a verdict.

    Bayes factor: not cointegrated iff K >= threshold. Credible tests:
    cointegrated iff the unit-root tail mass is <= threshold. Engle-Granger:
    cointegrated iff the ADF t-ratio falls strictly below the critical value.
    """
    method = Method(method)
    if method is Method.AR1_BAYES_FACTOR:
        return Verdict.NOT_COINTEGRATED if statistic >= threshold else Verdict.COINTEGRATED
    if method is Method.ENGLE_GRANGER:
        return Verdict.COINTEGRATED if statistic < threshold else Verdict.NOT_COINTEGRATED
    return Verdict.COINTEGRATED if statistic <= threshold else Verdict.NOT_COINTEGRATED


@dataclass(frozen=True)
class TestResult:
    verdict: Verdict
    statistic: float
    threshold: float
    method: Method
    diagnostics: Mapping[str, float] = field(default_factory=dict)
    posterior: Any = None
    order_posterior: Any = None
    draws: Any = None

    __test__ = False  # keep pytest from collecting this class

    @classmethod
    def from_statistic(cls, statistic: float, threshold: float, method: Method, **kwargs: Any) -> "TestResult":
        return cls(decide(statistic, threshold, method), float(statistic), float(threshold), Method(method), **kwargs)

    def key_values(self) -> list[tuple[str, str]]:
        """Stable key=value pairs for machine-readable output."""
        out = [
            ("method", self.method.value),
            ("verdict", self.verdict.value),
            ("statistic", repr(float(self.statistic))),
            ("threshold", repr(float(self.threshold))),
        ]
        for key in sorted(self.diagnostics):
            out.append((key, repr(float(self.diagnostics[key]))))
        return out
