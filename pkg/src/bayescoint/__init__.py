"""Bayesian tests for cointegration with autoregressive residuals.

The residual of the cointegrating regression y_t = beta2' x_t + alpha + R_t
is modelled as an autoregression; the series are cointegrated when R_t is
stationary. Exact AR(1) tests live in :mod:`bayescoint.ar1`, fixed-order
Gibbs sampling in :mod:`bayescoint.arp`, order uncertainty in
:mod:`bayescoint.order` and the Engle-Granger baseline in
:mod:`bayescoint.classical`.
"""

from .core import Dataset, Method, RegressionSpec, ResidualSeries, TestResult, Verdict, build_residuals, decide
from .errors import CointegrationError, DataError, NumericalError

__version__ = "0.1.0"

__all__ = [
    "CointegrationError",
    "DataError",
    "Dataset",
    "Method",
    "NumericalError",
    "RegressionSpec",
    "ResidualSeries",
    "TestResult",
    "Verdict",
    "build_residuals",
    "decide",
]
