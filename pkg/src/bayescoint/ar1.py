"""Exact Bayesian cointegration tests when the residual process is AR(1).

The regression coefficients (and intercept) get a flat prior, the noise
variance the 1/sigma^2 prior; both are integrated out analytically so the
marginal likelihood is a closed-form function of the autoregressive
coefficient phi alone.

Three treatments of the first observation are supported:

``STATIONARY_PRIOR``
    R_1 ~ N(0, sigma^2 / (1 - phi^2)); only defined for |phi| < 1. The unit
    root value is obtained as the limit phi -> 1.
``UNIT_VARIANCE_PRIOR``
    R_1 ~ N(0, sigma^2); defined for every phi. Used by the credible test.
``CONDITIONAL``
    condition on the first observation (likelihood of y_2..y_T only).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .core import Dataset, Method, RegressionSpec, TestResult
from .errors import CollinearRegressors, DomainError, GridTooNarrow, InsufficientData
from .numerics import LimitEstimate, adaptive_log_integral, richardson_limit

__all__ = [
    "Ar1Likelihood",
    "Ar1SuffStats",
    "BayesFactorResult",
    "GridSpec",
    "InitialObs",
    "PhiPosterior",
    "ar1_test",
    "bayes_factor",
    "log_likelihood_at_unit_root",
    "log_marginal_likelihood",
    "phi_posterior",
    "suff_stats",
]


class InitialObs(str, enum.Enum):
    STATIONARY_PRIOR = "stationary"
    UNIT_VARIANCE_PRIOR = "unit-variance"
    CONDITIONAL = "conditional"


@dataclass(frozen=True)
class Ar1SuffStats:
    phi: float
    L_XX: np.ndarray
    L_XY: np.ndarray
    L_YY: float
    g: float
    nu_p: int
    s_p: float


class Ar1Likelihood:
    """Marginal likelihood of phi for one dataset, vectorised over phi.

    The quadratic forms are assembled from lag moment matrices once, in the
    parameterisation phi = 1 - eps so that the intercept entries, which scale
    with eps, stay accurate right up to the unit root.

    Parameters
    ----------
    data : Dataset
    intercept : bool
        Include the regression intercept alpha.
    initial_obs : InitialObs
    """

    def __init__(self, data: Dataset, intercept: bool, initial_obs: InitialObs | str):
        self.data = data
        self.intercept = bool(intercept)
        self.initial_obs = InitialObs(initial_obs)
        y, x = data.y, data.x
        cols = ([np.ones(data.T)] if self.intercept else []) + [x[:, j] for j in range(x.shape[1])] + [y]
        u = np.column_stack(cols)
        du = u[1:] - u[:-1]
        lag = u[:-1]
        self.p = u.shape[1] - 1
        self._u1 = np.outer(u[0], u[0])
        self._D0 = du.T @ du
        D1 = du.T @ lag
        self._D1s = D1 + D1.T
        self._S2 = lag.T @ lag
        self.n_terms = data.T - 1 if self.initial_obs is InitialObs.CONDITIONAL else data.T
        self.nu = self.n_terms - self.p
        if self.nu <= 0:
            raise InsufficientData(f"{self.n_terms} likelihood terms cannot identify {self.p} coefficients")

    def _weight(self, phi: np.ndarray, eps: np.ndarray) -> np.ndarray:
        if self.initial_obs is InitialObs.STATIONARY_PRIOR:
            return eps * (1.0 + phi)
        if self.initial_obs is InitialObs.UNIT_VARIANCE_PRIOR:
            return np.ones_like(phi)
        return np.zeros_like(phi)

    def moment_matrix(self, phi=None, *, eps=None) -> np.ndarray:
        """Stacked [[L_XX, L_XY], [L_XY', L_YY]] for each phi (shape (G, p+1, p+1))."""
        if eps is None:
            phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
            eps = 1.0 - phi
        else:
            eps = np.atleast_1d(np.asarray(eps, dtype=np.float64))
            phi = 1.0 - eps
        w = self._weight(phi, eps)
        e = eps[:, None, None]
        return (w[:, None, None] * self._u1 + self._D0 + e * self._D1s + (e * e) * self._S2)

    def log_likelihood(self, phi=None, *, eps=None) -> np.ndarray:
        """log p(y | x, phi) up to an additive constant that does not depend on phi."""
        if eps is None:
            phi_arr = np.atleast_1d(np.asarray(phi, dtype=np.float64))
            eps_arr = 1.0 - phi_arr
        else:
            eps_arr = np.atleast_1d(np.asarray(eps, dtype=np.float64))
            phi_arr = 1.0 - eps_arr
        stationary = self.initial_obs is InitialObs.STATIONARY_PRIOR
        if stationary and np.any((eps_arr <= 0.0) | (phi_arr <= -1.0)):
            raise DomainError("the stationary initial-observation prior needs |phi| < 1")
        M = self.moment_matrix(eps=eps_arr)
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            bad = [float(ph) for ph, Mi in zip(phi_arr, M) if not _is_pd(Mi)]
            raise CollinearRegressors(
                f"regressors are collinear or the fit is exact at phi={bad[:3]}", node=bad[0] if bad else None
            ) from None
        diag = np.log(np.diagonal(L, axis1=1, axis2=2))
        logdet_xx = 2.0 * diag[:, :-1].sum(axis=1)
        log_g = 2.0 * diag[:, -1]
        out = -0.5 * logdet_xx - 0.5 * self.nu * log_g
        if stationary:
            out = out + 0.5 * np.log(eps_arr * (1.0 + phi_arr))
        return out


def _is_pd(M: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(M)
        return True
    except np.linalg.LinAlgError:
        return False


def suff_stats(data: Dataset, phi: float, intercept: bool, initial_obs: InitialObs | str) -> Ar1SuffStats:
    model = Ar1Likelihood(data, intercept, initial_obs)
    if model.initial_obs is InitialObs.STATIONARY_PRIOR and abs(phi) >= 1.0:
        raise DomainError("the stationary initial-observation prior needs |phi| < 1")
    M = model.moment_matrix(phi)[0]
    p = model.p
    L_XX, L_XY, L_YY = M[:p, :p].copy(), M[:p, p].copy(), float(M[p, p])
    if p:
        try:
            sol = np.linalg.solve(L_XX, L_XY)
        except np.linalg.LinAlgError:
            raise CollinearRegressors(f"L_XX is singular at phi={phi}") from None
        if not np.all(np.isfinite(sol)) or np.linalg.cond(L_XX) > 1e15:
            raise CollinearRegressors(f"L_XX is singular at phi={phi}")
        g = L_YY - float(L_XY @ sol)
    else:
        g = L_YY
    nu = model.nu
    return Ar1SuffStats(float(phi), L_XX, L_XY, L_YY, g, nu, float(np.sqrt(max(g, 0.0) / nu)))


def log_marginal_likelihood(data: Dataset, phi, intercept: bool, initial_obs: InitialObs | str):
    """log of the phi-dependent part of the marginal likelihood.

    Returns a float for scalar ``phi`` and an array otherwise.
    """
    out = Ar1Likelihood(data, intercept, initial_obs).log_likelihood(phi)
    return float(out[0]) if np.ndim(phi) == 0 else out


def _default_mode(intercept: bool) -> InitialObs:
    return InitialObs.STATIONARY_PRIOR if intercept else InitialObs.CONDITIONAL


def _unit_root_limit(model: Ar1Likelihood, eps0: float = 1e-2, levels: int = 8) -> LimitEstimate:
    if model.initial_obs is not InitialObs.STATIONARY_PRIOR and not model.intercept:
        value = float(model.log_likelihood(1.0)[0])
        return LimitEstimate(value, 0.0, np.array([[value]]))
    # log-likelihood is analytic in eps when the limit exists; on the log scale
    # an absolute error is a relative error of the likelihood itself
    return richardson_limit(lambda e: float(model.log_likelihood(eps=e)[0]), eps0, levels, rtol=0.0, atol=1e-5)


def log_likelihood_at_unit_root(data: Dataset, intercept: bool, initial_obs: InitialObs | str | None = None) -> float:
    """log marginal likelihood at phi = 1, on the same scale as :func:`log_marginal_likelihood`.

    Without an intercept (conditional or unit-variance treatment) the
    likelihood is continuous at 1 and is evaluated directly. Otherwise the
    value is the limit phi -> 1 from below, found by Richardson extrapolation.

    Raises
    ------
    LimitDiverged
        When the limit does not exist, e.g. conditional likelihood with an
        intercept, where the intercept is not identified at phi = 1.
    """
    mode = _default_mode(intercept) if initial_obs is None else InitialObs(initial_obs)
    return _unit_root_limit(Ar1Likelihood(data, intercept, mode)).value


@dataclass(frozen=True)
class BayesFactorResult:
    K: float
    log_numerator: float
    log_denominator: float
    grid_diagnostics: list = field(default_factory=list, repr=False)

    @property
    def log_K(self) -> float:
        return self.log_numerator - self.log_denominator


def _peak_breakpoints(model: Ar1Likelihood, lo: float, hi: float) -> list[float]:
    scan = np.linspace(lo, hi, 2001)[1:-1]
    ll = model.log_likelihood(scan)
    top = scan[int(np.argmax(ll))]
    support = scan[ll > ll.max() - 40.0]
    width = max(support.max() - support.min(), 1e-6)
    return [float(v) for v in top + width * np.array([-1.0, -0.5, -0.2, -0.05, 0.0, 0.05, 0.2, 0.5, 1.0])]


def bayes_factor(data: Dataset, intercept: bool) -> BayesFactorResult:
    """K = L(phi = 1) / (1/2 * integral_{-1}^{1} L(phi) dphi).

    No intercept: conditional likelihood for both numerator and denominator.
    With intercept: stationary prior on the first residual, numerator as the
    phi -> 1 limit.
    """
    model = Ar1Likelihood(data, intercept, _default_mode(intercept))
    limit = _unit_root_limit(model)
    log_int, record = adaptive_log_integral(model.log_likelihood, -1.0, 1.0,
                                            extra_breakpoints=_peak_breakpoints(model, -1.0, 1.0))
    log_den = np.log(0.5) + log_int
    log_k = limit.value - log_den
    record.append({"limit_error": limit.error})
    return BayesFactorResult(float(np.exp(min(log_k, 700.0))), limit.value, float(log_den), record)


@dataclass(frozen=True)
class GridSpec:
    lo: float = -1.5
    hi: float = 1.5
    points: int = 1001
    refine: bool = True


@dataclass(frozen=True)
class PhiPosterior:
    grid: np.ndarray
    density: np.ndarray
    prob_phi_ge_1: float
    prob_stationary: float

    @property
    def mode(self) -> float:
        return float(self.grid[int(np.argmax(self.density))])

    @property
    def prob_phi_le_minus_1(self) -> float:
        return _trapz_mass(self.grid, self.density, -np.inf, -1.0)


def _trapz_mass(grid: np.ndarray, density: np.ndarray, lo: float, hi: float) -> float:
    mask = (grid >= lo) & (grid <= hi)
    if mask.sum() < 2:
        return 0.0
    return float(trapezoid(density[mask], grid[mask]))


BOUNDARY_MASS_LIMIT = 1e-4


def phi_posterior(data: Dataset, intercept: bool, grid_spec: GridSpec | None = None) -> PhiPosterior:
    """Flat-prior posterior of phi on a grid, under the N(0, sigma^2) first-residual prior.

    Raises
    ------
    GridTooNarrow
        If more than 1e-4 of the posterior mass sits in the outer 1% of the
        grid on either side.
    """
    spec = grid_spec or GridSpec()
    model = Ar1Likelihood(data, intercept, InitialObs.UNIT_VARIANCE_PRIOR)
    grid = np.linspace(spec.lo, spec.hi, spec.points)
    extra = [-1.0, 1.0]
    if spec.refine:
        ll = model.log_likelihood(grid)
        support = grid[ll > ll.max() - 40.0]
        lo, hi = support.min(), support.max()
        step = grid[1] - grid[0]
        lo, hi = max(spec.lo, lo - 2 * step), min(spec.hi, hi + 2 * step)
        extra.extend(np.linspace(lo, hi, 2001))
    grid = np.unique(np.concatenate([grid, [e for e in extra if spec.lo <= e <= spec.hi]]))
    ll = model.log_likelihood(grid)
    dens = np.exp(ll - ll.max())
    dens /= trapezoid(dens, grid)
    edge = 0.01 * (spec.hi - spec.lo)
    boundary = max(_trapz_mass(grid, dens, spec.lo, spec.lo + edge), _trapz_mass(grid, dens, spec.hi - edge, spec.hi))
    if boundary > BOUNDARY_MASS_LIMIT:
        raise GridTooNarrow(f"posterior mass {boundary:.2e} at the edge of [{spec.lo}, {spec.hi}]")
    return PhiPosterior(grid, dens, _trapz_mass(grid, dens, 1.0, np.inf), _trapz_mass(grid, dens, -1.0, 1.0))


def _posterior_widening(data: Dataset, intercept: bool, spec: GridSpec, tries: int = 5) -> PhiPosterior:
    for _ in range(tries):
        try:
            return phi_posterior(data, intercept, spec)
        except GridTooNarrow:
            spec = GridSpec(2 * spec.lo, 2 * spec.hi, 2 * spec.points - 1, spec.refine)
    return phi_posterior(data, intercept, spec)


def ar1_test(data: Dataset, spec: RegressionSpec, grid_spec: GridSpec | None = None) -> TestResult:
    """Bayes factor or credible-interval test for an AR(1) residual process."""
    if spec.method is Method.AR1_BAYES_FACTOR:
        bf = bayes_factor(data, spec.intercept)
        return TestResult.from_statistic(bf.K, spec.alpha_level, spec.method,
                                         diagnostics={"log_K": bf.log_K}, posterior=bf)
    if spec.method is Method.AR1_CREDIBLE:
        post = _posterior_widening(data, spec.intercept, grid_spec or GridSpec())
        diag = {"prob_stationary": post.prob_stationary, "prob_phi_le_minus_1": post.prob_phi_le_minus_1,
                "phi_mode": post.mode}
        return TestResult.from_statistic(post.prob_phi_ge_1, spec.alpha_level, spec.method,
                                         diagnostics=diag, posterior=post)
    raise DomainError(f"ar1_test does not handle method {spec.method.value}")


def statistic_for_roc(data: Dataset, method: Method, intercept: bool = True) -> float:
    """Score oriented so that larger means more unit-root-like."""
    if method is Method.AR1_BAYES_FACTOR:
        return bayes_factor(data, intercept).log_K
    return _posterior_widening(data, intercept, GridSpec()).prob_phi_ge_1

