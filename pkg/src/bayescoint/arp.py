"""AR(k) residual processes and the fixed-order Gibbs sampler.

The residual R_t = y_t - beta2' x_t - alpha is written in error-correction
form

    R_t = rho R_{t-1} + sum_{i<k} xi_i dR_{t-i} + e_t,   e_t ~ N(0, sigma2),

so that rho = sum(phi) and the unit root is the single point rho = 1. The
likelihood conditions on the first ``cond`` observations (``cond = k``
unless told otherwise). Without an intercept that is the whole model. With
one, alpha is a regression coefficient like beta2 and the first ``cond``
residuals get independent N(0, sigma2) terms: at rho = 1 the conditional
likelihood does not involve alpha, and these terms keep its posterior
proper. With flat priors on (rho, xi, alpha, beta2) and a 1/sigma2 prior
every full conditional is Gaussian or scaled inverse chi-squared.

The single-observation helpers (:func:`build_design`, :func:`sample_rho_xi`,
:func:`sample_beta2`, :func:`sample_sigma2`) are plain numpy. Long chains
run through the compiled kernel in :mod:`bayescoint._kernels`, which
implements the same updates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from . import _kernels
from .core import Dataset, Method, RegressionSpec, TestResult
from .errors import (
    ChainFailed,
    DegenerateError,
    DegenerateFit,
    DimensionError,
    DomainError,
    InsufficientData,
)
from .numerics import ScaledInvChi2, polynomial_roots, sample_gaussian_conditional, sample_scaled_inv_chi2, solve_spd

__all__ = [
    "ArParams",
    "DesignBlock",
    "DesignMatrices",
    "GibbsState",
    "McmcConfig",
    "PosteriorDraws",
    "RhoXiParams",
    "ar_roots",
    "build_design",
    "gibbs_run",
    "gibbs_test",
    "initial_state",
    "phi_to_rho_xi",
    "rho_from_roots",
    "rho_xi_to_phi",
    "sample_beta2",
    "sample_rho_xi",
    "sample_sigma2",
    "tail_frequency",
    "tail_mass",
    "with_coef",
]

UNIT_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class RhoXiParams:
    rho: float
    xi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=np.float64)))

    @property
    def k(self) -> int:
        return self.xi.shape[0] + 1


def phi_to_rho_xi(phi) -> RhoXiParams:
    """rho = sum(phi), xi_i = -sum_{j>i} phi_j."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    if phi.size == 0:
        raise DegenerateError("an autoregression needs at least one coefficient")
    tail = np.cumsum(phi[::-1])[::-1]  # tail[i] = sum_{j>=i} phi_j
    return RhoXiParams(float(phi.sum()), -tail[1:])


def rho_xi_to_phi(params: RhoXiParams) -> np.ndarray:
    """Inverse of :func:`phi_to_rho_xi`."""
    xi = params.xi
    if xi.size == 0:
        return np.array([params.rho])
    return np.concatenate([[params.rho + xi[0]], np.diff(xi), [-xi[-1]]])


def ar_roots(phi) -> np.ndarray:
    """Roots of Pi(z) = z^k - phi_1 z^{k-1} - ... - phi_k."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    return polynomial_roots(np.concatenate([[1.0], -phi]))


def rho_from_roots(roots) -> float:
    """rho = (-1)^(k+1) prod(lambda_i - 1) + 1 for the k roots of Pi."""
    roots = np.atleast_1d(np.asarray(roots, dtype=np.complex128))
    prod = np.prod(roots - 1.0)
    if abs(prod.imag) >= 1e-8:
        raise DomainError("roots are not closed under conjugation")
    k = roots.size
    return float((-1.0) ** (k + 1) * prod.real + 1.0)


@dataclass(frozen=True)
class ArParams:
    phi: np.ndarray

    def __post_init__(self) -> None:
        phi = np.atleast_1d(np.asarray(self.phi, dtype=np.float64))
        if phi.size == 0:
            raise DegenerateError("an autoregression needs at least one coefficient")
        object.__setattr__(self, "phi", phi)

    @property
    def k(self) -> int:
        return self.phi.size

    @property
    def psi_poly(self) -> np.ndarray:
        """Psi(z) = 1 - phi_1 z - ... - phi_k z^k, lowest degree first."""
        return np.concatenate([[1.0], -self.phi])

    @property
    def pi_poly(self) -> np.ndarray:
        """Pi(z) = z^k - phi_1 z^{k-1} - ... - phi_k, highest degree first."""
        return np.concatenate([[1.0], -self.phi])

    @property
    def roots(self) -> np.ndarray:
        return ar_roots(self.phi)

    @property
    def is_stationary(self) -> bool:
        return bool(np.all(np.abs(self.roots) < 1.0))

    @property
    def is_unit_root(self) -> bool:
        roots = self.roots
        near_one = np.abs(roots - 1.0) < UNIT_ROOT_TOL
        return bool(near_one.sum() == 1 and np.all(np.abs(roots[~near_one]) < 1.0))

    def to_rho_xi(self) -> RhoXiParams:
        return phi_to_rho_xi(self.phi)


@dataclass(frozen=True)
class GibbsState:
    """Current values of the Gibbs blocks for an order-k residual model.

    ``rho_xi`` is ignored when ``k == 0``; ``alpha`` is only used with
    ``intercept``.
    """

    rho_xi: RhoXiParams
    beta2: np.ndarray
    sigma2: float
    k: int
    intercept: bool = False
    alpha: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta2", np.atleast_1d(np.asarray(self.beta2, dtype=np.float64)))
        object.__setattr__(self, "alpha", float(self.alpha) if self.intercept else 0.0)
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")
        if self.k < 0 or (self.k >= 1 and self.rho_xi.k != self.k):
            raise DimensionError(f"rho/xi parameters of order {self.rho_xi.k} do not match k={self.k}")

    @property
    def theta(self) -> np.ndarray:
        """[rho, xi...], empty for k = 0."""
        if self.k == 0:
            return np.zeros(0)
        return np.concatenate([[self.rho_xi.rho], self.rho_xi.xi])

    @property
    def coef(self) -> np.ndarray:
        """Regression coefficients in design order: [alpha, beta2...] with an intercept, else beta2."""
        return np.concatenate([[self.alpha], self.beta2]) if self.intercept else self.beta2

    @property
    def rho(self) -> float:
        return self.rho_xi.rho if self.k >= 1 else 0.0


def _theta_to_params(theta: np.ndarray, k: int) -> RhoXiParams:
    if k == 0:
        return RhoXiParams(0.0, np.zeros(0))
    return RhoXiParams(float(theta[0]), theta[1:k])


def _regressors(data: Dataset, intercept: bool) -> np.ndarray:
    """x with a leading column of ones when there is an intercept."""
    return np.column_stack([np.ones(data.T), data.x]) if intercept else data.x


class DesignBlock(str, enum.Enum):
    RHO_XI = "rho-xi"
    BETA2 = "beta2"


@dataclass(frozen=True)
class DesignMatrices:
    """Regression matrices of one Gibbs block; rows of X are regressors, columns are time points.

    ``X_rho_xi`` has rows R_{t-1}, dR_{t-1}, ..., dR_{t-k+1} for t >= cond.
    ``X_beta2`` holds the filtered regressors and ``Y_beta2`` the identically
    filtered regressand. With an intercept, X_beta2 gains a leading row for
    alpha (the filtered constant, 1 - rho) and ``cond`` leading columns of
    unfiltered initial observations. Fields of the block that was not
    requested are ``None``.
    """

    X_rho_xi: np.ndarray | None = None
    Y_rho_xi: np.ndarray | None = None
    X_beta2: np.ndarray | None = None
    Y_beta2: np.ndarray | None = None


def _ecm_filter(z: np.ndarray, k: int, theta: np.ndarray, cond: int) -> np.ndarray:
    """z_t - rho z_{t-1} - sum_i xi_i dz_{t-i} for t >= cond (rows of ``z`` are time)."""
    T = z.shape[0]
    out = z[cond:].copy()
    if k >= 1:
        out -= theta[0] * z[cond - 1:T - 1]
    for i in range(1, k):
        out -= theta[i] * (z[cond - i:T - i] - z[cond - i - 1:T - i - 1])
    return out


def build_design(data: Dataset, state: GibbsState, target: DesignBlock | str,
                 cond: int | None = None) -> DesignMatrices:
    """Assemble the regression of one Gibbs block from the current state."""
    k = state.k
    cond = k if cond is None else int(cond)
    if cond < k:
        raise DomainError(f"conditioning on {cond} observations is too few for order {k}")
    if data.T - cond < max(k, data.n - 1 + int(state.intercept)) + 1:
        raise InsufficientData(f"T={data.T} is too short for order {k} with n={data.n}")
    if state.beta2.shape[0] != data.n - 1:
        raise DimensionError(f"beta2 must have length {data.n - 1}")
    target = DesignBlock(target)
    if target is DesignBlock.RHO_XI:
        r = data.y - data.x @ state.beta2 - state.alpha
        T = data.T
        rows = []
        if k >= 1:
            rows.append(r[cond - 1:T - 1])
        for i in range(1, k):
            rows.append(r[cond - i:T - i] - r[cond - i - 1:T - i - 1])
        X = np.array(rows).reshape(k, T - cond)
        return DesignMatrices(X_rho_xi=X, Y_rho_xi=r[cond:].copy())
    x = _regressors(data, state.intercept)
    theta = state.theta
    Xb = _ecm_filter(x, k, theta, cond).T
    Yb = _ecm_filter(data.y, k, theta, cond)
    if state.intercept:
        Xb = np.concatenate([x[:cond].T, Xb], axis=1)
        Yb = np.concatenate([data.y[:cond], Yb])
    return DesignMatrices(X_beta2=Xb, Y_beta2=Yb)


def sample_rho_xi(data: Dataset, state: GibbsState, rng: np.random.Generator,
                  cond: int | None = None) -> RhoXiParams:
    """Draw (rho, xi) from N((XX')^{-1} XY, sigma2 (XX')^{-1})."""
    if state.k == 0:
        return state.rho_xi
    dm = build_design(data, state, DesignBlock.RHO_XI, cond)
    X, Y = dm.X_rho_xi, dm.Y_rho_xi
    draw, _ = sample_gaussian_conditional(X @ X.T, X @ Y, state.sigma2, rng)
    return _theta_to_params(draw, state.k)


def sample_beta2(data: Dataset, state: GibbsState, rng: np.random.Generator, cond: int | None = None) -> np.ndarray:
    """Draw the regression coefficients from their Gaussian conditional given the autoregression.

    Returns beta2, preceded by alpha when the state has an intercept.
    """
    if data.n == 1 and not state.intercept:
        return np.zeros(0)
    dm = build_design(data, state, DesignBlock.BETA2, cond)
    X, Y = dm.X_beta2, dm.Y_beta2
    draw, _ = sample_gaussian_conditional(X @ X.T, X @ Y, state.sigma2, rng)
    return draw


def with_coef(state: GibbsState, coef: np.ndarray) -> GibbsState:
    """State with regression coefficients replaced by a draw of :func:`sample_beta2`."""
    if state.intercept:
        return replace(state, alpha=float(coef[0]), beta2=coef[1:])
    return replace(state, beta2=coef)


def residual_ssr(data: Dataset, state: GibbsState, cond: int | None = None) -> float:
    """Sum of squared innovations for t >= cond, plus the initial residuals with an intercept."""
    cond = state.k if cond is None else int(cond)
    r = data.y - data.x @ state.beta2 - state.alpha
    e = _ecm_filter(r, state.k, state.theta, cond)
    total = float(e @ e)
    if state.intercept:
        total += float(r[:cond] @ r[:cond])
    return total


def _sigma2_dof(T: int, cond: int, intercept: bool) -> int:
    return T if intercept else T - cond


def sample_sigma2(data: Dataset, state: GibbsState, rng: np.random.Generator, cond: int | None = None) -> float:
    """Draw sigma2 from the scaled inverse chi-squared with tau2 = SSR / nu.

    nu is the number of likelihood terms: T - cond, or T with an intercept.
    """
    cond = state.k if cond is None else int(cond)
    s = residual_ssr(data, state, cond)
    if not s > 0.0:
        raise DegenerateFit("residuals are fitted exactly; sigma2 has no posterior")
    nu = _sigma2_dof(data.T, cond, state.intercept)
    return float(sample_scaled_inv_chi2(ScaledInvChi2(nu, s / nu), rng))


def initial_state(data: Dataset, k: int, intercept: bool, cond: int | None = None) -> GibbsState:
    """Least-squares starting point: (alpha, beta2) from y on x, then the residual autoregression."""
    cond = k if cond is None else cond
    x = _regressors(data, intercept)
    coef = solve_spd(x.T @ x, x.T @ data.y).x if x.shape[1] else np.zeros(0)
    blank = with_coef(GibbsState(RhoXiParams(0.0, np.zeros(max(k - 1, 0))), np.zeros(data.n - 1), 1.0, k,
                                 intercept), coef)
    if k == 0:
        state = blank
    else:
        dm = build_design(data, blank, DesignBlock.RHO_XI, cond)
        X, Y = dm.X_rho_xi, dm.Y_rho_xi
        state = replace(blank, rho_xi=_theta_to_params(solve_spd(X @ X.T, X @ Y).x, k))
    s = residual_ssr(data, state, cond)
    if not s > 0.0:
        raise DegenerateFit("residuals are fitted exactly at the least-squares start")
    return replace(state, sigma2=s / _sigma2_dof(data.T, cond, intercept))


@dataclass(frozen=True)
class McmcConfig:
    """Sampler settings shared by the fixed-order and reversible-jump chains.

    ``lambda_heat`` is the decay of the order proposal, ``uniform_conditioning``
    conditions every likelihood on the first ``k_max`` observations, and
    ``between_model = False`` disables order moves entirely.
    """

    iterations: int = 25_000
    burn_in: int = 5_000
    thin: int = 1
    seed: int | None = None
    lambda_heat: float = 1.0
    uniform_conditioning: bool = False
    between_model: bool = True
    k_init: int = 1

    def __post_init__(self) -> None:
        if self.iterations <= self.burn_in or self.burn_in < 0:
            raise DomainError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise DomainError("thin must be at least 1")
        if not self.lambda_heat > 0:
            raise DomainError("lambda_heat must be positive")

    @property
    def kept(self) -> int:
        return -(-(self.iterations - self.burn_in) // self.thin)


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained chain output, one row per kept sweep.

    ``theta`` has ``max(k_max, 1)`` columns: rho, xi_1 .. xi_{k-1}, zero
    padded. ``rho`` is 0 for k = 0 draws; ``alpha`` is 0 without an intercept.
    ``rho_tail`` holds P(rho >= 1) under the Gaussian conditional that each
    sweep's rho was drawn from (0 for k = 0).
    """

    k: np.ndarray
    theta: np.ndarray
    beta2: np.ndarray
    alpha: np.ndarray
    sigma2: np.ndarray
    rho_tail: np.ndarray
    burn_in: int
    thin: int
    seed: int
    intercept: bool
    k_max: int
    acceptance_stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.k.shape[0]

    @property
    def rho(self) -> np.ndarray:
        return np.where(self.k >= 1, self.theta[:, 0], 0.0)

    def states(self) -> Iterator[GibbsState]:
        for i in range(len(self)):
            k = int(self.k[i])
            yield GibbsState(_theta_to_params(self.theta[i], k), self.beta2[i], float(self.sigma2[i]), k,
                             self.intercept, float(self.alpha[i]))


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    return int(seed)


def _random_inputs(seed: int, T: int, iterations: int, k_max: int, m: int, intercept: bool = False) -> dict:
    """Pre-generated randomness, one independent stream per use.

    ``m`` counts regression coefficients (alpha included). Streams do not
    depend on which moves a chain makes, so a chain without order moves
    consumes exactly the fixed-order chain's numbers.
    """
    ss = np.random.SeedSequence(seed)
    prop, acc, between, theta, beta, chisq = ss.spawn(6)
    gens = {name: np.random.default_rng(s) for name, s in
            (("prop", prop), ("acc", acc), ("between", between), ("theta", theta), ("beta", beta))}
    chi_streams = chisq.spawn(k_max + 1)
    width = max(k_max, 1)
    return {
        "u_prop": gens["prop"].random(iterations),
        "u_acc": gens["acc"].random(iterations),
        "z_between": gens["between"].standard_normal((iterations, width)),
        "z_theta": gens["theta"].standard_normal((iterations, width)),
        "z_beta": gens["beta"].standard_normal((iterations, m)),
        "chisq": np.stack([np.random.default_rng(s).chisquare(_sigma2_dof(T, c, intercept), iterations)
                           for c, s in enumerate(chi_streams)]),
    }


def run_sampler(data: Dataset, *, intercept: bool, k_max: int, config: McmcConfig, k_init: int,
                between: bool, prop_cdf: np.ndarray | None = None, log_q: np.ndarray | None = None,
                frozen: bool = False, start: GibbsState | None = None) -> PosteriorDraws:
    """Run the compiled chain and package its output (shared by :mod:`bayescoint.order`)."""
    seed = _resolve_seed(config.seed)
    x = _regressors(data, intercept)
    m = x.shape[1]
    uniform = config.uniform_conditioning
    if data.T - k_max < max(k_max, m, 1) + 1:
        raise InsufficientData(f"T={data.T} is too short for orders up to {k_max} with n={data.n}")
    if start is None:
        start = initial_state(data, k_init, intercept, k_max if uniform else k_init)
    width = max(k_max, 1)
    theta0 = np.zeros(width)
    theta0[:start.k] = start.theta
    if prop_cdf is None:
        prop_cdf = np.ones((k_max + 1, k_max + 1))
        log_q = np.zeros((k_max + 1, k_max + 1))
    rand = _random_inputs(seed, data.T, config.iterations, k_max, m, intercept)
    kept = config.kept
    out_k = np.zeros(kept, dtype=np.int64)
    out_theta = np.zeros((kept, width))
    out_beta = np.zeros((kept, m))
    out_sigma2 = np.zeros(kept)
    out_tail = np.zeros(kept)
    counts = np.zeros(k_max + 1, dtype=np.int64)
    stats = np.zeros(4, dtype=np.int64)
    status, where = _kernels.run_chain(
        np.ascontiguousarray(data.y), np.ascontiguousarray(x), bool(intercept), int(start.k), int(k_max),
        bool(between), bool(uniform), bool(frozen), prop_cdf, log_q, theta0, start.coef.copy(),
        float(start.sigma2), rand["u_prop"], rand["u_acc"], rand["z_between"], rand["z_theta"], rand["z_beta"],
        rand["chisq"], int(config.burn_in), int(config.thin), out_k, out_theta, out_beta, out_sigma2, out_tail,
        counts, stats)
    if status == 1:
        raise ChainFailed(f"{_kernels.MAX_CONSECUTIVE_FAILURES} consecutive singular systems at sweep {where}")
    if status == 2:
        raise DegenerateFit(f"zero residual sum of squares at sweep {where}")
    acceptance = {
        "between_attempts": int(stats[0]),
        "between_accepts": int(stats[1]),
        "theta_failures": int(stats[2]),
        "beta_failures": int(stats[3]),
        "occupancy": counts,
    }
    alpha = out_beta[:, 0].copy() if intercept else np.zeros(kept)
    beta2 = out_beta[:, 1:].copy() if intercept else out_beta
    return PosteriorDraws(out_k, out_theta, beta2, alpha, out_sigma2, out_tail, config.burn_in, config.thin, seed,
                          bool(intercept), int(k_max), acceptance)


def gibbs_run(data: Dataset, k: int, iterations: int = 25_000, burn_in: int = 5_000, thin: int = 1,
              seed: int | None = None, intercept: bool = False) -> PosteriorDraws:
    """Fixed-order Gibbs sampler cycling (rho, xi) -> (alpha, beta2) -> sigma2.

    Starts from least squares; conditions on the first ``k`` observations.
    Deterministic for a given ``seed``.
    """
    if k < 1:
        raise DomainError("the fixed-order sampler needs k >= 1")
    config = McmcConfig(iterations, burn_in, thin, seed, between_model=False)
    return run_sampler(data, intercept=intercept, k_max=k, config=config, k_init=k, between=False)


def tail_mass(draws: PosteriorDraws) -> float:
    """Rao-Blackwellised estimate of p(rho >= 1 | data).

    Averages the conditional tail probability of each sweep's rho draw
    rather than counting draws beyond 1. Both estimate the same posterior
    mass; this one does not collapse to exactly 0 when the mass is below
    one over the number of draws, so small masses stay comparable.
    """
    return float(np.mean(draws.rho_tail))


def tail_frequency(draws: PosteriorDraws) -> float:
    """Fraction of retained draws with rho >= 1."""
    return float(np.mean(draws.rho >= 1.0))


def effective_sample_size(x: np.ndarray) -> float:
    """Effective sample size with Geyer's initial positive sequence truncation."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 4 or np.ptp(x) == 0:
        return float(n)
    c = x - x.mean()
    f = np.fft.rfft(c, 2 * n)
    acov = np.fft.irfft(f * np.conj(f), 2 * n)[:n]
    rho = acov / acov[0]
    tau = -1.0
    for lag in range(0, n - 1, 2):
        pair = rho[lag] + rho[lag + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1e-12))


def draw_diagnostics(draws: PosteriorDraws) -> dict:
    rho = draws.rho
    out = {
        "draws": float(len(draws)),
        "rho_mean": float(rho.mean()),
        "rho_sd": float(rho.std()),
        "sigma2_mean": float(draws.sigma2.mean()),
        "ess_rho": effective_sample_size(rho),
        "tail_frequency": tail_frequency(draws),
    }
    for j in range(draws.beta2.shape[1]):
        out[f"beta2_{j}_mean"] = float(draws.beta2[:, j].mean())
    if draws.intercept:
        out["alpha_mean"] = float(draws.alpha.mean())
    return out


def gibbs_test(data: Dataset, spec: RegressionSpec, config: McmcConfig | None = None) -> TestResult:
    """Credible test on rho from a fixed-order chain: cointegrated iff p(rho >= 1) <= alpha.

    The statistic is the Rao-Blackwellised :func:`tail_mass`; the plain draw
    frequency is reported as the ``tail_frequency`` diagnostic.
    """
    if spec.method is not Method.GIBBS:
        raise DomainError(f"gibbs_test does not handle method {spec.method.value}")
    config = config or McmcConfig()
    draws = gibbs_run(data, spec.order, config.iterations, config.burn_in, config.thin, config.seed, spec.intercept)
    return TestResult.from_statistic(tail_mass(draws), spec.alpha_level, spec.method,
                                     diagnostics=draw_diagnostics(draws), draws=draws)
