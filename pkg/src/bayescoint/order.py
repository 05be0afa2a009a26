"""Reversible-jump sampling over the order of the residual autoregression.

Between-order moves hold (alpha, beta2) and sigma2 fixed. With a flat prior on the
autoregression parameters their integral is Gaussian, so the conditional
order mass p(k | y, beta2, sigma2) is available in closed form and the
acceptance ratio of a jump k -> k' needs no auxiliary variables. On
acceptance the new parameters are drawn from their exact Gaussian
conditional, so they are independent of the previous ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arp import (
    DesignBlock,
    GibbsState,
    McmcConfig,
    PosteriorDraws,
    RhoXiParams,
    build_design,
    draw_diagnostics,
    tail_mass,
    run_sampler,
)
from .core import Dataset, Method, RegressionSpec, TestResult
from .errors import DegenerateError, DomainError
from .numerics import solve_spd

__all__ = [
    "OrderAcceptanceTerms",
    "OrderPosterior",
    "OrderProposal",
    "acceptance_ratio",
    "acceptance_terms",
    "frozen_order_chain",
    "order_conditional_logmass",
    "order_masses",
    "pooled_tail_mass",
    "propose_order",
    "rjmcmc_run",
    "rjmcmc_test",
]

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class OrderProposal:
    """Discretised Laplacian q(k' | k) proportional to exp(-lambda |k' - k|), k' != k."""

    lambda_heat: float = 1.0
    k_max: int = 5
    allow_self: bool = False

    def __post_init__(self) -> None:
        if not self.lambda_heat > 0:
            raise DomainError("lambda_heat must be positive")
        if self.k_max < 0:
            raise DomainError("k_max must be non-negative")
        if self.allow_self:
            raise DomainError("self-proposals are not supported")

    def masses(self, k: int) -> np.ndarray:
        if self.k_max == 0:
            raise DegenerateError("no other order to propose when k_max = 0")
        if not 0 <= k <= self.k_max:
            raise DomainError(f"order {k} outside 0..{self.k_max}")
        ks = np.arange(self.k_max + 1)
        w = np.exp(-self.lambda_heat * np.abs(ks - k))
        w[k] = 0.0
        return w / w.sum()

    def matrix(self) -> np.ndarray:
        """Row k holds q(. | k)."""
        return np.array([self.masses(k) for k in range(self.k_max + 1)])


def propose_order(k: int, proposal: OrderProposal, rng: np.random.Generator) -> tuple[int, float, float]:
    """Draw k' and return it with q(k' | k) and q(k | k')."""
    q = proposal.masses(k)
    kp = int(rng.choice(proposal.k_max + 1, p=q))
    return kp, float(q[kp]), float(proposal.masses(kp)[k])


@dataclass(frozen=True)
class OrderAcceptanceTerms:
    """Ingredients of the k -> k' acceptance ratio, all under one conditioning set.

    ``C_*`` are the projections Y'X'(XX')^{-1}XY of the order regressions and
    ``logdet_*`` are log|2 pi sigma2 (XX')^{-1}|.
    """

    C_k: float
    C_kprime: float
    logdet_k: float
    logdet_kprime: float
    q_forward: float
    q_backward: float
    yy: float
    log_ratio: float


def _projection(data: Dataset, k: int, beta2, sigma2: float, cond: int, alpha: float) -> tuple[float, float, float]:
    """(C, log|2 pi sigma2 (XX')^{-1}|, Y'Y) for the order-k regression."""
    state = GibbsState(RhoXiParams(0.0, np.zeros(max(k - 1, 0))), beta2, sigma2, k, True, alpha)
    if k == 0:
        Y = (data.y - data.x @ state.beta2 - alpha)[cond:]
        return 0.0, 0.0, float(Y @ Y)
    dm = build_design(data, state, DesignBlock.RHO_XI, cond)
    X, Y = dm.X_rho_xi, dm.Y_rho_xi
    b = X @ Y
    sol = solve_spd(X @ X.T, b)
    d = X.shape[0]
    return float(b @ sol.x), d * (LOG_2PI + np.log(sigma2)) - sol.logdet, float(Y @ Y)


def order_conditional_logmass(data: Dataset, k: int, beta2, sigma2: float, cond: int, *,
                              alpha: float = 0.0, k_max: int | None = None) -> float:
    """log p(k | y, alpha, beta2, sigma2) up to a constant shared by all k at the same ``cond``.

    The likelihood uses observations t > cond. The autoregression parameters
    are integrated out against a flat prior; ``k_max`` adds the uniform
    order prior log(1 / (k_max + 1)). Terms for the initial observations do
    not depend on k and are left out.
    """
    if cond < k:
        raise DomainError(f"conditioning on {cond} observations is too few for order {k}")
    C, logdet, yy = _projection(data, k, beta2, sigma2, cond, alpha)
    m = data.T - cond
    prior = -np.log(k_max + 1) if k_max is not None else 0.0
    return float(prior - 0.5 * m * (LOG_2PI + np.log(sigma2)) + 0.5 * logdet - 0.5 * (yy - C) / sigma2)


def order_masses(data: Dataset, beta2, sigma2: float, k_max: int, *, alpha: float = 0.0,
                 cond: int | None = None) -> np.ndarray:
    """Normalised p(k | y, alpha, beta2, sigma2) for k = 0..k_max under one conditioning set (default k_max)."""
    cond = k_max if cond is None else cond
    lm = np.array([order_conditional_logmass(data, k, beta2, sigma2, cond, alpha=alpha)
                   for k in range(k_max + 1)])
    w = np.exp(lm - lm.max())
    return w / w.sum()


def acceptance_terms(data: Dataset, k: int, kprime: int, beta2, sigma2: float, proposal: OrderProposal, *,
                     alpha: float = 0.0, uniform_conditioning: bool = False) -> OrderAcceptanceTerms:
    if k == kprime:
        raise DomainError("acceptance ratio needs k != k'")
    cond = proposal.k_max if uniform_conditioning else max(k, kprime)
    C_k, ld_k, yy = _projection(data, k, beta2, sigma2, cond, alpha)
    C_p, ld_p, _ = _projection(data, kprime, beta2, sigma2, cond, alpha)
    q_f = float(proposal.masses(k)[kprime])
    q_b = float(proposal.masses(kprime)[k])
    log_ratio = np.log(q_b) - np.log(q_f) + 0.5 * (ld_p - ld_k) + 0.5 * (C_p - C_k) / sigma2
    return OrderAcceptanceTerms(C_k, C_p, ld_k, ld_p, q_f, q_b, yy, float(log_ratio))


def acceptance_ratio(data: Dataset, k: int, kprime: int, beta2, sigma2: float, proposal: OrderProposal, *,
                     alpha: float = 0.0, uniform_conditioning: bool = False) -> float:
    """A(k -> k') = q(k | k') / q(k' | k) * p(k' | .) / p(k | .), both masses on a shared conditioning set."""
    terms = acceptance_terms(data, k, kprime, beta2, sigma2, proposal, alpha=alpha,
                             uniform_conditioning=uniform_conditioning)
    return float(np.exp(terms.log_ratio))


@dataclass(frozen=True)
class OrderPosterior:
    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size == 0 or np.any(mass < 0):
            raise DomainError("order mass must be a non-negative vector")
        object.__setattr__(self, "mass", mass / mass.sum())

    @classmethod
    def from_counts(cls, counts) -> "OrderPosterior":
        return cls(np.asarray(counts, dtype=np.float64))

    @property
    def mode(self) -> int:
        return int(np.argmax(self.mass))  # first maximum, i.e. the smaller k on ties

    @property
    def mean(self) -> float:
        return float(np.arange(self.mass.size) @ self.mass)

    @property
    def variance(self) -> float:
        ks = np.arange(self.mass.size)
        return float(max(((ks - self.mean) ** 2) @ self.mass, 0.0))


def _proposal_arrays(proposal: OrderProposal) -> tuple[np.ndarray, np.ndarray]:
    Q = proposal.matrix()
    cdf = np.cumsum(Q, axis=1)
    cdf[:, -1] = 1.0
    with np.errstate(divide="ignore"):
        log_q = np.log(Q)
    return cdf, log_q


def rjmcmc_run(data: Dataset, spec: RegressionSpec, config: McmcConfig | None = None) -> tuple[PosteriorDraws,
                                                                                               OrderPosterior]:
    """Alternate one order jump with one within-order Gibbs cycle per sweep.

    Starts at ``config.k_init`` (clipped to k_max) from least squares. With
    ``config.between_model = False`` the order never changes and the chain is
    the fixed-order Gibbs sampler, draw for draw.
    """
    config = config or McmcConfig()
    k_max = spec.k_max
    k_init = min(config.k_init, k_max)
    between = config.between_model and k_max > 0
    cdf = log_q = None
    if between:
        cdf, log_q = _proposal_arrays(OrderProposal(config.lambda_heat, k_max))
    draws = run_sampler(data, intercept=spec.intercept, k_max=k_max, config=config, k_init=k_init,
                        between=between, prop_cdf=cdf, log_q=log_q)
    return draws, OrderPosterior.from_counts(draws.acceptance_stats["occupancy"])


def frozen_order_chain(data: Dataset, beta2, sigma2: float, k_max: int, config: McmcConfig, *,
                       alpha: float | None = None) -> OrderPosterior:
    """Order chain with (alpha, beta2) and sigma2 held at the given values; only order jumps are made."""
    cdf, log_q = _proposal_arrays(OrderProposal(config.lambda_heat, k_max))
    k0 = min(config.k_init, k_max)
    intercept = alpha is not None
    start = GibbsState(RhoXiParams(0.0, np.zeros(max(k0 - 1, 0))), beta2, sigma2, k0, intercept, alpha or 0.0)
    draws = run_sampler(data, intercept=intercept, k_max=k_max, config=config, k_init=k0, between=True,
                        prop_cdf=cdf, log_q=log_q, frozen=True, start=start)
    return OrderPosterior.from_counts(draws.acceptance_stats["occupancy"])


def pooled_tail_mass(draws: PosteriorDraws) -> float:
    """p(rho >= 1 | data) pooled over orders, Rao-Blackwellised as in :func:`bayescoint.arp.tail_mass`.

    Sweeps at k = 0 contribute 0 (rho = 0 there).
    """
    return tail_mass(draws)


def rjmcmc_test(data: Dataset, spec: RegressionSpec, config: McmcConfig | None = None) -> TestResult:
    """Credible test on rho with the residual order marginalised out."""
    if spec.method is not Method.RJMCMC:
        raise DomainError(f"rjmcmc_test does not handle method {spec.method.value}")
    draws, post = rjmcmc_run(data, spec, config)
    stat = pooled_tail_mass(draws)
    diag = draw_diagnostics(draws)
    diag.update({
        "order_mode": float(post.mode),
        "order_variance": post.variance,
        "prob_stationary": 1.0 - stat,
        "between_acceptance": draws.acceptance_stats["between_accepts"] / max(draws.acceptance_stats[
            "between_attempts"], 1),
        "rho_at_k0": 0.0,
    })
    for k, p in enumerate(post.mass):
        diag[f"order_mass_{k}"] = float(p)
    return TestResult.from_statistic(stat, spec.alpha_level, spec.method, diagnostics=diag,
                                     order_posterior=post, draws=draws)
