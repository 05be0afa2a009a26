"""Small numerical kernels shared by the samplers and the exact AR(1) tests.

Everything here is a pure function; random draws take an explicit
``numpy.random.Generator`` owned by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .errors import DegenerateError, DomainError, LimitDiverged, NumericalError, SingularCovariance

__all__ = [
    "LimitEstimate",
    "QuadratureGrid",
    "ScaledInvChi2",
    "SpdSolution",
    "adaptive_log_integral",
    "composite_gauss_legendre",
    "graded_breakpoints",
    "integrate",
    "log_integrate",
    "polynomial_roots",
    "richardson_limit",
    "sample_gaussian_conditional",
    "sample_mvn",
    "sample_scaled_inv_chi2",
    "solve_spd",
]

DEFAULT_GL_ORDER = 16
# relative Cholesky pivot below which a system counts as singular
PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DomainError("nodes and weights must be matching vectors")
        if not (np.all(nodes > self.a) and np.all(nodes < self.b)):
            raise DomainError("quadrature nodes must lie strictly inside (a, b)")
        if abs(weights.sum() - (self.b - self.a)) > 1e-12 * max(1.0, self.b - self.a):
            raise DomainError("quadrature weights must sum to b - a")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True)
class ScaledInvChi2:
    nu: float
    tau2: float

    def __post_init__(self) -> None:
        if not (self.nu > 0 and self.tau2 > 0):
            raise DomainError(f"scaled inverse chi-squared needs nu > 0 and tau2 > 0, got {self.nu}, {self.tau2}")

    @property
    def mean(self) -> float:
        if self.nu <= 2:
            return float("inf")
        return self.nu * self.tau2 / (self.nu - 2)


def composite_gauss_legendre(breakpoints: Sequence[float], order: int = DEFAULT_GL_ORDER) -> QuadratureGrid:
    """Gauss-Legendre rule of the given order on every panel between sorted breakpoints."""
    bp = np.unique(np.asarray(breakpoints, dtype=np.float64))
    if bp.size < 2:
        raise DomainError("need at least two distinct breakpoints")
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = bp[:-1, None], bp[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    # rescale away the last-bit drift so the weights sum to b - a exactly enough
    weights *= (bp[-1] - bp[0]) / weights.sum()
    return QuadratureGrid(nodes, weights, float(bp[0]), float(bp[-1]))


def graded_breakpoints(a: float, b: float, levels: int = 20, interior: int = 8,
                       extra: Sequence[float] = ()) -> np.ndarray:
    """Breakpoints uniform in the interior and geometrically graded toward both ends.

    Panels shrink by halves toward ``a`` and ``b`` so integrands with
    square-root behaviour or sharp peaks at the endpoints are resolved.
    ``extra`` points inside (a, b) are merged in.
    """
    width = b - a
    frac = 0.5 ** np.arange(1, levels + 1)
    left = a + 0.5 * width * frac
    right = b - 0.5 * width * frac
    mid = np.linspace(a, b, interior + 1)
    pts = np.concatenate([[a, b], left, right, mid, [p for p in extra if a < p < b]])
    return np.unique(pts)


def integrate(f: Callable[[np.ndarray], np.ndarray] | Callable[[float], float], grid: QuadratureGrid) -> float:
    """Sum of ``weights * f(nodes)``.

    ``f`` may be vectorised; a scalar-only callable is evaluated node by node.
    """
    values = _evaluate(f, grid.nodes)
    bad = ~np.isfinite(values)
    if bad.any():
        node = float(grid.nodes[np.argmax(bad)])
        raise NumericalError(f"integrand is not finite at node {node!r}", node=node)
    return float(np.dot(grid.weights, values))


def log_integrate(logf: Callable, grid: QuadratureGrid) -> float:
    """log of the integral of exp(logf), evaluated stably."""
    values = _evaluate(logf, grid.nodes)
    bad = np.isnan(values) | (values == np.inf)
    if bad.any():
        node = float(grid.nodes[np.argmax(bad)])
        raise NumericalError(f"log-integrand is not finite at node {node!r}", node=node)
    return float(logsumexp(values, b=grid.weights))


def adaptive_log_integral(logf: Callable, a: float, b: float, *, extra_breakpoints: Sequence[float] = (),
                          order: int = DEFAULT_GL_ORDER, rtol: float = 1e-9,
                          max_refinements: int = 8) -> tuple[float, list[dict]]:
    """log of the integral of exp(logf) over (a, b) with panel bisection.

    Every panel of a graded composite Gauss-Legendre rule is bisected until two
    successive estimates agree to ``rtol`` relative (on the integral, not its
    log). Returns the final log-integral and the refinement record.
    """
    bp = graded_breakpoints(a, b, extra=extra_breakpoints)
    record = []
    prev = None
    for level in range(max_refinements + 1):
        grid = composite_gauss_legendre(bp, order)
        cur = log_integrate(logf, grid)
        record.append({"level": level, "panels": int(bp.size - 1), "log_integral": cur})
        if prev is not None and abs(np.expm1(cur - prev)) < rtol:
            return cur, record
        prev = cur
        bp = np.sort(np.concatenate([bp, 0.5 * (bp[:-1] + bp[1:])]))
    raise NumericalError(f"quadrature did not reach rtol={rtol} after {max_refinements} refinements")


def _evaluate(f: Callable, nodes: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(f(nodes), dtype=np.float64)
        if values.shape == nodes.shape:
            return values
    except (TypeError, ValueError):
        pass
    return np.array([f(float(x)) for x in nodes], dtype=np.float64)


def polynomial_roots(coeffs: Sequence[float]) -> np.ndarray:
    """All roots of the polynomial with coefficients ``coeffs`` (highest degree first).

    For the AR lag polynomial Pi(z) = z^k - phi_1 z^{k-1} - ... - phi_k pass
    ``[1, -phi_1, ..., -phi_k]``. Roots are eigenvalues of the companion matrix.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
    if c.size < 2:
        raise DegenerateError("polynomial of degree 0 has no roots")
    if c[0] == 0.0:
        raise DegenerateError("leading coefficient must be nonzero")
    c = c / c[0]
    k = c.size - 1
    companion = np.zeros((k, k))
    companion[0, :] = -c[1:]
    if k > 1:
        companion[np.arange(1, k), np.arange(k - 1)] = 1.0
    roots = np.linalg.eigvals(companion).astype(np.complex128)
    # real input: snap tiny imaginary parts so conjugate pairs stay exact pairs
    roots.imag[np.abs(roots.imag) < 1e-14 * np.maximum(1.0, np.abs(roots.real))] = 0.0
    return roots


@dataclass(frozen=True)
class SpdSolution:
    x: np.ndarray
    logdet: float
    cholesky: np.ndarray = field(repr=False)


def _cholesky(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    try:
        L = scipy.linalg.cholesky(A, lower=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        eig = np.linalg.eigvalsh(0.5 * (A + A.T)) if A.size else np.array([0.0])
        raise SingularCovariance(f"matrix is not positive definite (smallest eigenvalue {eig.min():.3e})",
                                 pivot=float(eig.min())) from None
    # a pivot this small means a row is a linear combination of the earlier ones up to rounding
    ratio = np.diag(L) ** 2 / np.diag(A)
    if ratio.size and ratio.min() <= PIVOT_TOL:
        raise SingularCovariance(f"matrix is numerically singular (relative pivot {ratio.min():.3e})",
                                 pivot=float(ratio.min()))
    return L


def solve_spd(A, b) -> SpdSolution:
    """Solve ``A x = b`` for symmetric positive definite ``A``; also returns log|A|."""
    L = _cholesky(A)
    x = scipy.linalg.cho_solve((L, True), np.asarray(b, dtype=np.float64))
    return SpdSolution(x, float(2.0 * np.log(np.diag(L)).sum()), L)


def sample_mvn(mean, covariance, rng: np.random.Generator) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    L = _cholesky(np.atleast_2d(covariance))
    return mean + L @ rng.standard_normal(mean.shape[0])


def sample_gaussian_conditional(precision, linear, sigma2: float,
                                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw from N(A^{-1} b, sigma2 A^{-1}) given A (``precision``) and b (``linear``).

    Uses one Cholesky factor A = L L' and returns ``(draw, mean)``; the draw is
    ``mean + sqrt(sigma2) * L^{-T} z`` with z standard normal.
    """
    sol = solve_spd(precision, linear)
    z = rng.standard_normal(sol.x.shape[0])
    noise = scipy.linalg.solve_triangular(sol.cholesky, z, lower=True, trans="T")
    return sol.x + np.sqrt(sigma2) * noise, sol.x


def sample_scaled_inv_chi2(params: ScaledInvChi2, rng: np.random.Generator, size=None):
    """nu * tau2 / chi2_nu draws."""
    return params.nu * params.tau2 / rng.chisquare(params.nu, size=size)


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    error: float
    tableau: np.ndarray = field(repr=False)


def richardson_limit(f: Callable[[float], float], eps0: float = 1e-2, levels: int = 8, *,
                     rtol: float = 1e-6, atol: float = 1e-9) -> LimitEstimate:
    """Limit of ``f(eps)`` as eps -> 0+ by Richardson extrapolation.

    ``f`` is evaluated on eps_j = eps0 * 2^-j, j = 0..levels, and the
    tableau eliminates the error terms eps, eps^2, ... in turn. The entry with
    the smallest local disagreement (against its column and row predecessors)
    is returned together with that disagreement as an error estimate.

    Raises
    ------
    NumericalError
        If ``f`` is not finite on the ladder.
    LimitDiverged
        If no tableau entry settles to within ``max(atol, rtol * |value|)``.
    """
    if levels < 2:
        raise DomainError("need at least two extrapolation levels")
    eps = eps0 * 0.5 ** np.arange(levels + 1)
    base = np.array([f(float(e)) for e in eps], dtype=np.float64)
    if not np.all(np.isfinite(base)):
        j = int(np.argmax(~np.isfinite(base)))
        raise NumericalError(f"limit integrand is not finite at eps={eps[j]!r}", node=float(eps[j]))
    n = levels + 1
    R = np.full((n, n), np.nan)
    R[:, 0] = base
    for m in range(1, n):
        factor = 2.0 ** m - 1.0
        R[m:, m] = R[m:, m - 1] + (R[m:, m - 1] - R[m - 1:-1, m - 1]) / factor

    best_val, best_err = base[-1], abs(base[-1] - base[-2])
    for m in range(1, n):
        for j in range(m + 1, n):
            err = max(abs(R[j, m] - R[j - 1, m]), abs(R[j, m] - R[j, m - 1]))
            if err < best_err:
                best_val, best_err = R[j, m], err
    tol = max(atol, rtol * abs(best_val))
    if not np.isfinite(best_val) or best_err > tol:
        raise LimitDiverged(f"extrapolation did not settle (error estimate {best_err:.3e} > {tol:.3e})")
    return LimitEstimate(float(best_val), float(best_err), R)
