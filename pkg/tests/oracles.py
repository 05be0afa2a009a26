"""Independent reference computations used by the tests.

None of these reuse the package's closed forms: they evaluate raw
likelihood products term by term and integrate by brute force.
"""

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import logsumexp


def gauss_legendre(lo, hi, n):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def ar1_joint_log_density(y, x, phi, alpha, beta, sigma2, first="stationary"):
    """log of sigma^-2 * p(y_1) * prod_t N(y_t - phi y_{t-1} | ...), broadcast over parameter arrays.

    ``first`` is "stationary" (variance sigma2 / (1 - phi^2)), "unit"
    (variance sigma2) or "none" (condition on the first observation).
    """
    out = -np.log(sigma2)
    if first != "none":
        v1 = sigma2 / (1.0 - phi * phi) if first == "stationary" else sigma2
        e1 = y[0] - beta * x[0] - alpha
        out = out - 0.5 * np.log(2 * np.pi * v1) - 0.5 * e1 * e1 / v1
    for t in range(1, len(y)):
        e = (y[t] - phi * y[t - 1]) - beta * (x[t] - phi * x[t - 1]) - (1.0 - phi) * alpha
        out = out - 0.5 * np.log(2 * np.pi * sigma2) - 0.5 * e * e / sigma2
    return out


def ar1_brute_force_log_marginal(y, x, phi, *, intercept=True, first="stationary", sigma2_range=None,
                                 n_sigma=80, n_z=20, z_max=7.5):
    """3-d (2-d without intercept) quadrature of the joint at a single phi.

    (alpha, beta) are integrated on a box centred at the weighted least-squares
    point and scaled by sigma times the inverse Cholesky factor of the design
    Gram matrix (an exact affine change of variables); sigma2 on a log scale.
    Without ``sigma2_range`` the sigma2 range spans exp(-15)..exp(30) around
    the least-squares residual sum of squares.
    """
    rows, rhs = [], []
    if first != "none":
        w1 = np.sqrt(1.0 - phi * phi) if first == "stationary" else 1.0
        rows.append([w1, w1 * x[0]])
        rhs.append(w1 * y[0])
    for t in range(1, len(y)):
        rows.append([1.0 - phi, x[t] - phi * x[t - 1]])
        rhs.append(y[t] - phi * y[t - 1])
    D, r = np.array(rows), np.array(rhs)
    if not intercept:
        D = D[:, 1:]
    d = D.shape[1]
    centre = np.linalg.lstsq(D, r, rcond=None)[0]
    C = np.linalg.inv(np.linalg.cholesky(D.T @ D)).T
    log_det_c = np.log(abs(np.linalg.det(C)))
    if sigma2_range is None:
        ssr = float(np.sum((D @ centre - r) ** 2))
        sigma2_range = (ssr * np.exp(-15.0), ssr * np.exp(30.0))

    u, wu = gauss_legendre(np.log(sigma2_range[0]), np.log(sigma2_range[1]), n_sigma)
    z, wz = gauss_legendre(-z_max, z_max, n_z)
    Z = np.stack(np.meshgrid(*([z] * d), indexing="ij"))
    logw_z = sum(np.log(w) for w in np.meshgrid(*([wz] * d), indexing="ij"))
    s2 = np.exp(u).reshape((-1,) + (1,) * d)
    coef = centre.reshape((d,) + (1,) * (d + 1)) + np.sqrt(s2)[None] * np.einsum("ij,j...->i...", C, Z)[:, None]
    alpha = coef[0] if intercept else 0.0
    beta = coef[-1]
    ld = ar1_joint_log_density(y, x, phi, alpha, beta, s2, first)
    # jacobians: d(coefficients) = s2^(d/2) |C| dz, dsigma2 = s2 du
    logw = np.log(wu).reshape(s2.shape) + logw_z[None] + (1.0 + 0.5 * d) * np.log(s2) + log_det_c
    return float(logsumexp(ld + logw))


def normalise_on_grid(grid, log_values):
    dens = np.exp(np.asarray(log_values) - np.max(log_values))
    return dens / trapezoid(dens, grid)

