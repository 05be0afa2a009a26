"""Compiled inner loops for the Gibbs and reversible-jump samplers.

All randomness is generated beforehand by numpy and passed in, so a chain
is a deterministic function of its inputs. The autoregression parameters of
order k are stored as ``theta = [rho, xi_1 .. xi_{k-1}]`` (zero padded). An
intercept arrives as a column of ones in ``x``; with ``init_prior`` the
first ``cond`` residuals carry independent N(0, sigma2) terms, which is what
keeps the intercept identified at rho = 1.

Status codes returned by :func:`run_chain`: 0 success, 1 repeated
Cholesky failures, 2 zero residual sum of squares.
"""

import math

import numpy as np
from numba import njit

LOG_2PI = np.log(2.0 * np.pi)
MAX_CONSECUTIVE_FAILURES = 3
PIVOT_TOL = 1e-12  # same relative pivot floor as numerics.solve_spd


@njit(cache=True)
def cholesky(A, L):
    """Lower Cholesky factor of A written into L; False if A is numerically singular."""
    d = A.shape[0]
    for i in range(d):
        for j in range(i + 1):
            s = A[i, j]
            for p in range(j):
                s -= L[i, p] * L[j, p]
            if i == j:
                if not s > PIVOT_TOL * A[i, i]:
                    return False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
        for j in range(i + 1, d):
            L[i, j] = 0.0
    return True


@njit(cache=True)
def forward(L, b, out):
    d = b.shape[0]
    for i in range(d):
        s = b[i]
        for p in range(i):
            s -= L[i, p] * out[p]
        out[i] = s / L[i, i]


@njit(cache=True)
def backward_t(L, b, out):
    """Solve L' out = b."""
    d = b.shape[0]
    for i in range(d - 1, -1, -1):
        s = b[i]
        for p in range(i + 1, d):
            s -= L[p, i] * out[p]
        out[i] = s / L[i, i]


@njit(cache=True)
def residuals(y, x, beta):
    T = y.shape[0]
    r = y.copy()
    for j in range(x.shape[1]):
        for t in range(T):
            r[t] -= x[t, j] * beta[j]
    return r


@njit(cache=True)
def features(r, t, k, f):
    """Regressors of r[t] in the error-correction form: R_{t-1}, dR_{t-1} .. dR_{t-k+1}."""
    if k >= 1:
        f[0] = r[t - 1]
    for i in range(1, k):
        f[i] = r[t - i] - r[t - i - 1]


@njit(cache=True)
def theta_normal_equations(r, k, cond):
    A = np.zeros((k, k))
    b = np.zeros(k)
    f = np.zeros(k)
    yy = 0.0
    for t in range(cond, r.shape[0]):
        features(r, t, k, f)
        for i in range(k):
            b[i] += f[i] * r[t]
            for j in range(i + 1):
                A[i, j] += f[i] * f[j]
        yy += r[t] * r[t]
    for i in range(k):
        for j in range(i):
            A[j, i] = A[i, j]
    return A, b, yy


@njit(cache=True)
def order_logmass(r, k, cond, sigma2):
    """log of the order-k likelihood over t >= cond with the autoregression integrated out.

    Flat prior on (rho, xi). Returns nan if the normal equations are singular.
    """
    A, b, yy = theta_normal_equations(r, k, cond)
    m = r.shape[0] - cond
    log_s = LOG_2PI + np.log(sigma2)
    out = -0.5 * m * log_s
    if k == 0:
        return out - 0.5 * yy / sigma2
    L = np.empty((k, k))
    if not cholesky(A, L):
        return np.nan
    w = np.empty(k)
    forward(L, b, w)
    quad = 0.0
    logdet = 0.0
    for i in range(k):
        quad += w[i] * w[i]
        logdet += 2.0 * np.log(L[i, i])
    return out + 0.5 * k * log_s - 0.5 * logdet - 0.5 * (yy - quad) / sigma2


@njit(cache=True)
def gaussian_draw(A, b, sigma2, z, out):
    """out = A^{-1} b + sqrt(sigma2) L^{-T} z with A = L L'; False if A is numerically singular."""
    d = b.shape[0]
    L = np.empty((d, d))
    if not cholesky(A, L):
        return False
    w = np.empty(d)
    mean = np.empty(d)
    forward(L, b, w)
    backward_t(L, w, mean)
    noise = np.empty(d)
    backward_t(L, z[:d], noise)
    s = np.sqrt(sigma2)
    for i in range(d):
        out[i] = mean[i] + s * noise[i]
    return True


@njit(cache=True)
def first_coordinate_tail(A, b, sigma2):
    """P(theta_0 >= 1) under N(A^{-1} b, sigma2 A^{-1}); -1 if A is numerically singular."""
    d = b.shape[0]
    L = np.empty((d, d))
    if not cholesky(A, L):
        return -1.0
    w = np.empty(d)
    mean = np.empty(d)
    forward(L, b, w)
    backward_t(L, w, mean)
    # (A^{-1})_{00} = |L^{-1} e_0|^2
    e0 = np.zeros(d)
    e0[0] = 1.0
    forward(L, e0, w)
    sd = np.sqrt(sigma2 * (w @ w))
    return 0.5 * math.erfc((1.0 - mean[0]) / (sd * np.sqrt(2.0)))


@njit(cache=True)
def filtered(z, t, k, theta):
    """z_t - rho z_{t-1} - sum_i xi_i dz_{t-i}."""
    out = z[t]
    if k >= 1:
        out -= theta[0] * z[t - 1]
    for i in range(1, k):
        out -= theta[i] * (z[t - i] - z[t - i - 1])
    return out


@njit(cache=True)
def beta_normal_equations(y, x, k, cond, theta, init_prior):
    """Filtered regression of y on x over t >= cond, plus unfiltered rows t < cond under ``init_prior``."""
    m = x.shape[1]
    A = np.zeros((m, m))
    b = np.zeros(m)
    xf = np.empty(m)
    start = 0 if init_prior else cond
    for t in range(start, y.shape[0]):
        if t < cond:
            for j in range(m):
                xf[j] = x[t, j]
            yf = y[t]
        else:
            for j in range(m):
                xf[j] = filtered(x[:, j], t, k, theta)
            yf = filtered(y, t, k, theta)
        for i in range(m):
            b[i] += xf[i] * yf
            for j in range(i + 1):
                A[i, j] += xf[i] * xf[j]
    for i in range(m):
        for j in range(i):
            A[j, i] = A[i, j]
    return A, b


@njit(cache=True)
def ssr(r, k, cond, theta, init_prior):
    total = 0.0
    if init_prior:
        for t in range(cond):
            total += r[t] * r[t]
    for t in range(cond, r.shape[0]):
        e = filtered(r, t, k, theta)
        total += e * e
    return total


@njit(cache=True)
def run_chain(y, x, init_prior, k0, k_max, between, uniform_cond, frozen, prop_cdf, log_q,
              theta0, beta0, sigma20, u_prop, u_acc, z_between, z_theta, z_beta, chisq,
              burn_in, thin, out_k, out_theta, out_beta, out_sigma2, out_tail, counts, stats):
    """Run one chain; returns (status, iteration reached).

    Each sweep is an optional between-order move followed by a within-order
    Gibbs cycle theta -> beta -> sigma2. ``frozen`` keeps beta and sigma2
    at their initial values and skips the within-order cycle. ``chisq[c]``
    holds the chi-squared variates for conditioning set c. ``stats`` holds
    between-move attempts, between-move acceptances and the numbers of
    failed theta and beta draws. ``out_tail`` records P(rho >= 1) under the
    Gaussian conditional each theta draw came from (0 for k = 0).
    """
    n_iter = u_prop.shape[0]
    m = x.shape[1]
    width = out_theta.shape[1]
    k = k0
    theta = np.zeros(width)
    for i in range(width):
        theta[i] = theta0[i]
    beta = beta0.copy()
    sigma2 = sigma20
    work = np.zeros(width)
    new_beta = np.zeros(m)
    failures = 0
    keep = 0
    tail = 0.0
    for it in range(n_iter):
        r = residuals(y, x, beta)
        if between:
            # propose k' != k from the discretised Laplacian
            kp = 0
            while kp < k_max and u_prop[it] >= prop_cdf[k, kp]:
                kp += 1
            cond = k_max if uniform_cond else max(k, kp)
            stats[0] += 1
            log_a = log_q[kp, k] - log_q[k, kp] + order_logmass(r, kp, cond, sigma2) - order_logmass(r, k, cond, sigma2)
            if np.isnan(log_a):
                failures += 1
            elif np.log(u_acc[it]) < log_a:
                ok = True
                if kp > 0:
                    A, b, _ = theta_normal_equations(r, kp, cond)
                    ok = gaussian_draw(A, b, sigma2, z_between[it], work)
                if ok:
                    failures = 0
                    stats[1] += 1
                    k = kp
                    for i in range(width):
                        theta[i] = work[i] if i < k else 0.0
                else:
                    failures += 1
        if not frozen:
            cond = k_max if uniform_cond else k
            tail = 0.0
            if k > 0:
                A, b, _ = theta_normal_equations(r, k, cond)
                tail = max(first_coordinate_tail(A, b, sigma2), 0.0)
                if gaussian_draw(A, b, sigma2, z_theta[it], work):
                    failures = 0
                    for i in range(k):
                        theta[i] = work[i]
                else:
                    failures += 1
                    stats[2] += 1
            if m > 0:
                A, b = beta_normal_equations(y, x, k, cond, theta, init_prior)
                if gaussian_draw(A, b, sigma2, z_beta[it], new_beta):
                    failures = 0
                    for j in range(m):
                        beta[j] = new_beta[j]
                else:
                    failures += 1
                    stats[3] += 1
                r = residuals(y, x, beta)
            s = ssr(r, k, cond, theta, init_prior)
            if not s > 0.0:
                return 2, it
            sigma2 = s / chisq[cond, it]
        if failures >= MAX_CONSECUTIVE_FAILURES:
            return 1, it
        if it >= burn_in and (it - burn_in) % thin == 0:
            counts[k] += 1
            out_k[keep] = k
            for i in range(width):
                out_theta[keep, i] = theta[i]
            for j in range(m):
                out_beta[keep, j] = beta[j]
            out_sigma2[keep] = sigma2
            out_tail[keep] = tail
            keep += 1
    return 0, n_iter
