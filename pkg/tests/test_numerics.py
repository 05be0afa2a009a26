import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayescoint.errors import DomainError, LimitDiverged, NumericalError, SingularCovariance
from bayescoint.numerics import (
    QuadratureGrid,
    ScaledInvChi2,
    adaptive_log_integral,
    composite_gauss_legendre,
    graded_breakpoints,
    integrate,
    log_integrate,
    polynomial_roots,
    richardson_limit,
    sample_gaussian_conditional,
    sample_mvn,
    sample_scaled_inv_chi2,
    solve_spd,
)


@pytest.fixture(scope="module")
def grid():
    return composite_gauss_legendre(graded_breakpoints(-1.0, 1.0))


class TestQuadrature:
    def test_grid_invariants(self, grid):
        assert abs(grid.weights.sum() - 2.0) < 1e-12
        assert np.all((grid.nodes > -1) & (grid.nodes < 1))

    def test_rejects_nodes_outside(self):
        with pytest.raises(DomainError):
            QuadratureGrid(np.array([0.0, 1.0]), np.array([0.5, 0.5]), 0.0, 1.0)

    @pytest.mark.parametrize("f, expected, tol", [
        (lambda p: np.ones_like(p), 2.0, 1e-12),
        (lambda p: p, 0.0, 1e-12),
        (lambda p: p ** 2, 2.0 / 3.0, 1e-10),
    ])
    def test_closed_forms(self, grid, f, expected, tol):
        assert abs(integrate(f, grid) - expected) < tol

    @pytest.mark.parametrize("degree", range(0, 31, 3))
    def test_polynomial_exactness(self, degree):
        g = composite_gauss_legendre([0.0, 0.3, 1.0], order=16)
        assert integrate(lambda p: p ** degree, g) == pytest.approx(1.0 / (degree + 1), abs=1e-12)

    def test_scalar_only_callable(self, grid):
        assert integrate(lambda p: float(np.cos(p)), grid) == pytest.approx(2 * np.sin(1.0), abs=1e-12)

    def test_non_finite_reports_node(self, grid):
        with pytest.raises(NumericalError) as err:
            integrate(lambda p: np.where(p > 0.5, np.nan, 1.0), grid)
        assert err.value.node > 0.5

    def test_log_integrate_matches_plain(self, grid):
        plain = integrate(lambda p: np.exp(3 * p), grid)
        assert log_integrate(lambda p: 3 * p, grid) == pytest.approx(np.log(plain), abs=1e-12)

    def test_endpoint_square_root(self):
        # sqrt(1 - p^2) on (-1, 1) integrates to pi / 2
        val, _ = adaptive_log_integral(lambda p: 0.5 * np.log1p(-p * p), -1.0, 1.0)
        assert np.exp(val) == pytest.approx(np.pi / 2, rel=1e-9)

    def test_sharp_peak_near_endpoint(self):
        s = 1e-4
        logf = lambda p: -0.5 * ((p - 0.999) / s) ** 2
        val, record = adaptive_log_integral(logf, -1.0, 1.0, extra_breakpoints=[0.999])
        assert np.exp(val) == pytest.approx(s * np.sqrt(2 * np.pi), rel=1e-8)
        assert record[-1]["level"] >= 1


class TestRoots:
    def test_unit_root(self):
        np.testing.assert_allclose(polynomial_roots([1.0, -1.0]), [1.0])

    def test_hand_factored_quadratic(self):
        roots = np.sort_complex(polynomial_roots([1.0, -0.5, -0.5]))
        np.testing.assert_allclose(roots, [-0.5, 1.0], atol=1e-14)

    @given(st.lists(st.floats(-2, 2), min_size=1, max_size=6))
    @settings(max_examples=200)
    def test_re_expansion(self, coeffs):
        c = np.array([1.0] + coeffs)
        expanded = np.real(np.poly(polynomial_roots(c)))
        np.testing.assert_allclose(expanded, c, atol=1e-8)

    def test_degree_zero(self):
        with pytest.raises(NumericalError):
            polynomial_roots([1.0])


class TestLinearAlgebra:
    def test_identity(self):
        b = np.array([3.0, -1.0, 2.0])
        np.testing.assert_array_equal(solve_spd(np.eye(3), b).x, b)

    def test_diagonal(self):
        sol = solve_spd(np.diag([2.0, 4.0]), [2.0, 4.0])
        np.testing.assert_allclose(sol.x, [1.0, 1.0])
        assert sol.logdet == pytest.approx(np.log(8.0))

    @pytest.mark.parametrize("seed", range(5))
    def test_random_spd_residual(self, seed):
        rng = np.random.default_rng(seed)
        M = rng.normal(size=(6, 6))
        A = M.T @ M + np.eye(6)
        b = rng.normal(size=6)
        sol = solve_spd(A, b)
        assert np.linalg.norm(A @ sol.x - b) <= 1e-8 * np.linalg.norm(b)
        assert sol.logdet == pytest.approx(np.linalg.slogdet(A)[1], rel=1e-12)

    def test_not_spd(self):
        with pytest.raises(SingularCovariance):
            solve_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), [1.0, 1.0])


class TestSampling:
    def test_mvn_mean(self):
        rng = np.random.default_rng(11)
        draws = np.array([sample_mvn(np.zeros(2), np.eye(2), rng) for _ in range(100_000)])
        assert np.all(np.abs(draws.mean(axis=0)) < 4 / np.sqrt(1e5))

    def test_mvn_covariance(self):
        rng = np.random.default_rng(12)
        cov = np.array([[2.0, 1.0], [1.0, 2.0]])
        draws = np.array([sample_mvn([0.0, 0.0], cov, rng) for _ in range(100_000)])
        np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.05)

    def test_mvn_deterministic(self):
        a = sample_mvn([1.0, 2.0], np.eye(2), np.random.default_rng(5))
        b = sample_mvn([1.0, 2.0], np.eye(2), np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_scaled_inv_chi2_mean(self):
        p = ScaledInvChi2(10.0, 1.0)
        draws = sample_scaled_inv_chi2(p, np.random.default_rng(3), size=100_000)
        se = draws.std() / np.sqrt(draws.size)
        assert abs(draws.mean() - p.mean) < 3 * se
        assert p.mean == pytest.approx(1.25)

    def test_scaled_inv_chi2_deterministic(self):
        p = ScaledInvChi2(4.0, 2.0)
        assert sample_scaled_inv_chi2(p, np.random.default_rng(9)) == sample_scaled_inv_chi2(p, np.random.default_rng(9))

    def test_scaled_inv_chi2_domain(self):
        with pytest.raises(DomainError):
            ScaledInvChi2(0.0, 1.0)

    def test_gaussian_conditional_moments(self):
        rng = np.random.default_rng(21)
        A = np.array([[4.0, 1.0], [1.0, 3.0]])
        b = np.array([1.0, 2.0])
        draws = np.array([sample_gaussian_conditional(A, b, 0.5, rng)[0] for _ in range(50_000)])
        np.testing.assert_allclose(draws.mean(axis=0), np.linalg.solve(A, b), atol=0.01)
        np.testing.assert_allclose(np.cov(draws.T), 0.5 * np.linalg.inv(A), atol=0.01)

    def test_gaussian_conditional_vanishing_variance(self):
        rng = np.random.default_rng(2)
        A = np.eye(3) * 2.0
        draws = [sample_gaussian_conditional(A, np.ones(3), 1e-12, rng) for _ in range(100)]
        assert max(np.abs(d - m).max() for d, m in draws) < 1e-4


class TestRichardson:
    def test_equal_lowest_orders(self):
        assert richardson_limit(lambda e: (e ** 2 + e ** 3) / e ** 2).value == pytest.approx(1.0, abs=1e-12)

    def test_higher_order_numerator(self):
        assert richardson_limit(lambda e: e ** 3 / e ** 2).value == pytest.approx(0.0, abs=1e-12)

    def test_sinc(self):
        assert richardson_limit(lambda e: np.sin(e) / e, levels=6).value == pytest.approx(1.0, abs=1e-10)

    def test_log_singularity_diverges(self):
        with pytest.raises(LimitDiverged):
            richardson_limit(lambda e: np.log(e))

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            richardson_limit(lambda e: np.nan)
