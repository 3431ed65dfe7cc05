import numpy as np
import pytest

from memstep.operators import (
    ConstantForcing,
    Forcing,
    PolynomialForcing,
    SineForcing,
    ZeroForcing,
    b_inner,
    make_diag_linear,
    make_laplacian_spd_1d,
    make_p_laplacian_1d,
    make_scalar_cubic,
    make_scaled_identity_spd,
)


def _fd_jacobian(apply, v, step=1e-6):
    d = v.size
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        J[:, j] = (apply(v + e) - apply(v - e)) / (2 * step)
    return J


class TestScalarCubic:
    def test_pointwise_values(self):
        A = make_scalar_cubic(1.0, 0.0)
        assert A.apply(np.array([2.0]))[0] == 8.0
        assert A.apply(np.array([0.0]))[0] == 0.0

    def test_rejects_doubly_degenerate(self):
        with pytest.raises(ValueError):
            make_scalar_cubic(0.0, 0.0)

    def test_monotone_on_random_pairs(self):
        A = make_scalar_cubic(2.0, 0.5, dim=4)
        rng = np.random.default_rng(0)
        for _ in range(1000):
            v, w = rng.normal(size=4), rng.normal(size=4)
            assert (A.apply(v) - A.apply(w)) @ (v - w) >= 0.0

    def test_jacobian_matches_finite_differences(self):
        A = make_scalar_cubic(1.0, 0.3, dim=3)
        rng = np.random.default_rng(1)
        for _ in range(20):
            v = rng.normal(size=3)
            np.testing.assert_allclose(
                A.jacobian(v), _fd_jacobian(A.apply, v), rtol=1e-5, atol=1e-7)

    def test_p_coercivity(self):
        A = make_scalar_cubic(1.5, 0.0, dim=2)
        rng = np.random.default_rng(2)
        for _ in range(200):
            v = rng.normal(size=2) * 3
            assert A.apply(v) @ v >= A.mu_A * A.va_norm(v) ** A.p - A.c_A - 1e-10


class TestDiagLinear:
    def test_rejects_nonpositive_coefficient(self):
        with pytest.raises(ValueError):
            make_diag_linear(0.0)

    def test_is_flagged_uniformly_monotone(self):
        A = make_diag_linear(2.0, dim=3)
        assert A.uniformly_monotone
        assert A.p == 2.0
        np.testing.assert_array_equal(A.apply(np.ones(3)), 2.0 * np.ones(3))


class TestPLaplacian:
    def test_rejects_small_exponent_and_grid(self):
        with pytest.raises(ValueError):
            make_p_laplacian_1d(16, 2.0)
        with pytest.raises(ValueError):
            make_p_laplacian_1d(1, 3.0)

    def test_zero_maps_to_zero(self):
        A = make_p_laplacian_1d(8, 3.0)
        np.testing.assert_array_equal(A.apply(np.zeros(8)), np.zeros(8))

    def test_monotone_on_random_pairs(self):
        A = make_p_laplacian_1d(16, 3.0)
        rng = np.random.default_rng(3)
        for _ in range(1000):
            v, w = rng.normal(size=16), rng.normal(size=16)
            pairing = (A.apply(v) - A.apply(w)) @ (v - w)
            assert pairing >= -1e-12 * (1 + np.linalg.norm(v) + np.linalg.norm(w)) ** A.p

    def test_jacobian_symmetric_and_consistent(self):
        A = make_p_laplacian_1d(10, 3.0)
        rng = np.random.default_rng(4)
        for _ in range(10):
            v = rng.normal(size=10)
            J = A.jacobian(v)
            assert np.max(np.abs(J - J.T)) <= 1e-12
            np.testing.assert_allclose(J, _fd_jacobian(A.apply, v), rtol=2e-5, atol=1e-5)

    def test_jacobian_positive_definite_at_flat_state(self):
        A = make_p_laplacian_1d(6, 4.0)
        np.linalg.cholesky(A.jacobian(np.zeros(6)))

    def test_coercivity_with_discrete_gradient_norm(self):
        A = make_p_laplacian_1d(12, 3.0, L=2.0)
        rng = np.random.default_rng(5)
        for _ in range(100):
            v = rng.normal(size=12)
            assert A.apply(v) @ v >= A.mu_A * A.va_norm(v) ** A.p - 1e-10


class TestSpdOperators:
    def test_laplacian_textbook_stencil(self):
        B = make_laplacian_spd_1d(2, L=3.0)
        np.testing.assert_array_equal(B.matrix, [[2.0, -1.0], [-1.0, 2.0]])

    def test_laplacian_closed_form_eigenvalues(self):
        B = make_laplacian_spd_1d(3, L=4.0)
        eig = np.sort(np.linalg.eigvalsh(B.matrix))
        np.testing.assert_allclose(eig, [2 - np.sqrt(2), 2.0, 2 + np.sqrt(2)], rtol=1e-12)
        assert B.mu_B == pytest.approx(eig[0], rel=1e-12)
        assert B.beta_B == pytest.approx(eig[-1], rel=1e-12)

    def test_symmetry_is_exact(self):
        B = make_laplacian_spd_1d(15, L=1.0)
        assert np.array_equal(B.matrix, B.matrix.T)

    def test_rejects_indefinite_matrix(self):
        from memstep.operators import SpdOperatorDescriptor
        with pytest.raises(np.linalg.LinAlgError):
            SpdOperatorDescriptor(name="bad", dim=2,
                                  matrix=np.array([[1.0, 2.0], [2.0, 1.0]]),
                                  mu_B=1.0, beta_B=1.0)

    def test_b_inner_symmetric_positive(self):
        B = make_laplacian_spd_1d(5, L=1.0)
        rng = np.random.default_rng(6)
        v, w = rng.normal(size=5), rng.normal(size=5)
        assert b_inner(B, v, w) == pytest.approx(b_inner(B, w, v), rel=1e-14)
        assert b_inner(B, v, v) > 0.0
        assert b_inner(B, np.zeros(5), np.zeros(5)) == 0.0

    def test_b_inner_identity_reduces_to_dot(self):
        B = make_scaled_identity_spd(1.0, dim=4)
        rng = np.random.default_rng(7)
        v, w = rng.normal(size=4), rng.normal(size=4)
        assert b_inner(B, v, w) == pytest.approx(v @ w, rel=1e-14)

    def test_b_inner_dimension_mismatch(self):
        B = make_scaled_identity_spd(1.0, dim=4)
        with pytest.raises(ValueError):
            b_inner(B, np.zeros(3), np.zeros(4))


class TestForcing:
    def test_zero_and_constant_averages(self):
        assert np.all(ZeroForcing(3).cell_average(0.0, 0.5) == 0.0)
        np.testing.assert_array_equal(
            ConstantForcing(np.array([2.0, -1.0])).cell_average(0.1, 0.7),
            [2.0, -1.0])

    def test_polynomial_average_is_exact(self):
        f = PolynomialForcing([1.0, 2.0, 3.0], np.ones(1))
        # (1/h) int_{0.2}^{0.8} 1 + 2t + 3t^2 dt
        expected = (0.8 + 0.8**2 + 0.8**3 - (0.2 + 0.2**2 + 0.2**3)) / 0.6
        assert f.cell_average(0.2, 0.8)[0] == pytest.approx(expected, rel=1e-14)

    def test_sine_average_matches_quadrature(self):
        f = SineForcing(1.3, 2.7, np.ones(2))
        generic = Forcing.cell_average(f, 0.3, 0.45)
        np.testing.assert_allclose(f.cell_average(0.3, 0.45), generic, rtol=1e-10)
