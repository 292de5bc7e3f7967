import numpy as np
import pytest

from lrsetd.kernels import (
    soft_shrink,
    spd_factorize,
    spd_solve,
    spectral_norm,
    svd_reduced,
    svd_shrink,
    toeplitz_diff,
)


def nuclear_norm(m):
    return np.linalg.svd(m, compute_uv=False).sum()


class TestSvdReduced:
    def test_diagonal(self):
        f = svd_reduced(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(f.singular_values, [3.0, 1.0])

    def test_zero_matrix(self):
        f = svd_reduced(np.zeros((3, 2)))
        rebuilt = (f.u * f.singular_values) @ f.v.T
        assert not rebuilt.any()

    def test_reconstruction_and_orthonormality(self, rng):
        m = rng.standard_normal((5, 3))
        f = svd_reduced(m)
        rebuilt = (f.u * f.singular_values) @ f.v.T
        assert np.linalg.norm(rebuilt - m) <= 1e-9 * np.linalg.norm(m)
        np.testing.assert_allclose(f.u.T @ f.u, np.eye(3), atol=1e-9)
        np.testing.assert_allclose(f.v.T @ f.v, np.eye(3), atol=1e-9)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            svd_reduced(np.array([[1.0, np.nan]]))


class TestSvdShrink:
    def test_diagonal_case(self):
        np.testing.assert_allclose(
            svd_shrink(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]), atol=1e-12
        )

    def test_tau_zero_is_identity(self, rng):
        m = rng.standard_normal((4, 3))
        np.testing.assert_allclose(svd_shrink(m, 0.0), m, atol=1e-9)

    def test_negative_tau(self):
        with pytest.raises(ValueError, match="nonnegative"):
            svd_shrink(np.eye(2), -0.1)

    def test_local_optimality_probe(self, rng):
        m = rng.standard_normal((4, 3))
        tau = 0.5
        y = svd_shrink(m, tau)

        def obj(cand):
            return tau * nuclear_norm(cand) + 0.5 * np.linalg.norm(cand - m) ** 2

        best = obj(y)
        for _ in range(200):
            delta = rng.standard_normal(y.shape)
            delta *= 1e-3 / np.linalg.norm(delta)
            assert obj(y + delta) >= best - 1e-12

    def test_nonexpansive(self, rng):
        for _ in range(10):
            a = rng.standard_normal((4, 4))
            b = rng.standard_normal((4, 4))
            d = np.linalg.norm(svd_shrink(a, 0.7) - svd_shrink(b, 0.7))
            assert d <= np.linalg.norm(a - b) + 1e-12

    def test_shrinks_nuclear_norm_and_rank(self, rng):
        m = rng.standard_normal((5, 4))
        y = svd_shrink(m, 0.8)
        assert nuclear_norm(y) <= nuclear_norm(m) + 1e-10
        assert np.linalg.matrix_rank(y) <= np.linalg.matrix_rank(m)


class TestSoftShrink:
    def test_scalar_values(self):
        out = soft_shrink(np.array([5.0, -1.0]), 2.0)
        np.testing.assert_array_equal(out, [3.0, 0.0])

    def test_tau_zero_identity(self, rng):
        m = rng.standard_normal((3, 3))
        np.testing.assert_array_equal(soft_shrink(m, 0.0), m)

    def test_negative_tau(self):
        with pytest.raises(ValueError, match="nonnegative"):
            soft_shrink(np.zeros(3), -1.0)

    def test_matches_grid_oracle(self, rng):
        m = rng.standard_normal((3, 3))
        tau = 0.7
        out = soft_shrink(m, tau)
        grid = np.linspace(-4, 4, 80001)
        for val, got in zip(m.ravel(), out.ravel()):
            objs = tau * np.abs(grid) + 0.5 * (grid - val) ** 2
            assert abs(grid[np.argmin(objs)] - got) <= 1e-6 + 1e-4

    def test_nonexpansive(self, rng):
        a = rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4))
        d = np.linalg.norm(soft_shrink(a, 0.3) - soft_shrink(b, 0.3))
        assert d <= np.linalg.norm(a - b) + 1e-12

    def test_tensor_input(self, rng):
        t = rng.standard_normal((2, 3, 2))
        assert soft_shrink(t, 0.5).shape == t.shape


class TestSpdSolve:
    def test_identity(self, rng):
        b = rng.standard_normal((3, 2))
        np.testing.assert_allclose(spd_solve(np.eye(3), b), b, atol=1e-12)

    def test_diagonal(self):
        x = spd_solve(np.diag([2.0, 4.0]), np.array([[2.0], [8.0]]))
        np.testing.assert_allclose(x, [[1.0], [2.0]], atol=1e-12)

    def test_residual_on_random_spd(self, rng):
        g = rng.standard_normal((6, 6))
        a = g @ g.T + np.eye(6)
        b = rng.standard_normal((6, 3))
        x = spd_solve(a, b)
        res = np.linalg.norm(a @ x - b)
        assert res <= 1e-8 * (1.0 + np.linalg.norm(b))

    def test_round_trip_up_to_50(self, rng):
        for n in (10, 30, 50):
            g = rng.standard_normal((n, n))
            a = g @ g.T + n * np.eye(n)
            x = rng.standard_normal((n, 2))
            back = spd_solve(a, a @ x)
            assert np.linalg.norm(back - x) <= 1e-8 * max(1, np.linalg.norm(x))

    def test_non_spd_raises(self):
        with pytest.raises(np.linalg.LinAlgError):
            spd_solve(np.diag([1.0, -1.0]), np.ones((2, 1)))

    def test_factorize_reuse(self, rng):
        a = np.diag([2.0, 3.0])
        solve = spd_factorize(a)
        for _ in range(3):
            b = rng.standard_normal((2, 4))
            np.testing.assert_allclose(a @ solve(b), b, atol=1e-12)


class TestSpectralNorm:
    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)

    def test_zero(self):
        assert spectral_norm(np.zeros((3, 4))) == 0.0

    def test_matches_svd(self, rng):
        for _ in range(5):
            m = rng.standard_normal((5, 5))
            top = np.linalg.svd(m, compute_uv=False)[0]
            assert spectral_norm(m) == pytest.approx(top, rel=1e-8)


class TestToeplitzDiff:
    def test_n3(self):
        expected = np.array(
            [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]]
        )
        np.testing.assert_array_equal(toeplitz_diff(3), expected)

    def test_n1(self):
        np.testing.assert_array_equal(toeplitz_diff(1), [[1.0]])

    def test_action_on_vector(self, rng):
        n = 6
        v = rng.standard_normal(n)
        out = toeplitz_diff(n) @ v
        np.testing.assert_allclose(out[:-1], v[:-1] - v[1:])
        assert out[-1] == v[-1]

    def test_zero_size_rejected(self):
        with pytest.raises(ValueError):
            toeplitz_diff(0)

    def test_gram_structure(self):
        n = 5
        a = toeplitz_diff(n)
        g = a.T @ a
        np.testing.assert_allclose(g, g.T)
        # tridiagonal
        assert not np.triu(g, 2).any()
        assert np.linalg.eigvalsh(g).min() >= -1e-12

    def test_shifted_gram_is_spd(self):
        for beta, omega in ((0.1, 0.0), (1e-6, 5.0), (2.0, 0.3)):
            a = toeplitz_diff(7)
            m = beta * np.eye(7) + 2 * omega * a.T @ a
            assert np.linalg.eigvalsh(m).min() > 0
