import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmdkl.errors import InputError, NumericalError
from mmdkl.numerics import (
    JitterPolicy,
    half_solve,
    logdet,
    quadratic_form,
    random_unitary,
    spd_factor,
    spd_solve,
)


def random_spd(dim, seed):
    b = np.random.default_rng(seed).standard_normal((dim, dim))
    return b @ b.T + np.eye(dim)


class TestSpdFactor:
    def test_identity(self):
        f = spd_factor(np.eye(3))
        np.testing.assert_array_equal(f.lower, np.eye(3))
        assert f.jitter_applied == 0.0

    def test_hand_cholesky(self):
        f = spd_factor([[4.0, 2.0], [2.0, 3.0]])
        np.testing.assert_allclose(f.lower, [[2.0, 0.0], [1.0, math.sqrt(2.0)]], atol=1e-15)

    def test_zero_matrix_without_jitter(self):
        with pytest.raises(NumericalError):
            spd_factor(np.zeros((3, 3)), JitterPolicy.none())

    def test_asymmetric_rejected(self):
        with pytest.raises(InputError):
            spd_factor([[1.0, 0.5], [0.4, 1.0]])

    def test_singular_gets_jitter(self):
        a = np.ones((4, 4))
        f = spd_factor(a)
        assert f.jitter_applied > 0.0
        recon = f.lower @ f.lower.T
        np.testing.assert_allclose(recon, a + f.jitter_applied * np.eye(4), atol=1e-12)

    def test_indefinite_fails_with_last_jitter(self):
        a = np.diag([1.0, -1.0])
        with pytest.raises(NumericalError) as info:
            spd_factor(a, JitterPolicy(max_tries=3, base=1e-6))
        assert info.value.last_jitter == pytest.approx(1e-4)

    @pytest.mark.parametrize("dim", [1, 5, 50, 300])
    def test_reconstruction(self, dim):
        a = random_spd(dim, dim)
        f = spd_factor(a)
        err = np.max(np.abs(f.lower @ f.lower.T - (a + f.jitter_applied * np.eye(dim))))
        assert err <= 1e-8 * np.max(np.abs(a))


class TestSolves:
    def test_identity_solve(self):
        np.testing.assert_allclose(spd_solve(spd_factor(np.eye(3)), [1, 2, 3]), [1, 2, 3])

    def test_hand_solve(self):
        f = spd_factor([[4.0, 2.0], [2.0, 3.0]])
        np.testing.assert_allclose(spd_solve(f, [8.0, 7.0]), [1.25, 1.5], rtol=1e-14)

    def test_scaled_identity(self):
        np.testing.assert_allclose(spd_solve(spd_factor(2 * np.eye(5)), np.ones(5)), 0.5 * np.ones(5))

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            spd_solve(spd_factor(np.eye(3)), np.ones(2))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 50), st.integers(0, 2**32 - 1))
    def test_residual(self, dim, seed):
        a = random_spd(dim, seed)
        b = np.random.default_rng(seed + 1).standard_normal(dim)
        x = spd_solve(spd_factor(a), b)
        assert np.linalg.norm(a @ x - b) <= 1e-7 * np.linalg.norm(b)

    def test_logdet(self):
        a = random_spd(6, 2)
        assert logdet(spd_factor(a)) == pytest.approx(np.linalg.slogdet(a)[1], rel=1e-12)


class TestQuadraticForm:
    def test_zero(self):
        assert quadratic_form(np.zeros(3), spd_factor(np.eye(3))) == 0.0

    def test_norm(self):
        assert quadratic_form([3.0, 4.0], spd_factor(np.eye(2))) == pytest.approx(25.0)

    def test_scaled(self):
        assert quadratic_form([2.0, 0.0], spd_factor(2 * np.eye(2))) == pytest.approx(2.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 2**32 - 1))
    def test_matches_triangular_solve_and_inverse(self, dim, seed):
        a = random_spd(dim, seed)
        v = np.random.default_rng(seed + 7).standard_normal(dim)
        f = spd_factor(a)
        y = half_solve(f, v)
        q = quadratic_form(v, f)
        assert q == pytest.approx(float(y @ y), rel=1e-12)
        assert q == pytest.approx(float(v @ np.linalg.solve(a, v)), rel=1e-8)
        assert q >= 0.0


class TestRandomUnitary:
    def test_dim_one(self):
        u = random_unitary(1, 0)
        assert abs(u[0, 0]) == 1.0

    @pytest.mark.parametrize("seed", [0, 1, 12345])
    def test_orthogonal(self, seed):
        u = random_unitary(3, seed)
        assert np.max(np.abs(u.T @ u - np.eye(3))) <= 1e-10
        np.testing.assert_allclose(np.linalg.norm(u, axis=0), 1.0, atol=1e-12)

    def test_deterministic(self):
        np.testing.assert_array_equal(random_unitary(4, 9), random_unitary(4, 9))
        assert not np.array_equal(random_unitary(4, 9), random_unitary(4, 10))

    @pytest.mark.parametrize("dim", [0, -1, 2.5])
    def test_bad_dim(self, dim):
        with pytest.raises(InputError):
            random_unitary(dim, 0)

    def test_haar_first_entry_symmetric(self):
        # without the sign fix QR output is biased toward a positive R diagonal
        vals = np.array([random_unitary(2, s)[0, 0] for s in range(4000)])
        assert abs(vals.mean()) < 0.05
