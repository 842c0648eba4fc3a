import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussgreen.linalg import (
    NoConvergenceError,
    NotPositiveDefiniteError,
    SingularMatrixError,
    Tolerances,
    as_covariance,
    cholesky,
    invert,
    is_nonneg,
    spectral_radius,
)
from helpers import MIN_KERNEL, MIN_KERNEL_INV, random_spd


class TestTolerances:
    def test_defaults_valid(self):
        tol = Tolerances()
        assert 0 < tol.eps_zero < 1
        assert tol.eps_psd > 0 and tol.sym_tol > 0

    @pytest.mark.parametrize("bad", [0.0, -1e-3, 1.5])
    def test_eps_zero_range(self, bad):
        with pytest.raises(ValueError):
            Tolerances(eps_zero=bad)

    def test_zero_threshold_scales_with_matrix(self):
        tol = Tolerances(eps_zero=1e-10)
        assert tol.zero_threshold(np.eye(2)) == pytest.approx(1e-10)
        assert tol.zero_threshold(100 * np.eye(2)) == pytest.approx(1e-8)

    def test_scaled_widens_band(self):
        tol = Tolerances()
        assert Tolerances().scaled(10).eps_zero == pytest.approx(10 * tol.eps_zero)


class TestCholesky:
    def test_identity(self):
        np.testing.assert_allclose(cholesky(np.eye(3)), np.eye(3))

    def test_min_kernel_reconstructs(self):
        L = cholesky(MIN_KERNEL)
        np.testing.assert_allclose(L @ L.T, MIN_KERNEL, atol=1e-12)
        assert np.allclose(np.triu(L, 1), 0.0)

    def test_singular_matrix_rejected(self):
        # determinant is exactly 0 (leading minors 1, 0.75, 0)
        G = np.array([[1.0, 0.5, -0.5], [0.5, 1.0, 0.5], [-0.5, 0.5, 1.0]])
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(G)
        assert err.value.pivot_index == 2

    def test_negative_definite_fails_at_first_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(-np.eye(2))
        assert err.value.pivot_index == 0

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            cholesky(np.array([[1.0, 0.3], [0.0, 1.0]]))

    def test_nan_rejected(self):
        with pytest.raises(ValueError, match="NaN"):
            as_covariance(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestInvert:
    def test_identity(self):
        np.testing.assert_allclose(invert(np.eye(4)), np.eye(4))

    def test_min_kernel(self):
        np.testing.assert_allclose(invert(MIN_KERNEL), MIN_KERNEL_INV, atol=1e-12)

    def test_scalar(self):
        np.testing.assert_allclose(invert(np.array([[2.0]])), [[0.5]])

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            invert(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_product_is_identity(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(5, 5)) + 5 * np.eye(5)
        M = invert(A)
        np.testing.assert_allclose(A @ M, np.eye(5), atol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 7), seed=st.integers(0, 10_000))
    def test_double_inversion_round_trip(self, n, seed):
        # condition number stays modest by construction
        A = random_spd(n, np.random.default_rng(seed))
        if np.linalg.cond(A) > 1e6:
            return
        np.testing.assert_allclose(invert(invert(A)), A, rtol=1e-8, atol=1e-8)


class TestSpectralRadius:
    def test_zero_matrix(self):
        sr = spectral_radius(np.zeros((3, 3)))
        assert sr.estimate == 0.0 and sr.upper == 0.0

    def test_cubic_root_case(self):
        # char poly x^3 - x^2 - 2x + 1; dense eigensolver is the oracle
        B = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        oracle = float(np.abs(np.linalg.eigvals(B)).max())
        assert oracle == pytest.approx(1.8019, abs=1e-4)
        sr = spectral_radius(B)
        assert sr.estimate == pytest.approx(oracle, rel=1e-9)
        assert sr.lower - 1e-12 <= oracle <= sr.upper + 1e-12
        assert sr.gershgorin == pytest.approx(2.0)

    def test_symmetric_flip(self):
        sr = spectral_radius(np.array([[0.0, 0.5], [0.5, 0.0]]))
        assert sr.estimate == pytest.approx(0.5, rel=1e-9)

    def test_absolute_values_used(self):
        sr = spectral_radius(np.array([[0.0, -0.5], [-0.5, 0.0]]))
        assert sr.estimate == pytest.approx(0.5, rel=1e-9)

    def test_no_convergence_carries_gershgorin(self):
        B = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(NoConvergenceError) as err:
            spectral_radius(B, max_iter=1)
        assert err.value.gershgorin == pytest.approx(1.0)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 6), seed=st.integers(0, 10_000))
    def test_bracket_and_gershgorin_bound(self, n, seed):
        B = np.random.default_rng(seed).uniform(0.0, 1.0, size=(n, n))
        sr = spectral_radius(B)
        oracle = float(np.abs(np.linalg.eigvals(B)).max())
        assert sr.estimate <= sr.gershgorin + 1e-12
        assert sr.lower - 1e-9 <= oracle <= sr.upper + 1e-9


class TestIsNonneg:
    def test_identity(self):
        assert is_nonneg(np.eye(2), 1e-12).ok

    def test_reports_worst_entry(self):
        check = is_nonneg(np.array([[2.0, -1.0], [-1.0, 2.0]]), 1e-12)
        assert not check.ok
        assert check.min_value == -1.0
        assert check.index in {(0, 1), (1, 0)}

    def test_tolerance_semantics(self):
        A = np.array([[-1e-14, 1.0], [1.0, 1.0]])
        assert is_nonneg(A, 1e-12).ok
        assert not is_nonneg(A, 1e-16).ok


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_cholesky_succeeds_iff_leading_minors_positive(seed):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(4, 4))
    A = 0.5 * (W + W.T) + rng.uniform(-1.0, 3.0) * np.eye(4)
    minors = [np.linalg.det(A[: k + 1, : k + 1]) for k in range(4)]
    if min(abs(m) for m in minors) < 1e-6:  # skip borderline draws
        return
    expect_pd = all(m > 0 for m in minors)
    if expect_pd:
        L = cholesky(A)
        np.testing.assert_allclose(L @ L.T, A, atol=1e-10)
    else:
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(A)
