"""Tests for the streaming-Gram linear algebra core."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regretlab.linalg import (GramState, ReducedBasis, as_matrix, as_vector,
                              det_ratio_identity, eigen_product_identity,
                              gram_update, penrose_check, pinv_sqrt,
                              pseudoinverse, quad_form_pinv, reduced_basis)
from regretlab.selfcheck import (check_eigen_monotonicity, check_image_growth,
                                 check_rank_one_identities, check_penrose,
                                 check_pinv_identities, check_pinv_limit,
                                 random_psd)


class TestPseudoinverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudoinverse(np.eye(2)), np.eye(2))

    def test_zero_matrix(self):
        np.testing.assert_array_equal(pseudoinverse(np.zeros((2, 2))), np.zeros((2, 2)))

    def test_diagonal_rank_deficient(self):
        M = np.array([[2.0, 0.0], [0.0, 0.0]])
        P = pseudoinverse(M)
        # the product identities are the oracle for the expected value
        assert penrose_check(M, P, 1e-12)
        np.testing.assert_allclose(P, [[0.5, 0.0], [0.0, 0.0]], atol=1e-15)

    def test_non_square(self):
        M = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]])
        assert penrose_check(M, pseudoinverse(M), 1e-10)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            pseudoinverse(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestPenroseCheck:
    def test_identity_pair(self):
        assert penrose_check(np.eye(2), np.eye(2), 1e-12)

    def test_diagonal_pair_by_direct_products(self):
        M = np.array([[2.0, 0.0], [0.0, 0.0]])
        P = np.array([[0.5, 0.0], [0.0, 0.0]])
        # direct verification of all four products
        np.testing.assert_allclose(M @ P @ M, M)
        np.testing.assert_allclose(P @ M @ P, P)
        np.testing.assert_allclose((M @ P).T, M @ P)
        np.testing.assert_allclose((P @ M).T, P @ M)
        assert penrose_check(M, P, 1e-12)

    def test_scaled_identity_fails(self):
        assert not penrose_check(np.eye(2), 2.0 * np.eye(2), 1e-8)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            penrose_check(np.eye(2), np.eye(3), 1e-8)


class TestPinvSqrt:
    def test_identity(self):
        np.testing.assert_allclose(pinv_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        G = np.diag([4.0, 9.0])
        S = pinv_sqrt(G)
        np.testing.assert_allclose(S, np.diag([0.5, 1.0 / 3.0]))
        # squaring and multiplying by G recovers the projector onto the image
        np.testing.assert_allclose(S @ S @ G, np.eye(2), atol=1e-12)

    def test_diagonal_rank_deficient(self):
        G = np.diag([4.0, 0.0])
        S = pinv_sqrt(G)
        np.testing.assert_allclose(S, np.diag([0.5, 0.0]))
        np.testing.assert_allclose(S @ S @ G, np.diag([1.0, 0.0]), atol=1e-12)

    def test_random_psd_recovers_projector(self):
        rng = np.random.default_rng(3)
        for rank in (1, 2, 3):
            G = random_psd(rng, 3, rank=rank)
            S = pinv_sqrt(G)
            proj = reduced_basis(G).projector()
            np.testing.assert_allclose(S @ S @ G, proj, atol=1e-10)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            pinv_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_negative_definite_rejected(self):
        with pytest.raises(ValueError, match="positive semidefinite"):
            pinv_sqrt(-np.eye(2))


class TestReducedBasis:
    def test_already_diagonal(self):
        rb = reduced_basis(np.diag([3.0, 0.0]))
        assert rb.rank == 1
        np.testing.assert_allclose(np.abs(rb.U), [[1.0], [0.0]], atol=1e-14)
        np.testing.assert_allclose(rb.sigma, [3.0])

    def test_identity_by_reconstruction(self):
        rb = reduced_basis(np.eye(2))
        np.testing.assert_allclose(rb.U.T @ rb.U, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(rb.U @ rb.Sigma @ rb.U.T, np.eye(2), atol=1e-14)

    def test_full_rank_by_reconstruction(self):
        G = np.array([[2.0, 1.0], [1.0, 1.0]])
        rb = reduced_basis(G)
        assert rb.rank == 2
        np.testing.assert_allclose(rb.U.T @ rb.U, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(rb.U @ rb.Sigma @ rb.U.T, G, atol=1e-12)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError, match="rank 0"):
            reduced_basis(np.zeros((2, 2)))


class TestQuadFormPinv:
    def test_identity(self):
        assert quad_form_pinv(np.eye(2), [1.0, 0.0]) == pytest.approx(1.0)

    def test_rank_deficient(self):
        assert quad_form_pinv(np.array([[2.0, 0.0], [0.0, 0.0]]),
                              [1.0, 0.0]) == pytest.approx(0.5)

    def test_zero_vector(self):
        assert quad_form_pinv(np.eye(2), [0.0, 0.0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            quad_form_pinv(np.eye(2), [1.0, 0.0, 0.0])

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_in_unit_interval_when_gram_contains_feature(self, seed):
        # x' pinv(B + x x') x always lies in [0, 1]
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 6))
        B = random_psd(rng, d, rank=int(rng.integers(0, d + 1)),
                       scale=10.0 ** rng.uniform(-2, 2))
        x = rng.standard_normal(d) * 10.0 ** rng.uniform(-2, 2)
        value = quad_form_pinv(B + np.outer(x, x), x)
        assert -1e-12 <= value <= 1.0 + 1e-9


class TestGramState:
    def test_null_update(self):
        state = gram_update(GramState.empty(2), [0.0, 0.0])
        assert state.rank == 0
        assert state.events == ()
        assert state.t == 1

    def test_first_feature(self):
        state = gram_update(GramState.empty(2), [1.0, 0.0])
        np.testing.assert_allclose(state.G, [[1.0, 0.0], [0.0, 0.0]])
        assert state.rank == 1
        assert state.events == (1,)

    def test_rank_growth(self):
        state = gram_update(GramState.empty(2), [1.0, 0.0])
        state = gram_update(state, [1.0, 1.0])
        np.testing.assert_allclose(state.G, [[2.0, 1.0], [1.0, 1.0]])
        # determinant 1 > 0 confirms full rank
        assert np.linalg.det(state.G) == pytest.approx(1.0)
        assert state.rank == 2
        assert state.events == (1, 2)

    def test_b_untouched_and_eigs_sorted(self):
        state = GramState.empty(3)
        rng = np.random.default_rng(5)
        for _ in range(6):
            state = gram_update(state, rng.standard_normal(3))
        np.testing.assert_array_equal(state.b, np.zeros(3))
        assert np.all(np.diff(state.eigs) <= 1e-12)
        assert len(state.events) == state.rank

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            gram_update(GramState.empty(2), [1.0, 0.0, 0.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            gram_update(GramState.empty(2), [np.inf, 0.0])

    def test_arrays_read_only(self):
        state = GramState.empty(2)
        with pytest.raises(ValueError):
            state.G[0, 0] = 1.0

    def test_smallest_positive_eig(self):
        state = GramState.empty(2)
        assert state.smallest_positive_eig == 0.0
        state = gram_update(state, [2.0, 0.0])
        assert state.smallest_positive_eig == pytest.approx(4.0)
        state = gram_update(state, [0.0, 1.0])
        assert state.smallest_positive_eig == pytest.approx(1.0)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_events_track_rank(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 5))
        state = GramState.empty(d)
        prev_rank = 0
        for _ in range(int(rng.integers(1, 10))):
            x = rng.standard_normal(d) if rng.random() > 0.2 else np.zeros(d)
            state = gram_update(state, x)
            assert state.rank in (prev_rank, prev_rank + 1)
            assert len(state.events) == state.rank
            prev_rank = state.rank


class TestDetRatioIdentity:
    def test_identity_matrix(self):
        lhs, rhs = det_ratio_identity(np.eye(2), [1.0, 0.0], [1.0, 0.0])
        assert lhs == pytest.approx(1.0)
        assert rhs == pytest.approx(1.0)

    def test_scaled_identity(self):
        # det(2I - e1 e1') = 2 and det(2I) = 4, so both sides are 1/2
        e1 = np.array([1.0, 0.0])
        assert np.linalg.det(2 * np.eye(2) - np.outer(e1, e1)) == pytest.approx(2.0)
        lhs, rhs = det_ratio_identity(2.0 * np.eye(2), e1, e1)
        assert lhs == pytest.approx(0.5)
        assert rhs == pytest.approx(0.5)

    def test_orthogonal_vectors(self):
        lhs, rhs = det_ratio_identity(np.eye(2), [1.0, 0.0], [0.0, 1.0])
        assert lhs == pytest.approx(0.0, abs=1e-15)
        assert rhs == pytest.approx(0.0, abs=1e-15)

    def test_singular_rejected(self):
        with pytest.raises(np.linalg.LinAlgError, match="singular"):
            det_ratio_identity(np.zeros((2, 2)), [1.0, 0.0], [1.0, 0.0])


class TestEigenProductIdentity:
    def test_zero_base(self):
        lhs, rhs = eigen_product_identity(np.zeros((2, 2)), [1.0, 0.0])
        assert lhs == pytest.approx(1.0)
        assert rhs == pytest.approx(1.0)

    def test_scalar(self):
        # A = [2], so x' pinv(A) x = 1/2 and 1 - 1/2 = 1/2
        lhs, rhs = eigen_product_identity(np.array([[1.0]]), [1.0])
        assert lhs == pytest.approx(0.5)
        assert rhs == pytest.approx(0.5)

    def test_rank_growth_zeroes_product(self):
        lhs, rhs = eigen_product_identity(np.diag([1.0, 0.0]), [0.0, 1.0])
        assert lhs == pytest.approx(1.0)
        assert rhs == pytest.approx(1.0)

    def test_rank_zero_rejected(self):
        with pytest.raises(ValueError, match="rank 0"):
            eigen_product_identity(np.zeros((2, 2)), [0.0, 0.0])


class TestValidationHelpers:
    def test_as_vector_shape(self):
        with pytest.raises(ValueError, match="1-d"):
            as_vector(np.eye(2))

    def test_as_matrix_shape(self):
        with pytest.raises(ValueError, match="2-d"):
            as_matrix(np.ones(3))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=60, deadline=None)
def test_penrose_property_random_matrices(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 7))
    n = int(rng.integers(1, 7))
    M = rng.standard_normal((m, n)) * 10.0 ** rng.uniform(-3, 3)
    assert penrose_check(M, pseudoinverse(M), 1e-8)


def test_penrose_suite():
    result = check_penrose(count=300)
    assert result.ok, result.detail


def test_pinv_ridge_limit():
    result = check_pinv_limit()
    assert result.ok, result.detail


def test_pinv_product_identities():
    result = check_pinv_identities()
    assert result.ok, result.detail


def test_eigen_monotonicity():
    result = check_eigen_monotonicity()
    assert result.ok, result.detail


def test_image_growth():
    result = check_image_growth()
    assert result.ok, result.detail


def test_rank_one_identities_agree():
    result = check_rank_one_identities(count=300)
    assert result.ok, result.detail


def test_det_ratio_and_eigen_product_consistent():
    # on a full-rank PSD matrix both identities describe the same quantity
    rng = np.random.default_rng(8)
    for _ in range(50):
        d = int(rng.integers(1, 5))
        B = random_psd(rng, d)
        x = rng.standard_normal(d)
        A = B + np.outer(x, x)
        lhs_d, rhs_d = det_ratio_identity(A, x, x)
        lhs_e, rhs_e = eigen_product_identity(B, x)
        assert lhs_d == pytest.approx(lhs_e, abs=1e-9)
        assert rhs_d == pytest.approx(rhs_e, abs=1e-9)
