"""Spectral core against the dense-Kronecker oracle."""

import numpy as np
import pytest

from distill_lab.errors import DimensionMismatch, RankDeficient
from distill_lab.spectral import (
    FeatureMap,
    SpectralDecomposition,
    SyntheticTask,
    build_design_matrix,
    decompose,
    design_from_matrix,
    null_projection,
    vectorize_outputs,
)

from conftest import random_spec


def dense_svd_oracle(spec):
    """Full SVD of the explicitly materialized Kronecker operator."""
    K = spec.materialize()
    U, s, Vt = np.linalg.svd(K, full_matrices=True)
    return U, s, Vt.T


def principal_angle(A, B):
    """Sine of the largest principal angle between the column spans of A and B.

    The sine form stays accurate for tiny angles where arccos of a
    cross-Gram singular value loses half the digits.
    """
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    resid = Qb - Qa @ (Qa.T @ Qb)
    return float(np.linalg.svd(resid, compute_uv=False)[0])


class TestBuildDesignMatrix:
    def test_identity_map_on_unit_basis(self):
        task = SyntheticTask(inputs=np.eye(2), labels=np.zeros((2, 1)))
        fmap = FeatureMap(kind="identity", d=2, input_dim=2)
        dm = build_design_matrix(task, fmap)
        np.testing.assert_allclose(dm.Phi, np.eye(2))
        assert dm.rank == 2

    def test_random_tanh_is_full_rank(self):
        rng = np.random.default_rng(7)
        task = SyntheticTask(inputs=rng.normal(size=(4, 3)), labels=np.zeros((4, 1)))
        fmap = FeatureMap(kind="random-tanh", d=16, input_dim=3, seed=11)
        dm = build_design_matrix(task, fmap)
        # oracle: rank by SVD threshold on the raw matrix
        s = np.linalg.svd(dm.Phi, compute_uv=False)
        assert int(np.sum(s > 1e-9 * s[0])) == 4
        assert dm.rank == 4

    def test_d_smaller_than_n_rejected(self):
        task = SyntheticTask(inputs=np.eye(3), labels=np.zeros((3, 1)))
        fmap = FeatureMap(kind="identity", d=2, input_dim=2)
        with pytest.raises(DimensionMismatch):
            build_design_matrix(task, fmap)

    def test_rank_deficient_features_rejected(self):
        # duplicated input column -> Phi cannot have full column rank
        x = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        task = SyntheticTask(inputs=x, labels=np.zeros((3, 1)))
        fmap = FeatureMap(kind="identity", d=2, input_dim=2)
        with pytest.raises((RankDeficient, DimensionMismatch)):
            build_design_matrix(task, fmap)

    def test_random_fourier_deterministic_given_seed(self):
        x = np.random.default_rng(0).normal(size=(5, 2))
        a = FeatureMap(kind="random-fourier", d=8, input_dim=2, seed=3)
        b = FeatureMap(kind="random-fourier", d=8, input_dim=2, seed=3)
        np.testing.assert_array_equal(a(x), b(x))


class TestDecompose:
    def test_diagonal_phi_p2_replicates_singular_values(self):
        spec = decompose(np.diag([3.0, 1.0]), p=2)
        np.testing.assert_allclose(spec.sigma, [3.0, 3.0, 1.0, 1.0])

    def test_diagonal_phi_p1(self):
        spec = decompose(np.diag([3.0, 1.0]), p=1)
        np.testing.assert_allclose(spec.sigma, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(spec.U_top()), np.eye(2), atol=1e-15)

    def test_factored_matches_dense_kronecker_svd(self):
        rng = np.random.default_rng(42)
        spec = random_spec(rng, d=8, n=3, p=2)
        _, s_dense, _ = dense_svd_oracle(spec)
        np.testing.assert_allclose(spec.sigma, s_dense[: spec.np_], atol=1e-10)

    @pytest.mark.parametrize("d,n,p", [(4, 2, 1), (6, 3, 2), (5, 2, 3), (8, 4, 2), (16, 4, 4)])
    def test_factored_equals_dense_up_to_dp_64(self, d, n, p):
        rng = np.random.default_rng(d * 100 + n * 10 + p)
        spec = random_spec(rng, d, n, p)
        assert spec.dp <= 64
        U_dense, s_dense, V_dense = dense_svd_oracle(spec)
        np.testing.assert_allclose(spec.sigma, s_dense[: spec.np_], atol=1e-10)
        # subspace agreement per group of (numerically) equal singular values
        groups = []
        start = 0
        for i in range(1, spec.np_ + 1):
            if i == spec.np_ or abs(spec.sigma[i] - spec.sigma[start]) > 1e-8 * spec.sigma[0]:
                groups.append((start, i))
                start = i
        for lo, hi in groups:
            A = np.column_stack([spec.u_vector(i) for i in range(lo, hi)])
            B = U_dense[:, lo:hi]
            assert principal_angle(A, B) < 1e-8
            Av = np.column_stack([spec.v_vector(i) for i in range(lo, hi)])
            Bv = V_dense[:, lo:hi]
            assert principal_angle(Av, Bv) < 1e-8

    def test_reconstruction_matches_kron(self, rng):
        spec = random_spec(rng, d=6, n=3, p=2)
        rebuilt = sum(
            spec.sigma[i] * np.outer(spec.u_vector(i), spec.v_vector(i))
            for i in range(spec.np_)
        )
        np.testing.assert_allclose(rebuilt, spec.materialize(), atol=1e-10)

    def test_stored_factors_orthonormal(self, rng):
        spec = random_spec(rng, d=7, n=4, p=2)
        U = spec.U_top()
        V = spec.V()
        np.testing.assert_allclose(U.T @ U, np.eye(spec.np_), atol=1e-10)
        np.testing.assert_allclose(V.T @ V, np.eye(spec.np_), atol=1e-10)

    def test_operator_application_agrees_with_dense(self, rng):
        spec = random_spec(rng, d=6, n=3, p=2)
        K = spec.materialize()
        w = rng.normal(size=spec.dp)
        f = rng.normal(size=spec.np_)
        np.testing.assert_allclose(spec.apply_operator_t(w), K.T @ w, atol=1e-12)
        np.testing.assert_allclose(spec.apply_operator(f), K @ f, atol=1e-12)

    def test_coefficient_roundtrip(self, rng):
        spec = random_spec(rng, d=6, n=3, p=2)
        c = rng.normal(size=spec.np_)
        np.testing.assert_allclose(
            spec.top_coefficients(spec.from_top_coefficients(c)), c, atol=1e-12
        )
        # top_coefficients really is U_top^T w
        w = rng.normal(size=spec.dp)
        np.testing.assert_allclose(spec.top_coefficients(w), spec.U_top().T @ w, atol=1e-12)


class TestNullProjection:
    def test_first_singular_vector_annihilated(self, rng):
        spec = random_spec(rng, d=5, n=2, p=1)
        np.testing.assert_allclose(
            null_projection(spec, spec.u_vector(0)), np.zeros(spec.dp), atol=1e-12
        )

    def test_null_space_vector_fixed(self, rng):
        spec = random_spec(rng, d=5, n=2, p=2)
        w = null_projection(spec, rng.normal(size=spec.dp))
        np.testing.assert_allclose(null_projection(spec, w), w, atol=1e-12)

    def test_matches_dense_projector(self):
        rng = np.random.default_rng(5)
        spec = random_spec(rng, d=4, n=2, p=1)
        w = rng.normal(size=spec.dp)
        U = spec.U_top()
        expected = (np.eye(spec.dp) - U @ U.T) @ w
        np.testing.assert_allclose(null_projection(spec, w), expected, atol=1e-12)

    def test_result_orthogonal_to_top_vectors(self, rng):
        spec = random_spec(rng, d=8, n=3, p=2)
        v = null_projection(spec, rng.normal(size=spec.dp))
        for i in range(spec.np_):
            assert abs(spec.u_vector(i) @ v) < 1e-10

    def test_idempotent_and_pythagoras(self, rng):
        for _ in range(10):
            spec = random_spec(rng, d=6, n=3, p=2)
            w = rng.normal(size=spec.dp)
            pw = null_projection(spec, w)
            np.testing.assert_allclose(null_projection(spec, pw), pw, atol=1e-12)
            span = w - pw
            assert abs(w @ w - (span @ span + pw @ pw)) < 1e-10 * max(1.0, w @ w)

    def test_dimension_mismatch(self, rng):
        spec = random_spec(rng, d=4, n=2, p=1)
        with pytest.raises(DimensionMismatch):
            null_projection(spec, np.zeros(spec.dp + 1))


class TestVectorization:
    def test_output_vector_grouped_by_coordinate(self):
        Ymat = np.array([[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])  # n=3, p=2
        np.testing.assert_array_equal(vectorize_outputs(Ymat), [1, 2, 3, 4, 5, 6])

    def test_model_output_layout_consistent(self, rng):
        # f(x_i, w)_j laid out the same way as the labels
        spec = random_spec(rng, d=4, n=3, p=2)
        W = rng.normal(size=(spec.p, spec.d))
        w = W.ravel()
        f = spec.apply_operator_t(w)
        outputs = (W @ spec.Phi).T  # n x p, row i = f(x_i, w)
        np.testing.assert_allclose(f, vectorize_outputs(outputs), atol=1e-14)


class TestTaskValidation:
    def test_nonfinite_labels_rejected(self):
        with pytest.raises(DimensionMismatch):
            SyntheticTask(inputs=np.eye(2), labels=np.array([[np.nan], [0.0]]))

    def test_label_row_count_must_match(self):
        with pytest.raises(DimensionMismatch):
            SyntheticTask(inputs=np.eye(3), labels=np.zeros((2, 1)))

    def test_design_from_matrix_rejects_rank_deficient(self):
        with pytest.raises(RankDeficient):
            design_from_matrix(np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]]))
