import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from explomics.errors import DegenerateInputError, ValidationError
from explomics.svd import (
    approx_entries,
    approximation_error,
    biplot_coordinates,
    compute_dual_svd,
    from_json,
    lambda_inner_product,
    projection_content,
    reconstruct,
    to_json,
)


def random_projection(rng, n, s):
    q, _ = np.linalg.qr(rng.standard_normal((n, s)))
    return q @ q.T


class TestComputeDualSvd:
    def test_diagonal_matrix(self):
        svd = compute_dual_svd(np.diag([2.0, 1.0]))
        assert_allclose(svd.singular_values, [2.0, 1.0])
        # sign convention makes the bases the canonical vectors exactly
        assert_allclose(np.abs(svd.sample_basis), np.eye(2), atol=1e-12)
        assert_allclose(svd.variable_basis, np.abs(svd.variable_basis))

    def test_rank_one_hand_example(self):
        # eigen-decomposing X^T X = [[25, 0], [0, 0]] by hand
        x = np.array([[3.0, 0.0], [4.0, 0.0]])
        svd = compute_dual_svd(x)
        assert svd.rank == 1
        assert_allclose(svd.singular_values, [5.0])
        assert_allclose(svd.variable_basis[:, 0], [0.6, 0.8])
        assert_allclose(svd.sample_basis[:, 0], [1.0, 0.0])

    def test_degenerate_spectrum_subspace_only(self):
        svd = compute_dual_svd(np.eye(3))
        assert_allclose(svd.singular_values, [1.0, 1.0, 1.0])
        # only subspace-level assertions: bases are orthonormal and couple
        svd.check_against(np.eye(3))

    def test_all_zero_matrix_degenerate(self):
        with pytest.raises(DegenerateInputError):
            compute_dual_svd(np.zeros((3, 2)))

    def test_coupling_and_orthonormality(self, rng):
        x = rng.standard_normal((12, 7))
        svd = compute_dual_svd(x)
        svd.check_against(x)

    def test_wide_matrix_route(self, rng):
        x = rng.standard_normal((4, 9))
        svd = compute_dual_svd(x)
        svd.check_against(x)
        assert_allclose(reconstruct(svd), x, atol=1e-10 * np.linalg.norm(x))

    def test_deterministic_reruns_bitwise(self, rng):
        x = rng.standard_normal((8, 5))
        a = compute_dual_svd(x)
        b = compute_dual_svd(x)
        assert_array_equal(a.singular_values, b.singular_values)
        assert_array_equal(a.sample_basis, b.sample_basis)
        assert_array_equal(a.variable_basis, b.variable_basis)

    def test_bad_rank_tol(self):
        with pytest.raises(ValidationError):
            compute_dual_svd(np.eye(2), rank_tol=1.5)


class TestReconstruct:
    def test_diagonal(self):
        svd = compute_dual_svd(np.diag([2.0, 1.0]))
        assert_allclose(reconstruct(svd), np.diag([2.0, 1.0]), atol=1e-14)

    def test_random_round_trip(self, rng):
        x = rng.standard_normal((30, 10))
        svd = compute_dual_svd(x)
        assert np.linalg.norm(reconstruct(svd) - x) <= 1e-10 * np.linalg.norm(x)

    def test_rank_deficient_exact(self):
        x = np.array([[3.0, 0.0], [4.0, 0.0]])
        assert_allclose(reconstruct(compute_dual_svd(x)), x, atol=1e-12)


class TestBiplot:
    def test_single_component_pairing(self):
        svd = compute_dual_svd(np.diag([2.0, 1.0]))
        coords = biplot_coordinates(svd, [1])
        pairing = lambda_inner_product(
            coords.variable_coords[0], coords.sample_coords[0], coords.weights
        )
        assert pairing == pytest.approx(2.0)  # (1/2) * 2 * 2 = X_11

    def test_full_set_reproduces_matrix(self, rng):
        x = rng.standard_normal((9, 6))
        svd = compute_dual_svd(x)
        coords = biplot_coordinates(svd, range(1, svd.rank + 1))
        rebuilt = np.array([
            [
                lambda_inner_product(coords.variable_coords[j],
                                     coords.sample_coords[k], coords.weights)
                for k in range(x.shape[1])
            ]
            for j in range(x.shape[0])
        ])
        assert_allclose(rebuilt, x, atol=1e-10)

    def test_rank_one_matrix_exact_everywhere(self, rng):
        x = np.outer(rng.standard_normal(5), rng.standard_normal(3))
        svd = compute_dual_svd(x)
        assert svd.rank == 1
        coords = biplot_coordinates(svd, [1])
        rebuilt = coords.variable_coords @ np.diag(1.0 / coords.weights) @ coords.sample_coords.T
        assert_allclose(rebuilt, x, atol=1e-12)

    def test_out_of_range_component(self):
        svd = compute_dual_svd(np.diag([2.0, 1.0]))
        with pytest.raises(ValidationError):
            biplot_coordinates(svd, [3])

    def test_pairing_equals_subset_approximation(self, rng):
        x = rng.standard_normal((7, 5))
        svd = compute_dual_svd(x)
        s = [1, 3]
        coords = biplot_coordinates(svd, s)
        rebuilt = (coords.variable_coords / coords.weights) @ coords.sample_coords.T
        assert_allclose(rebuilt, approx_entries(svd, s), atol=1e-12)


class TestLambdaInnerProduct:
    def test_weights_themselves(self):
        lam = np.array([3.0, 2.0, 0.5])
        assert lambda_inner_product(lam, lam, lam) == pytest.approx(lam.sum())

    def test_hand_value(self):
        assert lambda_inner_product([2.0, 0.0], [2.0, 0.0], [2.0, 1.0]) == pytest.approx(2.0)

    def test_coordinatewise_orthogonal(self):
        assert lambda_inner_product([1.0, 0.0], [0.0, 5.0], [2.0, 3.0]) == 0.0


class TestApproxEntries:
    def test_full_set_is_matrix(self, rng):
        x = rng.standard_normal((6, 4))
        svd = compute_dual_svd(x)
        assert_allclose(approx_entries(svd, range(1, svd.rank + 1)), x, atol=1e-10)

    def test_single_term(self):
        svd = compute_dual_svd(np.diag([2.0, 1.0]))
        assert_allclose(approx_entries(svd, [1]), np.diag([2.0, 0.0]), atol=1e-14)

    def test_additive_over_disjoint_subsets(self, rng):
        x = rng.standard_normal((8, 8))
        svd = compute_dual_svd(x)
        s1, s2 = [1, 3], [2, 5]
        combined = approx_entries(svd, s1 + s2)
        assert_allclose(approx_entries(svd, s1) + approx_entries(svd, s2),
                        combined, atol=1e-12)


class TestProjectionContent:
    def test_rank_one(self, rng):
        x = np.outer(rng.standard_normal(4), rng.standard_normal(3))
        assert projection_content(compute_dual_svd(x), [1]) == pytest.approx(1.0)

    def test_hand_value(self):
        svd = compute_dual_svd(np.diag([2.0, 1.0]))
        assert projection_content(svd, [1]) == pytest.approx(0.8)  # 4 / (4 + 1)

    def test_full_set_is_one(self, rng):
        svd = compute_dual_svd(rng.standard_normal((5, 5)))
        assert projection_content(svd, range(1, svd.rank + 1)) == pytest.approx(1.0)

    def test_monotone_in_subset(self, rng):
        svd = compute_dual_svd(rng.standard_normal((10, 6)))
        small = projection_content(svd, [1, 2])
        large = projection_content(svd, [1, 2, 3])
        assert small <= large


class TestApproximationError:
    def test_full_set_zero(self, rng):
        svd = compute_dual_svd(rng.standard_normal((5, 4)))
        assert approximation_error(svd, range(1, svd.rank + 1)) == (0.0, 0.0)

    def test_hand_value(self):
        svd = compute_dual_svd(np.diag([2.0, 1.0]))
        frob, sup = approximation_error(svd, [1])
        assert frob == pytest.approx(1.0)
        assert sup == pytest.approx(1.0)

    def test_matches_direct_difference(self, rng):
        x = rng.standard_normal((20, 8))
        svd = compute_dual_svd(x)
        frob, sup = approximation_error(svd, [1, 2])
        direct = x - approx_entries(svd, [1, 2])
        assert abs(frob - np.linalg.norm(direct)) <= 1e-10
        assert np.abs(direct).max() <= sup + 1e-10

    def test_monotone_in_subset(self, rng):
        svd = compute_dual_svd(rng.standard_normal((9, 7)))
        assert approximation_error(svd, [1])[0] >= approximation_error(svd, [1, 2])[0]


class TestOptimalityProperties:
    def test_projections_never_increase_frobenius(self, rng):
        for _ in range(20):
            x = rng.standard_normal((7, 5))
            s = int(rng.integers(1, 5))
            pi_p = random_projection(rng, 7, s)
            pi_n = random_projection(rng, 5, s)
            assert np.linalg.norm(pi_p @ x) <= np.linalg.norm(x) + 1e-12
            assert np.linalg.norm(x @ pi_n) <= np.linalg.norm(x) + 1e-12

    def test_leading_components_beat_random_projections(self, rng):
        x = rng.standard_normal((10, 6))
        svd = compute_dual_svd(x)
        for _ in range(100):
            s = int(rng.integers(1, 6))
            pi_p = random_projection(rng, 10, s)
            pi_n = random_projection(rng, 6, s)
            err = np.linalg.norm(x - pi_p @ x @ pi_n)
            best = approximation_error(svd, range(1, min(s, svd.rank) + 1))[0]
            assert err >= best - 1e-9


class TestSerialization:
    def test_round_trip_bitwise(self, rng):
        svd = compute_dual_svd(rng.standard_normal((6, 4)))
        again = from_json(to_json(svd))
        assert_array_equal(again.singular_values, svd.singular_values)
        assert_array_equal(again.sample_basis, svd.sample_basis)
        assert_array_equal(again.variable_basis, svd.variable_basis)
        assert again.dims == svd.dims
