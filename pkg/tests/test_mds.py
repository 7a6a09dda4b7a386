import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from explomics.errors import DisconnectedGraphError, ValidationError
from explomics.mds import (
    check_covariance,
    covariance_to_distance,
    distance_from_points,
    distance_to_covariance,
    geodesic_distances,
    gram_from_points,
    isomap_embed,
    knn_graph,
    project_to_valid_covariance,
    reconstruct_points,
)
from explomics.svd import compute_dual_svd


def brute_force_shortest(n, edges, weights, src, dst):
    """Oracle: enumerate every simple path."""
    adj = {}
    for (i, j), w in zip(edges, weights):
        adj.setdefault(i, []).append((j, w))
        adj.setdefault(j, []).append((i, w))
    best = [np.inf]

    def walk(node, seen, length):
        if length >= best[0]:
            return
        if node == dst:
            best[0] = length
            return
        for nxt, w in adj.get(node, []):
            if nxt not in seen:
                walk(nxt, seen | {nxt}, length + w)

    walk(src, {src}, 0.0)
    return best[0]


class TestGramFromPoints:
    def test_two_points_on_a_line(self):
        c = gram_from_points([[0.0, 2.0]])
        assert_allclose(c, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-14)

    def test_identical_points_zero(self):
        assert_allclose(gram_from_points([[3.0, 3.0], [1.0, 1.0]]), 0.0, atol=1e-14)

    def test_annihilates_ones(self, rng):
        c = gram_from_points(rng.standard_normal((4, 9)))
        assert np.abs(c @ np.ones(9)).max() < 1e-10
        check_covariance(c)


class TestDistanceFromPoints:
    def test_two_points(self):
        assert_allclose(distance_from_points([[0.0, 2.0]]), [[0.0, 4.0], [4.0, 0.0]])

    def test_identical_points(self):
        assert_allclose(distance_from_points([[1.0, 1.0]]), 0.0)

    def test_translation_invariant(self, rng):
        x = rng.standard_normal((3, 6))
        shift = rng.standard_normal((3, 1))
        assert_allclose(distance_from_points(x + shift), distance_from_points(x),
                        atol=1e-12)

    def test_blocking_matches_direct(self, rng):
        x = rng.standard_normal((7, 5))
        assert_allclose(distance_from_points(x, block=2), distance_from_points(x),
                        atol=1e-12)


class TestDuality:
    def test_hand_example_c_to_d(self):
        c = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert_allclose(covariance_to_distance(c), [[0.0, 4.0], [4.0, 0.0]])

    def test_zero_maps_to_zero(self):
        assert_allclose(covariance_to_distance(np.zeros((3, 3))), 0.0)
        assert_allclose(distance_to_covariance(np.zeros((3, 3))), 0.0)

    def test_hand_example_d_to_c(self):
        d = np.array([[0.0, 4.0], [4.0, 0.0]])
        assert_allclose(distance_to_covariance(d), [[1.0, -1.0], [-1.0, 1.0]],
                        atol=1e-14)

    def test_collinear_hand_example(self):
        # points 0, 1, 3: centered values (-4/3, -1/3, 5/3), outer product
        d = np.array([[0.0, 1.0, 9.0], [1.0, 0.0, 4.0], [9.0, 4.0, 0.0]])
        expected = np.array([
            [16.0, 4.0, -20.0],
            [4.0, 1.0, -5.0],
            [-20.0, -5.0, 25.0],
        ]) / 9.0
        assert_allclose(distance_to_covariance(d), expected, atol=1e-14)

    def test_round_trip_from_covariance(self, rng):
        for _ in range(25):
            c = gram_from_points(rng.standard_normal((4, 7)))
            assert_allclose(distance_to_covariance(covariance_to_distance(c)), c,
                            atol=1e-10)

    def test_round_trip_from_points(self, rng):
        x = rng.standard_normal((5, 8))
        d = distance_from_points(x)
        assert_allclose(covariance_to_distance(distance_to_covariance(d)), d,
                        atol=1e-10)

    def test_d_to_c_matches_gram(self, rng):
        x = rng.standard_normal((6, 5))
        assert_allclose(distance_to_covariance(distance_from_points(x)),
                        gram_from_points(x), atol=1e-10)


class TestReconstructPoints:
    def test_two_point_example(self):
        c = np.array([[1.0, -1.0], [-1.0, 1.0]])
        pts = reconstruct_points(c, 2)
        assert pts.shape == (2, 2)
        assert np.linalg.norm(pts[:, 0] - pts[:, 1]) == pytest.approx(2.0)
        assert_allclose(pts.mean(axis=1), 0.0, atol=1e-12)

    def test_zero_covariance(self):
        assert_allclose(reconstruct_points(np.zeros((3, 3)), 2), 0.0)

    def test_gram_of_reconstruction_is_identity(self, rng):
        for _ in range(10):
            c = gram_from_points(rng.standard_normal((6, 5)))
            pts = reconstruct_points(c, 6)
            assert_allclose(gram_from_points(pts), c, atol=1e-9)

    def test_distances_reproduced_exactly(self, rng):
        x = rng.standard_normal((4, 6))
        d = distance_from_points(x)
        pts = reconstruct_points(distance_to_covariance(d), 6)
        assert_allclose(distance_from_points(pts), d, atol=1e-9)

    def test_insufficient_dimension_rejected(self, rng):
        c = gram_from_points(rng.standard_normal((5, 6)))
        with pytest.raises(ValidationError):
            reconstruct_points(c, 2)


class TestProjectToValidCovariance:
    def test_fixed_point(self, rng):
        c = gram_from_points(rng.standard_normal((4, 6)))
        assert_allclose(project_to_valid_covariance(c), c, atol=1e-12)

    def test_negative_spectrum_clipped(self):
        a = np.array([[-1.0, 1.0], [1.0, -1.0]])  # centered, eigenvalues {0, -2}
        assert_allclose(project_to_valid_covariance(a), 0.0, atol=1e-14)

    def test_symmetrizes_first(self, rng):
        a = rng.standard_normal((5, 5))
        assert_allclose(project_to_valid_covariance(a),
                        project_to_valid_covariance((a + a.T) / 2), atol=1e-12)

    def test_idempotent_and_valid(self, rng):
        for _ in range(10):
            a = rng.standard_normal((6, 6))
            c = project_to_valid_covariance(a)
            check_covariance(c)
            assert_allclose(project_to_valid_covariance(c), c, atol=1e-10)


class TestKnnGraph:
    def test_collinear_chain(self):
        d = distance_from_points([[0.0, 1.0, 2.0, 3.0]])
        g = knn_graph(d, 1)
        assert [tuple(e) for e in g.edges] == [(0, 1), (1, 2), (2, 3)]
        assert_allclose(g.weights, 1.0)

    def test_complete_graph(self, rng):
        d = distance_from_points(rng.standard_normal((2, 5)))
        g = knn_graph(d, 4)
        assert g.edges.shape[0] == 10

    def test_disconnected_reports_components(self):
        d = distance_from_points([[0.0, 1.0, 100.0, 101.0]])
        with pytest.raises(DisconnectedGraphError) as err:
            knn_graph(d, 1)
        assert sorted(err.value.components) == [[0, 1], [2, 3]]

    def test_restrict_to_largest_component(self):
        d = distance_from_points([[0.0, 1.0, 2.0, 100.0, 101.0]])
        g = knn_graph(d, 1, on_disconnect="largest")
        assert list(g.nodes) == [0, 1, 2]
        assert g.n_nodes == 3

    def test_k_bounds(self):
        d = distance_from_points([[0.0, 1.0]])
        with pytest.raises(ValidationError):
            knn_graph(d, 2)


class TestGeodesicDistances:
    def test_chain_path_sum(self):
        d = distance_from_points([[0.0, 1.0, 2.0, 3.0]])
        geo = geodesic_distances(knn_graph(d, 1))
        assert geo[0, 3] == pytest.approx(9.0)  # geodesic 3, squared

    def test_complete_graph_is_direct_distance(self, rng):
        x = rng.standard_normal((3, 6))
        d = distance_from_points(x)
        geo = geodesic_distances(knn_graph(d, 5))
        assert_allclose(geo, d, rtol=1e-12, atol=1e-12)

    def test_semicircle_against_brute_force(self):
        # exactly symmetric coordinates keep the adjacent-chord ties exact
        s = np.sqrt(2.0) / 2.0
        pts = np.array([[1.0, s, 0.0, -s, -1.0], [0.0, s, 1.0, s, 0.0]])
        d = distance_from_points(pts)
        for k in (1, 2):
            g = knn_graph(d, k)
            geo = geodesic_distances(g)
            for src, dst in itertools.combinations(range(5), 2):
                oracle = brute_force_shortest(5, g.edges, g.weights, src, dst)
                assert np.sqrt(geo[src, dst]) == pytest.approx(oracle, abs=1e-12)
        # adjacent chords chain (k=1): endpoint geodesic is 4 chords ~ 3.0615,
        # longer than the direct diameter chord 2
        chain = geodesic_distances(knn_graph(d, 1))
        assert np.sqrt(chain[0, 4]) == pytest.approx(4 * 2 * np.sin(np.pi / 8), abs=1e-12)
        assert np.sqrt(chain[0, 4]) > 2.0

    def test_geodesics_dominate_euclidean(self, rng):
        x = rng.standard_normal((4, 10))
        d = distance_from_points(x)
        geo = geodesic_distances(knn_graph(d, 3, on_disconnect="largest"))
        n = geo.shape[0]
        sub = d[np.ix_(range(n), range(n))]
        assert np.all(geo >= sub - 1e-10)


class TestIsomapEmbed:
    def test_complete_graph_equals_pca(self, rng):
        x = rng.standard_normal((6, 10))
        result = isomap_embed(points=x, k=9, components=[1, 2, 3])
        svd = compute_dual_svd(x - x.mean(axis=1, keepdims=True))
        pca_coords = svd.sample_basis[:, :3] * svd.singular_values[:3]
        # same subspace up to an orthogonal transform
        r, _, _, _ = np.linalg.lstsq(result.coords, pca_coords, rcond=None)
        u, _, vt = np.linalg.svd(result.coords.T @ pca_coords)
        rot = u @ vt
        assert np.linalg.norm(result.coords @ rot - pca_coords) < 1e-8

    def test_collinear_chain_recovers_spacing(self):
        x = np.array([[0.0, 1.0, 2.0, 4.0]])
        result = isomap_embed(points=x, k=1, components=[1])
        coords = result.coords[:, 0]
        gaps = np.abs(np.diff(coords))
        assert_allclose(gaps, [1.0, 1.0, 2.0], atol=1e-9)

    def test_two_points(self):
        x = np.array([[0.0, 3.0], [0.0, 4.0]])
        result = isomap_embed(points=x, k=1, components=[1, 2, 3])
        assert result.coords.shape == (2, 1)
        assert abs(result.coords[0, 0] - result.coords[1, 0]) == pytest.approx(5.0)

    def test_disconnected_propagates(self):
        x = np.array([[0.0, 1.0, 50.0, 51.0]])
        with pytest.raises(DisconnectedGraphError):
            isomap_embed(points=x, k=1)
        result = isomap_embed(points=x, k=1, on_disconnect="largest")
        assert result.coords.shape[0] == 2
