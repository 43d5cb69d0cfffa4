"""
Unit tests for graph utilities: Laplacians, incidence, quotients and partitions.
"""

import numpy as np
import pytest

from netred.errors import InvalidModelError
from netred.fixtures import EXAMPLE1_EDGES, SIX_NODE_EDGES, random_clustering, random_connected_graph, star
from netred.graph import (
    aep_output_matrix,
    build_laplacian,
    check_laplacian,
    incidence,
    is_almost_equitable,
    is_connected,
    leader_matrix,
    project_network,
    quotient_graph,
    realize_laplacian,
    soules_basis,
)
from netred.models import Clustering, WeightedGraph


class TestLaplacian:
    """Test cases for Laplacian construction and validation."""

    @pytest.fixture
    def graph(self):
        """Example graph with five vertices and seven edges."""
        return WeightedGraph(5, EXAMPLE1_EDGES)

    def test_adjacency_and_incidence_agree(self, graph):
        """Test that D - A equals R W R'."""
        np.testing.assert_allclose(
            build_laplacian(graph, "adjacency"),
            build_laplacian(graph, "incidence"),
        )

    def test_row_sums_and_diagonal(self, graph):
        """Test zero row sums and weighted degrees on the diagonal."""
        L = build_laplacian(graph)
        np.testing.assert_allclose(L.sum(axis=1), 0.0)
        assert L[0, 0] == pytest.approx(6.0)
        assert L[3, 4] == pytest.approx(-1.0)

    def test_unknown_method(self, graph):
        """Test that an unknown construction method is rejected."""
        with pytest.raises(InvalidModelError):
            build_laplacian(graph, "spectral")

    def test_incidence_orientation(self):
        """Test +1 at the smaller endpoint and -1 at the larger."""
        pair = incidence(WeightedGraph(3, ((1, 3, 2.0),)))
        np.testing.assert_array_equal(pair.R[:, 0], [1.0, 0.0, -1.0])
        np.testing.assert_array_equal(pair.W, [[2.0]])

    def test_check_recovers_graph(self, graph):
        """Test that a valid Laplacian yields its graph."""
        verdict = check_laplacian(build_laplacian(graph))
        assert verdict.valid_connected
        assert verdict.problems == []
        assert verdict.graph.edges == graph.edges

    def test_check_rejects_asymmetric(self):
        """Test that an asymmetric matrix is not a Laplacian."""
        verdict = check_laplacian(np.array([[1.0, -1.0], [-2.0, 2.0]]))
        assert not verdict.valid
        assert "not symmetric" in verdict.problems

    def test_check_rejects_positive_off_diagonal(self):
        """Test the sign pattern check."""
        L = np.array([[-1.0, 1.0], [1.0, -1.0]])
        verdict = check_laplacian(L)
        assert not verdict.sign_pattern
        assert not verdict.valid

    def test_check_flags_disconnected(self):
        """Test that a disconnected graph is valid but not connected."""
        L = build_laplacian(WeightedGraph(4, ((1, 2, 1.0), (3, 4, 1.0))))
        verdict = check_laplacian(L)
        assert verdict.valid
        assert not verdict.connected

    def test_check_rejects_non_square(self):
        """Test that non-square input raises."""
        with pytest.raises(InvalidModelError):
            check_laplacian(np.zeros((2, 3)))

    def test_check_reference_scale(self):
        """Test that round-off is judged against a reference norm when given."""
        L = np.array([[1e-16]])
        assert not check_laplacian(L).zero_row_sums
        verdict = check_laplacian(L, scale=10.0)
        assert verdict.valid_connected
        assert verdict.graph.m == 0

    def test_is_connected(self):
        """Test connectivity through networkx."""
        assert is_connected(star(3))
        assert not is_connected(WeightedGraph(3, ((1, 2, 1.0),)))


class TestInputOutputMatrices:
    """Test cases for leader and edge-output matrices."""

    def test_leader_matrix(self):
        """Test one unit column per leader."""
        F = leader_matrix(4, [2, 4])
        np.testing.assert_array_equal(F, [[0, 0], [1, 0], [0, 0], [0, 1]])

    def test_leader_out_of_range(self):
        """Test that leaders outside 1..n are rejected."""
        with pytest.raises(InvalidModelError):
            leader_matrix(3, [4])
        with pytest.raises(InvalidModelError):
            leader_matrix(3, [])

    def test_edge_output_factorizes_laplacian(self):
        """Test that H' H = L for the edge-difference output."""
        graph = WeightedGraph(5, EXAMPLE1_EDGES)
        H = aep_output_matrix(graph)
        np.testing.assert_allclose(H.T @ H, build_laplacian(graph))


class TestQuotientGraph:
    """Test cases for projection and quotient graphs."""

    def test_projection(self):
        """Test the projected matrices for a two-cluster partition."""
        graph = WeightedGraph(3, ((1, 2, 1.0), (2, 3, 2.0)))
        L = build_laplacian(graph)
        clustering = Clustering((1, 1, 2))
        M_hat, L_hat, F_hat, H_hat = project_network(clustering, np.eye(3), L, np.eye(3)[:, :1], np.eye(3))
        np.testing.assert_array_equal(M_hat, np.diag([2.0, 1.0]))
        np.testing.assert_allclose(L_hat, [[2.0, -2.0], [-2.0, 2.0]])
        np.testing.assert_array_equal(F_hat, [[1.0], [0.0]])
        assert H_hat.shape == (3, 2)

    def test_projection_size_mismatch(self):
        """Test that the clustering must cover the network."""
        with pytest.raises(InvalidModelError):
            project_network(Clustering((1, 2)), np.eye(3), np.zeros((3, 3)), np.ones((3, 1)), np.eye(3))

    def test_six_node_quotient(self):
        """Test merged crossings and summed weights."""
        graph = WeightedGraph(6, SIX_NODE_EDGES)
        clustering = Clustering.from_clusters([[1, 2], [3], [4], [5, 6]], 6)
        quotient = quotient_graph(graph, clustering)
        assert quotient.edges == ((1, 2), (1, 3), (2, 4), (3, 4))
        np.testing.assert_allclose(quotient.weights, [1.0, 2.0, 1.0, 1.0])
        assert quotient.origins[1] == ((1, 4), (2, 4))

    def test_quotient_laplacian_matches_projection(self):
        """Test that the quotient Laplacian equals Pi' L Pi."""
        graph = WeightedGraph(5, EXAMPLE1_EDGES)
        clustering = Clustering.from_clusters([[1, 2], [3, 5], [4]], 5)
        quotient = quotient_graph(graph, clustering)
        pi = clustering.matrix()
        np.testing.assert_allclose(quotient.laplacian(), pi.T @ build_laplacian(graph) @ pi)

    def test_quotient_weight_shape(self):
        """Test that weights must match the quotient edges."""
        quotient = quotient_graph(star(3), Clustering((1, 2, 2, 2)))
        with pytest.raises(InvalidModelError):
            quotient.laplacian(np.ones(3))

    def test_single_cluster_is_connected(self):
        """Test that one cluster gives an edgeless connected quotient."""
        quotient = quotient_graph(star(3), Clustering((1, 1, 1, 1)))
        assert quotient.kappa == 0


class TestAlmostEquitable:
    """Test cases for almost equitable partitions."""

    def test_star_leaves(self):
        """Test that center versus leaves is almost equitable."""
        verdict = is_almost_equitable(star(3), Clustering((1, 2, 2, 2)))
        assert verdict.is_aep
        assert verdict.worst_violation == 0.0

    def test_six_node_partition(self):
        """Test that vertices 1 and 2 see different weights into cluster {3}."""
        graph = WeightedGraph(6, SIX_NODE_EDGES)
        clustering = Clustering.from_clusters([[1, 2], [3], [4], [5, 6]], 6)
        verdict = is_almost_equitable(graph, clustering)
        assert not verdict.is_aep
        assert verdict.worst_violation == pytest.approx(1.0)

    def test_not_equitable(self):
        """Test a partition with unequal weights into another cluster."""
        graph = WeightedGraph(5, EXAMPLE1_EDGES)
        verdict = is_almost_equitable(graph, Clustering.from_clusters([[1, 2], [3, 5], [4]], 5))
        assert not verdict.is_aep
        assert verdict.worst_violation > 0


class TestRealizeLaplacian:
    """Test cases for Laplacians with a prescribed spectrum."""

    @pytest.mark.parametrize("r", [1, 2, 3, 5, 8])
    def test_soules_basis_orthogonal(self, r):
        """Test orthogonality and the uniform first column."""
        V = soules_basis(r)
        np.testing.assert_allclose(V.T @ V, np.eye(r), atol=1e-12)
        np.testing.assert_allclose(V[:, 0], 1.0 / np.sqrt(r))

    def test_spectrum_is_reproduced(self):
        """Test that the realized Laplacian has the requested eigenvalues."""
        spectrum = [0.0, 0.5, 2.0, 2.0, 7.0]
        realization = realize_laplacian(spectrum)
        np.testing.assert_allclose(np.linalg.eigvalsh(realization.L), spectrum, atol=1e-10)
        assert check_laplacian(realization.L).valid_connected

    def test_eigenvectors(self):
        """Test L = V diag(spectrum) V'."""
        realization = realize_laplacian([3.0, 0.0, 1.0])
        V = realization.V
        np.testing.assert_allclose(V @ np.diag(realization.spectrum) @ V.T, realization.L, atol=1e-12)

    def test_rejects_two_zeros(self):
        """Test that a disconnected spectrum is rejected."""
        with pytest.raises(InvalidModelError):
            realize_laplacian([0.0, 0.0, 1.0])

    def test_rejects_negative(self):
        """Test that negative eigenvalues are rejected."""
        with pytest.raises(InvalidModelError):
            realize_laplacian([0.0, -1.0])

    def test_rejects_complex(self):
        """Test that complex eigenvalues are rejected."""
        with pytest.raises(InvalidModelError):
            realize_laplacian(np.array([0.0, 1.0 + 1.0j]))


@pytest.mark.slow
class TestRandomGraphs:
    """Realization and projection on random instances."""

    def test_random_spectra(self, rng):
        """Test 100 random spectra with up to 20 eigenvalues."""
        for _ in range(100):
            r = int(rng.integers(2, 21))
            spectrum = np.concatenate([[0.0], rng.uniform(0.1, 10.0, r - 1)])
            realization = realize_laplacian(rng.permutation(spectrum))
            assert check_laplacian(realization.L).valid_connected
            np.testing.assert_allclose(np.linalg.eigvalsh(realization.L), np.sort(spectrum),
                                       rtol=1e-8, atol=1e-8 * spectrum.max())

    def test_projected_laplacians(self, rng):
        """Test that Pi' L Pi is a connected Laplacian for 1000 random clusterings."""
        for _ in range(1000):
            n = int(rng.integers(2, 16))
            L = build_laplacian(random_connected_graph(n, rng, int(rng.integers(0, n))))
            clustering = random_clustering(n, int(rng.integers(1, n + 1)), rng)
            pi = clustering.matrix()
            check = check_laplacian(pi.T @ L @ pi, scale=np.abs(L).sum(axis=1).max())
            assert check.valid_connected
            assert check.graph.n == clustering.r
