"""
Unit tests for dissimilarity-based clustering, projection and error bounds.
"""

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from netred.clustering import (
    aep_h2_error,
    aep_hinf_error,
    dissimilarity_matrix,
    dissimilarity_reduce,
    errbound_gamma,
    errbound_pseudo,
    hierarchical_cluster,
    reduce_by_clustering,
    residual_gain_system,
)
from netred.errors import InfeasibleError, InvalidModelError
from netred.fixtures import (
    example1 as make_example1,
    example1_partition,
    random_connected_graph,
    random_network,
    random_passive_subsystem,
    star,
)
from netred.graph import leader_matrix
from netred.linsys import h2_norm_semistable
from netred.models import Clustering, StateSpace, WeightedGraph
from netred.network import assemble, network_from_graph


EXAMPLE2_D = np.array([
    [0.0, 0.2494, 0.3154, 0.3919, 0.4142],
    [0.2494, 0.0, 0.2119, 0.3688, 0.3842],
    [0.3154, 0.2119, 0.0, 0.2410, 0.2394],
    [0.3919, 0.3688, 0.2410, 0.0, 0.0396],
    [0.4142, 0.3842, 0.2394, 0.0396, 0.0],
])


def damped_agent() -> StateSpace:
    """Scalar agent 1/(s + 1)."""
    return StateSpace([[-1.0]], [[1.0]], [[1.0]])


def greedy_clustering(D: np.ndarray, r: int, linkage: str) -> Clustering:
    """Merge the closest pair of clusters until r remain."""
    reduce = {"single": np.min, "complete": np.max, "average": np.mean}[linkage]
    clusters = [[v] for v in range(D.shape[0])]
    while len(clusters) > r:
        pairs = [(reduce(D[np.ix_(a, b)]), k, l)
                 for k, a in enumerate(clusters) for l, b in enumerate(clusters) if k < l]
        _, k, l = min(pairs)
        clusters[k] += clusters.pop(l)
    return Clustering.from_clusters([[v + 1 for v in c] for c in clusters], D.shape[0])


class TestDissimilarity:
    """Test cases for the dissimilarity matrix."""

    def test_example_values(self, example1):
        """Test the five-vertex dissimilarities to four digits."""
        dissim = dissimilarity_matrix(example1)
        assert dissim.method == "pseudo"
        np.testing.assert_allclose(dissim.D, EXAMPLE2_D, atol=5e-4)

    def test_paths_agree(self, example1):
        """Test that the pseudo-Gramian and Lyapunov paths coincide."""
        pseudo = dissimilarity_matrix(example1, method="pseudo")
        lyapunov = dissimilarity_matrix(example1, method="lyapunov")
        np.testing.assert_allclose(pseudo.D, lyapunov.D, atol=1e-6)

    def test_paths_agree_with_masses(self, example1):
        """Test agreement with a non-unit inertia."""
        net = example1.replace(M=np.array([1.0, 2.0, 0.5, 1.5, 1.0]))
        pseudo = dissimilarity_matrix(net, method="pseudo")
        lyapunov = dissimilarity_matrix(net, method="lyapunov")
        np.testing.assert_allclose(pseudo.D, lyapunov.D, atol=1e-6)

    def test_two_vertices(self):
        """Test D_12 = ||1/(s+2)||_2 = 1/2."""
        net = network_from_graph(WeightedGraph(2, ((1, 2, 1.0),)), leader_matrix(2, [1]))
        assert dissimilarity_matrix(net).D[0, 1] == pytest.approx(0.5, rel=1e-9)

    def test_zero_input(self, example1):
        """Test that a network without input has zero dissimilarities."""
        net = example1.replace(F=np.zeros((5, 1)))
        np.testing.assert_allclose(dissimilarity_matrix(net).D, 0.0, atol=1e-12)

    def test_properties(self, passive_agent):
        """Test symmetry, zero diagonal and nonnegativity for agent dynamics."""
        D = dissimilarity_matrix(make_example1(passive_agent)).D
        np.testing.assert_allclose(D, D.T)
        np.testing.assert_array_equal(np.diag(D), 0.0)
        assert D.min() >= 0.0

    def test_multi_output_blocks(self, rng):
        """Test block traces against per-pair H2 norms for two-port agents."""
        agent = random_passive_subsystem(2, rng, ports=2)
        net = random_network(5, rng, inputs=2, extra_edges=2, subsystem=agent)
        D = dissimilarity_matrix(net, method="lyapunov").D
        full = assemble(net)
        for i, j in ((0, 1), (0, 4), (2, 3)):
            diff = np.zeros((1, 5))
            diff[0, i], diff[0, j] = 1.0, -1.0
            pair = StateSpace(full.A, full.B, np.kron(diff, agent.C))
            assert D[i, j] == pytest.approx(h2_norm_semistable(pair).value, rel=1e-6)

    def test_pseudo_needs_integrators(self, passive_agent):
        """Test that the pseudo-Gramian path is rejected for general agents."""
        with pytest.raises(InvalidModelError):
            dissimilarity_matrix(make_example1(passive_agent), method="pseudo")

    def test_csv_rows(self, example1):
        """Test nine-digit formatting."""
        rows = dissimilarity_matrix(example1).to_csv_rows()
        assert len(rows) == 5
        assert rows[0][0] == "0"


class TestHierarchicalClustering:
    """Test cases for agglomerative clustering."""

    def test_first_merge(self):
        """Test that vertices 4 and 5 merge first."""
        clustering, dendrogram = hierarchical_cluster(EXAMPLE2_D, 4)
        assert dendrogram.merges[0][:2] == (4, 5)
        assert clustering == Clustering.from_clusters([[1], [2], [3], [4, 5]], 5)

    def test_three_clusters(self):
        """Test the coarser clustering {1}, {2, 3}, {4, 5}."""
        clustering, dendrogram = hierarchical_cluster(EXAMPLE2_D, 3)
        assert clustering == Clustering.from_clusters([[1], [2, 3], [4, 5]], 5)
        assert [m[:2] for m in dendrogram.merges] == [(4, 5), (2, 3)]

    def test_full_dendrogram_ids(self):
        """Test that merged clusters get ids n + k."""
        _, dendrogram = hierarchical_cluster(EXAMPLE2_D, 1)
        assert len(dendrogram.merges) == 4
        ids = {a for a, _, _ in dendrogram.merges} | {b for _, b, _ in dendrogram.merges}
        assert {6, 7, 8} <= ids
        data = dendrogram.to_dict()
        assert data['n'] == 5 and len(data['merges']) == 4

    def test_identity_when_r_equals_n(self):
        """Test that r = n merges nothing."""
        clustering, dendrogram = hierarchical_cluster(EXAMPLE2_D, 5)
        assert clustering == Clustering.identity(5)
        assert dendrogram.merges == []

    def test_linkages(self):
        """Test single and complete linkage on a chain."""
        D = np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 2.0], [4.0, 2.0, 0.0]])
        for linkage in ("single", "complete", "average"):
            clustering, _ = hierarchical_cluster(D, 2, linkage)
            assert clustering == Clustering((1, 1, 2))

    def test_tie_break(self):
        """Test that equal values merge the lexicographically smallest pair."""
        D = np.ones((3, 3)) - np.eye(3)
        clustering, _ = hierarchical_cluster(D, 2)
        assert clustering == Clustering((1, 1, 2))

    def test_matches_greedy_merging(self, rng):
        """Test every cut against plain greedy merging on untied data."""
        points = rng.standard_normal((12, 3))
        D = squareform(pdist(points))
        for linkage in ("single", "complete", "average"):
            for r in range(1, 13):
                clustering, dendrogram = hierarchical_cluster(D, r, linkage)
                assert clustering == greedy_clustering(D, r, linkage)
                assert len(dendrogram.merges) == 12 - r

    def test_merge_values_nondecreasing(self, rng):
        """Test that linkage values grow along the dendrogram."""
        D = squareform(pdist(rng.standard_normal((30, 2))))
        _, dendrogram = hierarchical_cluster(D, 1)
        values = [v for _, _, v in dendrogram.merges]
        assert values == sorted(values)
        used = sorted(i for a, b, _ in dendrogram.merges for i in (a, b))
        assert used == list(range(1, 59))

    def test_single_vertex(self):
        """Test the one-vertex matrix."""
        clustering, dendrogram = hierarchical_cluster(np.zeros((1, 1)), 1)
        assert clustering == Clustering((1,))
        assert dendrogram.merges == []

    @pytest.mark.slow
    def test_large_matrix(self, rng):
        """Test a 500-vertex matrix cut into ten clusters."""
        D = squareform(pdist(rng.standard_normal((500, 3))))
        clustering, dendrogram = hierarchical_cluster(D, 10)
        assert clustering.r == 10
        assert len(dendrogram.merges) == 490

    def test_invalid_inputs(self):
        """Test validation of r, linkage and the matrix."""
        with pytest.raises(InvalidModelError):
            hierarchical_cluster(EXAMPLE2_D, 0)
        with pytest.raises(InvalidModelError):
            hierarchical_cluster(EXAMPLE2_D, 2, "ward")
        with pytest.raises(InvalidModelError):
            hierarchical_cluster(-EXAMPLE2_D, 2)


class TestReduceByClustering:
    """Test cases for projection onto a clustering."""

    def test_reduced_structure(self, example1):
        """Test the projected matrices and the retained steady state."""
        reduction = reduce_by_clustering(example1, example1_partition())
        reduced = reduction.reduced
        assert reduced.n == 3
        np.testing.assert_allclose(reduced.M, np.diag([2.0, 2.0, 1.0]))
        np.testing.assert_allclose(reduced.F, [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        assert reduction.steady_state_match is True
        assert reduction.h2_error > 0
        assert reduction.hinf_error > 0

    def test_identity_clustering_is_exact(self, example1):
        """Test that the trivial clustering has zero H2 error."""
        reduction = reduce_by_clustering(example1, Clustering.identity(5))
        assert reduction.h2_error == pytest.approx(0.0, abs=1e-6)

    def test_single_cluster_random_weights(self, rng):
        """Test projection onto one cluster for non-integer edge weights."""
        for _ in range(20):
            n = int(rng.integers(3, 12))
            net = network_from_graph(random_connected_graph(n, rng, extra_edges=2),
                                     rng.standard_normal((n, 1)))
            reduction = reduce_by_clustering(net, Clustering((1,) * n))
            assert reduction.reduced.n == 1
            np.testing.assert_array_equal(reduction.reduced.L, [[0.0]])
            assert reduction.steady_state_match is True

    def test_agents_are_kept(self, passive_agent):
        """Test that projection keeps the agent dynamics."""
        net = make_example1(passive_agent)
        reduction = reduce_by_clustering(net, example1_partition())
        assert reduction.reduced.subsystem is passive_agent
        assert reduction.steady_state_match is None
        assert reduction.h2_error is not None

    def test_dissimilarity_reduce(self, example1):
        """Test the full dissimilarity pipeline at r = 3."""
        reduction, dissim, dendrogram = dissimilarity_reduce(example1, 3)
        assert reduction.clustering == Clustering.from_clusters([[1], [2, 3], [4, 5]], 5)
        assert dissim.D.shape == (5, 5)
        assert len(dendrogram.merges) == 2

    def test_non_synchronizing(self):
        """Test that a non-synchronizing network is rejected."""
        oscillator = StateSpace([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
        with pytest.raises(InfeasibleError):
            reduce_by_clustering(make_example1(oscillator), example1_partition())


class TestErrorBounds:
    """Test cases for a-priori clustering error bounds."""

    def test_pseudo_bound_holds(self, example1):
        """Test that the pseudo-Gramian bound dominates the actual error."""
        for clusters in ([[1, 2], [3, 5], [4]], [[1], [2, 3], [4, 5]], [[1, 2, 3], [4, 5]]):
            bound = errbound_pseudo(example1, Clustering.from_clusters(clusters, 5))
            assert bound.actual <= bound.bound * (1 + 1e-6)

    def test_pseudo_bound_zero_for_identity(self, example1):
        """Test that the trivial clustering has a zero bound."""
        bound = errbound_pseudo(example1, Clustering.identity(5))
        assert bound.bound == pytest.approx(0.0, abs=1e-8)

    def test_residual_gain_system_single_cluster(self, example1):
        """Test the static residual map for one cluster."""
        sys = residual_gain_system(example1, Clustering((1, 1, 1, 1, 1)))
        assert sys.order == 0
        assert sys.inputs == 4

    def test_gamma_bound_holds(self):
        """Test the LMI-based bound for strictly passive scalar agents."""
        net = make_example1(damped_agent())
        bound = errbound_gamma(net, example1_partition())
        assert bound.gamma > 0
        assert bound.actual <= bound.bound * (1 + 1e-6)

    def test_gamma_bound_needs_strict_passivity(self, example1):
        """Test that single integrators (A + A' = 0) are rejected."""
        with pytest.raises(InfeasibleError, match="A \\+ A'"):
            errbound_gamma(example1, example1_partition())

    def test_gamma_bound_needs_identity_output(self):
        """Test that H must be the identity."""
        net = make_example1(damped_agent())
        net = net.replace(H=np.ones((1, 5)))
        with pytest.raises(InfeasibleError, match="H = I"):
            errbound_gamma(net, example1_partition())


class TestAlmostEquitableErrors:
    """Test cases for closed-form errors of almost equitable partitions."""

    def test_star_h2_ratio(self):
        """Test the relative H2 error 8/9 of merging the leaves of K1,3."""
        error = aep_h2_error(star(3), Clustering((1, 2, 2, 2)), [2])
        assert error.formula == pytest.approx(8.0 / 9.0)
        assert error.direct == pytest.approx(8.0 / 9.0, rel=1e-6)

    def test_star_hinf(self):
        """Test the H-infinity error sqrt(2/3) with output L."""
        error = aep_hinf_error(star(3), Clustering((1, 2, 2, 2)), [2])
        assert error.formula == pytest.approx(np.sqrt(2.0 / 3.0))
        assert error.direct == pytest.approx(np.sqrt(2.0 / 3.0), rel=1e-4)

    def test_leaders_in_one_cluster(self):
        """Test that two leaders in the same cluster give an H-infinity error of one."""
        error = aep_hinf_error(star(3), Clustering((1, 2, 2, 2)), [2, 3])
        assert error.formula == pytest.approx(1.0)

    def test_requires_aep(self, example1):
        """Test that a partition that is not almost equitable is rejected."""
        with pytest.raises(InfeasibleError, match="almost equitable"):
            aep_h2_error(example1.graph, example1_partition(), [1])

    @pytest.mark.parametrize("n, clusters, leaders, h2, hinf", [
        (6, [[1], [2, 6], [3, 5], [4]], [2], 0.6, np.sqrt(0.5)),
        (8, [[1, 5], [2, 6], [3, 7], [4, 8]], [1, 2], 4.0 / 7.0, np.sqrt(0.5)),
        (8, [[1, 5], [2, 6], [3, 7], [4, 8]], [3], 4.0 / 7.0, np.sqrt(0.5)),
    ])
    def test_cycle_partitions(self, n, clusters, leaders, h2, hinf):
        """Test mirror and antipodal partitions of cycles against direct computation."""
        graph = WeightedGraph(n, tuple((i, i % n + 1, 1.0) for i in range(1, n + 1)))
        clustering = Clustering.from_clusters(clusters, n)
        h2_error = aep_h2_error(graph, clustering, leaders)
        assert h2_error.formula == pytest.approx(h2)
        assert h2_error.direct == pytest.approx(h2, rel=1e-6)
        hinf_error = aep_hinf_error(graph, clustering, leaders)
        assert hinf_error.formula == pytest.approx(hinf)
        assert hinf_error.direct == pytest.approx(hinf, rel=1e-5)
