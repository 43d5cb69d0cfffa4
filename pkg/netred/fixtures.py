"""
Worked examples and random instance generators.
The worked examples are shipped through the `fixtures` command and used by
the test suite; the generators build seeded random networks.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from netred.graph import leader_matrix
from netred.io import save_model, save_partition, write_json
from netred.models import Clustering, NetworkSystem, StateSpace, WeightedGraph
from netred.network import network_from_graph


logger = logging.getLogger(__name__)


EXAMPLE1_EDGES = ((1, 2, 3.0), (2, 3, 1.0), (1, 4, 2.0), (1, 5, 1.0), (3, 4, 2.0), (3, 5, 3.0), (4, 5, 1.0))

SIX_NODE_EDGES = ((1, 2, 1.0), (2, 3, 1.0), (1, 4, 1.0), (2, 4, 1.0), (3, 5, 1.0), (4, 6, 1.0), (5, 6, 1.0))


def example1(subsystem: Optional[StateSpace] = None) -> NetworkSystem:
    """Five-vertex mass-damper network with M = I, H = I and inputs at vertices 1 and 4."""
    F = np.zeros((5, 2))
    F[0, 0] = 1.0
    F[3, 1] = 1.0
    net = network_from_graph(WeightedGraph(5, EXAMPLE1_EDGES), F, subsystem=subsystem)
    net.metadata['name'] = 'example1'
    return net


def example1_partition() -> Clustering:
    return Clustering.from_clusters([[1, 2], [3, 5], [4]], 5)


def six_node() -> NetworkSystem:
    """Six-vertex unit-weight network with the input at vertex 3 and the output at vertex 4."""
    F = np.zeros((6, 1))
    F[2, 0] = 1.0
    H = np.zeros((1, 6))
    H[0, 3] = 1.0
    net = network_from_graph(WeightedGraph(6, SIX_NODE_EDGES), F, H)
    net.metadata['name'] = 'six_node'
    return net


def six_node_partition() -> Clustering:
    return Clustering.from_clusters([[1, 2], [3], [4], [5, 6]], 6)


def star(leaves: int = 3) -> WeightedGraph:
    """Unit-weight star with center 1."""
    return WeightedGraph(leaves + 1, tuple((1, j, 1.0) for j in range(2, leaves + 2)))


def star_network(leaves: int = 3, leaders: Optional[List[int]] = None) -> NetworkSystem:
    """Star network driven at the given leaders (the first leaf by default)."""
    graph = star(leaves)
    net = network_from_graph(graph, leader_matrix(graph.n, leaders or [2]))
    net.metadata['name'] = 'star'
    return net


def random_connected_graph(
    n: int,
    rng: np.random.Generator,
    extra_edges: int = 0,
    weight_range=(0.5, 3.0),
) -> WeightedGraph:
    """
    Random spanning tree plus extra_edges random chords.

    Args:
        n: Number of vertices
        rng: Seeded generator
        extra_edges: Chords added on top of the tree
        weight_range: Uniform weight interval

    Returns:
        Connected WeightedGraph
    """
    lo, hi = weight_range
    pairs = {}
    order = rng.permutation(n) + 1
    for pos in range(1, n):
        parent = order[rng.integers(0, pos)]
        child = order[pos]
        pairs[(min(parent, child), max(parent, child))] = float(rng.uniform(lo, hi))
    candidates = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if (i, j) not in pairs]
    if candidates and extra_edges:
        picks = rng.choice(len(candidates), size=min(extra_edges, len(candidates)), replace=False)
        for idx in picks:
            pairs[candidates[idx]] = float(rng.uniform(lo, hi))
    return WeightedGraph(n, tuple((i, j, w) for (i, j), w in pairs.items()))


def random_tree(n: int, rng: np.random.Generator, weight_range=(0.5, 3.0)) -> WeightedGraph:
    return random_connected_graph(n, rng, 0, weight_range)


def random_passive_subsystem(order: int, rng: np.random.Generator, ports: int = 1) -> StateSpace:
    """
    Random agent with A + A' < 0 and B = C', so K = I certifies passivity.

    Args:
        order: State dimension
        rng: Seeded generator
        ports: Number of inputs (equal to the number of outputs)

    Returns:
        StateSpace
    """
    G = rng.standard_normal((order, order))
    S = rng.standard_normal((order, order))
    A = -(G @ G.T / order + 0.5 * np.eye(order)) + (S - S.T) / 2
    B = rng.standard_normal((order, ports))
    return StateSpace(A, B, B.T)


def random_network(
    n: int,
    rng: np.random.Generator,
    inputs: int = 1,
    outputs: Optional[int] = None,
    extra_edges: int = 0,
    subsystem: Optional[StateSpace] = None,
    masses: bool = False,
) -> NetworkSystem:
    """
    Random connected network with random input and output matrices.

    Args:
        n: Number of vertices
        rng: Seeded generator
        inputs: Columns of F
        outputs: Rows of H (identity output when omitted)
        extra_edges: Chords added to the random spanning tree
        subsystem: Agent dynamics (single integrator when omitted)
        masses: Draw a random positive diagonal M instead of I

    Returns:
        NetworkSystem
    """
    graph = random_connected_graph(n, rng, extra_edges)
    F = rng.standard_normal((n, inputs))
    H = None if outputs is None else rng.standard_normal((outputs, n))
    M = rng.uniform(0.5, 2.0, n) if masses else None
    return network_from_graph(graph, F, H, M, subsystem)


def random_clustering(n: int, r: int, rng: np.random.Generator) -> Clustering:
    """Random partition of n vertices into exactly r nonempty clusters."""
    order = rng.permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[order[:r]] = np.arange(1, r + 1)
    assignment[order[r:]] = rng.integers(1, r + 1, size=n - r)
    clusters = [np.flatnonzero(assignment == k) + 1 for k in range(1, r + 1)]
    return Clustering.from_clusters(clusters, n)


def write_fixtures(directory) -> Dict[str, str]:
    """
    Write the worked examples as model and partition files.

    Args:
        directory: Output directory (created when missing)

    Returns:
        Mapping of fixture name to written path
    """
    directory = Path(directory)
    written = {
        'example1': save_model(example1(), directory / 'example1.json'),
        'example1_partition': save_partition(example1_partition(), directory / 'example1_partition.json'),
        'six_node': save_model(six_node(), directory / 'six_node.json'),
        'six_node_partition': save_partition(six_node_partition(), directory / 'six_node_partition.json'),
        'star': save_model(star_network(), directory / 'star.json'),
    }
    written['index'] = write_json(directory / 'index.json', {'fixtures': sorted(written)})
    logger.info(f"Wrote {len(written)} fixture files to {directory}")
    return written
