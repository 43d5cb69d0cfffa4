"""
Graph core: Laplacians, incidence matrices, clusterings and quotient graphs.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from netred.config import Tolerances, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError
from netred.models import Clustering, WeightedGraph, as_matrix


logger = logging.getLogger(__name__)


@dataclass
class IncidencePair:
    """
    Oriented incidence matrix and edge weights, L = R W R'.

    Attributes:
        R: n x m incidence matrix, +1 at the smaller endpoint, -1 at the larger
        W: m x m diagonal weight matrix
    """
    R: np.ndarray
    W: np.ndarray


@dataclass
class LaplacianCheck:
    """
    Verdict of check_laplacian.

    Attributes:
        symmetric_psd: L is symmetric positive semidefinite
        zero_row_sums: L 1 = 0
        sign_pattern: Non-positive off-diagonals and positive diagonal
        connected: The zero eigenvalue is simple
        graph: The unique graph with this Laplacian, when valid
        problems: Human-readable reasons for every failed condition
    """
    symmetric_psd: bool
    zero_row_sums: bool
    sign_pattern: bool
    connected: bool
    graph: Optional[WeightedGraph] = None
    problems: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.symmetric_psd and self.zero_row_sums and self.sign_pattern

    @property
    def valid_connected(self) -> bool:
        return self.valid and self.connected


@dataclass
class QuotientGraph:
    """
    Graph whose vertices are clusters.

    Attributes:
        r: Number of clusters
        edges: Quotient edges (k, l), 1-based with k < l, lexicographic
        R_hat: r x kappa incidence matrix of the quotient edges
        weights: Summed weight of the original edges crossing each quotient edge
        origins: Original edges (i, j) aggregated into each quotient edge
    """
    r: int
    edges: Tuple[Tuple[int, int], ...]
    R_hat: np.ndarray
    weights: np.ndarray
    origins: Tuple[Tuple[Tuple[int, int], ...], ...]

    @property
    def kappa(self) -> int:
        return len(self.edges)

    def laplacian(self, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Laplacian R_hat diag(w) R_hat' of the quotient with the given edge weights.

        Args:
            weights: Positive weights per quotient edge (aggregated weights when omitted)

        Returns:
            r x r Laplacian
        """
        w = self.weights if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (self.kappa,):
            raise InvalidModelError(f"Expected {self.kappa} quotient weights, got {w.shape}")
        return (self.R_hat * w) @ self.R_hat.T


@dataclass
class AepVerdict:
    """
    Result of the almost-equitable-partition test.

    Attributes:
        is_aep: Whether every vertex of a cluster has the same weight into every other cluster
        worst_violation: Largest spread of those weights
    """
    is_aep: bool
    worst_violation: float


@dataclass
class LaplacianRealization:
    """
    Laplacian with a prescribed spectrum.

    Attributes:
        L: r x r Laplacian of a connected graph
        V: Orthogonal basis with first column 1/sqrt(r) and L = V diag(spectrum) V'
        spectrum: Ascending eigenvalues, the first one zero
    """
    L: np.ndarray
    V: np.ndarray
    spectrum: np.ndarray


def incidence(graph: WeightedGraph) -> IncidencePair:
    """
    Oriented incidence matrix with lexicographic edge order.

    Args:
        graph: Weighted graph

    Returns:
        IncidencePair (R, W)
    """
    R = np.zeros((graph.n, graph.m))
    for e, (i, j, _) in enumerate(graph.edges):
        R[i - 1, e] = 1.0
        R[j - 1, e] = -1.0
    return IncidencePair(R=R, W=np.diag(graph.weights))


def build_laplacian(graph: WeightedGraph, method: str = "adjacency") -> np.ndarray:
    """
    Graph Laplacian L = D - A.

    Args:
        graph: Weighted graph
        method: 'adjacency' (degree minus adjacency) or 'incidence' (R W R')

    Returns:
        Symmetric n x n Laplacian
    """
    if method == "incidence":
        pair = incidence(graph)
        return pair.R @ pair.W @ pair.R.T
    if method != "adjacency":
        raise InvalidModelError(f"Unknown Laplacian method '{method}'")
    adj = graph.adjacency()
    return np.diag(adj.sum(axis=1)) - adj


def aep_output_matrix(graph: WeightedGraph) -> np.ndarray:
    """Edge-difference output W^{1/2} R'."""
    pair = incidence(graph)
    return np.sqrt(pair.W) @ pair.R.T


def leader_matrix(n: int, leaders: Sequence[int]) -> np.ndarray:
    """
    Binary input matrix with one column per leader.

    Args:
        n: Number of vertices
        leaders: 1-based leader vertices

    Returns:
        n x len(leaders) matrix
    """
    if not leaders:
        raise InvalidModelError("At least one leader is required")
    F = np.zeros((n, len(leaders)))
    for col, v in enumerate(leaders):
        if not 1 <= int(v) <= n:
            raise InvalidModelError(f"Leader {v} out of range 1..{n}")
        F[int(v) - 1, col] = 1.0
    return F


def check_laplacian(L, tol: Optional[Tolerances] = None, scale: Optional[float] = None) -> LaplacianCheck:
    """
    Decide whether a matrix is the Laplacian of an undirected weighted graph.

    Checks symmetry with positive semidefiniteness, zero row sums and the
    sign pattern (non-positive off-diagonals, positive diagonal). When all
    hold the graph is read off the off-diagonal entries.

    Args:
        L: Square matrix
        tol: Tolerances (relative to the infinity norm of L)
        scale: Reference norm for the tolerances, for matrices derived from a larger Laplacian

    Returns:
        LaplacianCheck verdict
    """
    tol = tol or default_tolerances()
    L = as_matrix(L, "L")
    n = L.shape[0]
    if L.shape != (n, n):
        raise InvalidModelError(f"Laplacian must be square, got {L.shape}")

    own = float(np.abs(L).sum(axis=1).max(initial=0.0))
    scale = max(own, 0.0 if scale is None else float(scale), np.finfo(float).tiny)
    eps = tol.laplacian * scale
    problems = []

    symmetric = np.abs(L - L.T).max() <= eps
    sym = (L + L.T) / 2
    eigs = np.linalg.eigvalsh(sym)
    symmetric_psd = bool(symmetric and eigs[0] >= -eps)
    if not symmetric:
        problems.append("not symmetric")
    elif not symmetric_psd:
        problems.append(f"not positive semidefinite (min eigenvalue {eigs[0]:.3e})")

    zero_row_sums = bool(np.abs(L.sum(axis=1)).max() <= eps)
    if not zero_row_sums:
        problems.append("row sums are not zero")

    off = L - np.diag(np.diag(L))
    sign_pattern = bool(off.max(initial=0.0) <= eps and (n == 1 or np.diag(L).min() > eps))
    if not sign_pattern:
        problems.append("off-diagonal entries must be non-positive and diagonal positive")

    connected = bool(n == 1 or (symmetric_psd and eigs[1] > eps))
    if not connected:
        problems.append("zero eigenvalue is not simple (graph disconnected)")

    verdict = LaplacianCheck(symmetric_psd, zero_row_sums, sign_pattern, connected, problems=problems)
    if verdict.valid:
        edges = [
            (i + 1, j + 1, float(-sym[i, j]))
            for i in range(n) for j in range(i + 1, n)
            if -sym[i, j] > eps
        ]
        verdict.graph = WeightedGraph(n, tuple(edges))
    else:
        logger.debug(f"Laplacian check failed: {', '.join(problems)}")
    return verdict


def is_connected(graph: WeightedGraph) -> bool:
    """Connectivity of a weighted graph."""
    nxg = nx.Graph()
    nxg.add_nodes_from(range(1, graph.n + 1))
    nxg.add_edges_from((i, j) for i, j, _ in graph.edges)
    return nx.is_connected(nxg)


def project_network(
    clustering: Clustering,
    M: np.ndarray,
    L: np.ndarray,
    F: np.ndarray,
    H: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Clustering-based Petrov-Galerkin projection.

    Args:
        clustering: Partition with characteristic matrix Pi
        M, L, F, H: Network matrices

    Returns:
        (Pi' M Pi, Pi' L Pi, Pi' F, H Pi)
    """
    if clustering.n != L.shape[0]:
        raise InvalidModelError(f"Clustering covers {clustering.n} vertices, network has {L.shape[0]}")
    pi = clustering.matrix()
    return pi.T @ M @ pi, pi.T @ L @ pi, pi.T @ F, H @ pi


def quotient_graph(graph: WeightedGraph, clustering: Clustering) -> QuotientGraph:
    """
    Quotient graph of a clustering.

    Two clusters are adjacent iff some original edge crosses them; parallel
    crossings are merged and their weights summed. R_hat equals Pi' R with
    zero columns removed and parallel columns merged.

    Args:
        graph: Original weighted graph
        clustering: Vertex partition

    Returns:
        QuotientGraph
    """
    if clustering.n != graph.n:
        raise InvalidModelError(f"Clustering covers {clustering.n} vertices, graph has {graph.n}")
    crossing = {}
    for i, j, w in graph.edges:
        ki, kj = clustering.assignment[i - 1], clustering.assignment[j - 1]
        if ki == kj:
            continue
        key = (min(ki, kj), max(ki, kj))
        total, origins = crossing.get(key, (0.0, []))
        crossing[key] = (total + w, origins + [(i, j)])

    # Quotient edges in lexicographic order
    edges = tuple(sorted(crossing))
    r = clustering.r
    R_hat = np.zeros((r, len(edges)))
    for e, (k, l) in enumerate(edges):
        R_hat[k - 1, e] = 1.0
        R_hat[l - 1, e] = -1.0
    weights = np.array([crossing[e][0] for e in edges], dtype=float)
    origins = tuple(tuple(crossing[e][1]) for e in edges)

    quotient = WeightedGraph(r, tuple((k, l, w) for (k, l), w in zip(edges, weights)))
    if not is_connected(quotient):
        raise InfeasibleError("Quotient graph is disconnected")
    return QuotientGraph(r=r, edges=edges, R_hat=R_hat, weights=weights, origins=origins)


def is_almost_equitable(
    graph: WeightedGraph,
    clustering: Clustering,
    tol: Optional[Tolerances] = None,
) -> AepVerdict:
    """
    Almost equitable partition test.

    A partition is almost equitable when, for every pair of distinct clusters
    (mu, nu), every vertex of C_mu has the same total weight into C_nu.

    Args:
        graph: Weighted graph
        clustering: Vertex partition

    Returns:
        AepVerdict with the worst spread found
    """
    tol = tol or default_tolerances()
    into = graph.adjacency() @ clustering.matrix()
    worst = 0.0
    for mu in range(1, clustering.r + 1):
        rows = into[clustering.members(mu)]
        spread = rows.max(axis=0) - rows.min(axis=0)
        spread[mu - 1] = 0.0
        worst = max(worst, float(spread.max(initial=0.0)))
    return AepVerdict(is_aep=worst <= tol.aep, worst_violation=worst)


def soules_basis(r: int) -> np.ndarray:
    """
    Orthogonal Soules basis for the uniform vector.

    Columns come from a nested sequence of bisections: column 1 is
    1/sqrt(r) and each later column splits one current block in two,
    constant and positive on one half, constant and negative on the other.
    V diag(d) V' is entrywise nonnegative for any nonincreasing d >= 0.

    Args:
        r: Dimension

    Returns:
        r x r orthogonal matrix
    """
    V = np.zeros((r, r))
    V[:, 0] = 1.0 / np.sqrt(r)
    blocks = [list(range(r))]
    col = 1
    while col < r:
        # split the largest remaining block, earliest first
        idx = max(range(len(blocks)), key=lambda b: (len(blocks[b]), -b))
        block = blocks.pop(idx)
        half = (len(block) + 1) // 2
        first, second = block[:half], block[half:]
        a, b = len(first), len(second)
        V[first, col] = np.sqrt(b / (a * (a + b)))
        V[second, col] = -np.sqrt(a / (b * (a + b)))
        blocks[idx:idx] = [p for p in (first, second) if len(p) > 1]
        col += 1
    return V


def realize_laplacian(spectrum: Sequence[float], tol: Optional[Tolerances] = None) -> LaplacianRealization:
    """
    Laplacian of a connected graph with a prescribed spectrum.

    With c the largest eigenvalue, N = V diag(c - lambda) V' is nonnegative
    for a Soules basis V, so c I - N is a Laplacian with the given eigenvalues.

    Args:
        spectrum: Real eigenvalues, exactly one zero and the rest positive

    Returns:
        LaplacianRealization
    """
    tol = tol or default_tolerances()
    values = np.asarray(spectrum)
    if np.iscomplexobj(values):
        if np.abs(values.imag).max(initial=0.0) > 0:
            raise InvalidModelError("Spectrum must be real")
        values = values.real
    values = np.sort(values.astype(float).ravel())
    if values.size == 0:
        raise InvalidModelError("Spectrum is empty")
    scale = max(abs(values[-1]), 1.0)
    zero = np.abs(values) <= tol.laplacian * scale
    if values[0] < -tol.laplacian * scale or zero.sum() != 1:
        raise InvalidModelError(
            f"Spectrum needs exactly one zero and positive others, got {values.tolist()}"
        )
    values[0] = 0.0

    r = values.size
    V = soules_basis(r)
    c = values[-1]
    N = (V * (c - values)) @ V.T
    L = c * np.eye(r) - N
    L = (L + L.T) / 2
    # Drop roundoff-positive off-diagonals and restore zero row sums
    off = L - np.diag(np.diag(L))
    off[off > 0] = 0.0
    L = off - np.diag(off.sum(axis=1))
    return LaplacianRealization(L=L, V=V, spectrum=values)
