"""
Clustering-based reduction.
Pairwise dissimilarities, hierarchical clustering, projection onto a
clustering and a-priori error bounds.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.cluster import hierarchy
from scipy.spatial.distance import squareform

from netred.config import Tolerances, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError
from netred.graph import (
    QuotientGraph,
    aep_output_matrix,
    build_laplacian,
    check_laplacian,
    is_almost_equitable,
    leader_matrix,
    project_network,
    quotient_graph,
)
from netred.linsys import (
    h2_norm_semistable,
    hinf_norm,
    lmi_gamma_bisect,
    pseudo_gramians,
    solve_lyapunov,
)
from netred.models import Clustering, NetworkSystem, StateSpace, WeightedGraph
from netred.network import (
    assemble,
    decompose,
    disagreement_basis,
    network_from_graph,
    network_h2_error,
    network_hinf_error,
    require_synchronization,
    steady_output,
    validate_network,
)


logger = logging.getLogger(__name__)

LINKAGES = ("average", "single", "complete")


@dataclass
class DissimilarityMatrix:
    """
    Pairwise H2 dissimilarities between vertex behaviours.

    Attributes:
        D: Symmetric n x n matrix with zero diagonal
        method: 'pseudo' (pseudo Gramian, single integrators) or 'lyapunov' (general)
    """
    D: np.ndarray
    method: str

    def to_csv_rows(self) -> List[List[str]]:
        """Rows of the matrix with 9 significant digits."""
        return [[f"{v:.9g}" for v in row] for row in self.D]


@dataclass
class Dendrogram:
    """
    Merge history of hierarchical clustering.

    Vertices are ids 1..n; the cluster created by the k-th merge gets id n + k.

    Attributes:
        n: Number of vertices
        merges: (a, b, linkage value) per merge, in order
    """
    n: int
    merges: List[Tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'merges': [{'a': a, 'b': b, 'value': v} for a, b, v in self.merges]
        }


@dataclass
class ClusterReduction:
    """
    Reduced network obtained by projecting onto a clustering.

    Attributes:
        reduced: Reduced network (M_hat, L_hat, F_hat, H_hat, same agents)
        clustering: The clustering used
        h2_error: H2 norm of G - G_hat, None when undefined
        hinf_error: H-infinity norm of G - G_hat, None when undefined
        steady_state_match: Steady outputs agree (single integrators only)
        quotient: Quotient graph when the original graph is known
    """
    reduced: NetworkSystem
    clustering: Clustering
    h2_error: Optional[float]
    hinf_error: Optional[float] = None
    steady_state_match: Optional[bool] = None
    quotient: Optional[QuotientGraph] = None


@dataclass
class ErrorBound:
    """
    A-priori error bound of a clustering.

    Attributes:
        gamma: Gain entering the bound
        bound: Value of the bound
        actual: Computed error for comparison, when available
    """
    gamma: float
    bound: float
    actual: Optional[float] = None


@dataclass
class AepError:
    """
    Relative reduction errors of an almost equitable partition.

    Attributes:
        formula: Closed-form value
        direct: Value computed from the error system
    """
    formula: float
    direct: Optional[float] = None


def _pseudo_dissimilarity(net: NetworkSystem, tol: Tolerances) -> np.ndarray:
    m_inv = np.diag(1.0 / net.masses)
    sys = StateSpace(-m_inv @ net.L, m_inv @ net.F, np.eye(net.n))
    P = pseudo_gramians(sys, tol).P
    # |e_i - e_j|^2 in the P inner product
    d = np.diag(P)
    return d[:, None] + d[None, :] - 2.0 * P


def _lyapunov_dissimilarity(net: NetworkSystem, tol: Tolerances) -> np.ndarray:
    n = net.n
    agent = net.agent
    stable, _ = decompose(net)
    P_bar = solve_lyapunov(stable.A, stable.B @ stable.B.T, tol)
    S, _ = disagreement_basis(net.M)
    phi = np.kron(np.diag(1.0 / net.masses) @ S, agent.C)
    Z = phi @ P_bar @ phi.T
    # Traces of the q x q output blocks
    q = agent.outputs
    T = np.einsum('iaja->ij', Z.reshape(n, q, n, q))
    d = np.diag(T)
    return d[:, None] + d[None, :] - T - T.T


def dissimilarity_matrix(
    net: NetworkSystem,
    method: str = "auto",
    tol: Optional[Tolerances] = None,
) -> DissimilarityMatrix:
    """
    Pairwise dissimilarities D_ij = ||eta_i - eta_j||_H2 of vertex transfer functions.

    Single-integrator networks use the pseudo controllability Gramian of
    (-M^{-1} L, M^{-1} F); general networks use a Lyapunov solve in
    disagreement coordinates.

    Args:
        net: Synchronizing network
        method: 'auto', 'pseudo' or 'lyapunov'

    Returns:
        DissimilarityMatrix
    """
    tol = tol or default_tolerances()
    if method == "auto":
        method = "pseudo" if net.is_single_integrator else "lyapunov"
    if method not in ("pseudo", "lyapunov"):
        raise InvalidModelError(f"Unknown dissimilarity method '{method}'")
    if method == "pseudo" and not net.is_single_integrator:
        raise InvalidModelError("The pseudo-Gramian path needs single-integrator agents")
    validate_network(net, tol)
    require_synchronization(net, tol)

    if net.n == 1:
        return DissimilarityMatrix(D=np.zeros((1, 1)), method=method)
    squared = _pseudo_dissimilarity(net, tol) if method == "pseudo" else _lyapunov_dissimilarity(net, tol)
    squared = (squared + squared.T) / 2
    # Clip roundoff negatives before the square root
    D = np.sqrt(np.clip(squared, 0.0, None))
    np.fill_diagonal(D, 0.0)
    logger.info(f"Computed {net.n}x{net.n} dissimilarity matrix ({method})")
    return DissimilarityMatrix(D=D, method=method)


def hierarchical_cluster(
    D: np.ndarray,
    r: int,
    linkage: str = "average",
) -> Tuple[Clustering, Dendrogram]:
    """
    Agglomerative clustering of a dissimilarity matrix down to r clusters.

    The merge tree comes from scipy's linkage; the first n - r merges are
    replayed to obtain the r-cluster cut. Among equal linkage values the
    pair with the lowest cluster indices merges first.

    Args:
        D: Symmetric nonnegative n x n matrix with zero diagonal
        r: Number of clusters, 1 <= r <= n
        linkage: 'average', 'single' or 'complete'

    Returns:
        (Clustering, Dendrogram)
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if D.ndim != 2 or D.shape != (n, n):
        raise InvalidModelError(f"Dissimilarity matrix must be square, got {D.shape}")
    if not 1 <= r <= n:
        raise InvalidModelError(f"Number of clusters must lie in 1..{n}, got {r}")
    if linkage not in LINKAGES:
        raise InvalidModelError(f"Unknown linkage '{linkage}', expected one of {LINKAGES}")
    if np.abs(D - D.T).max(initial=0.0) > 1e-12 * max(np.abs(D).max(initial=0.0), 1.0) or D.min(initial=0.0) < 0:
        raise InvalidModelError("Dissimilarity matrix must be symmetric and nonnegative")

    dendrogram = Dendrogram(n=n)
    members = {v + 1: [v + 1] for v in range(n)}
    if n > 1 and r < n:
        Z = hierarchy.linkage(squareform(D, checks=False), method=linkage)
        # scipy numbers clusters from 0; ours start at 1
        for k, (a, b, value, _) in enumerate(Z[:n - r]):
            a, b = int(a) + 1, int(b) + 1
            dendrogram.merges.append((a, b, float(value)))
            logger.debug(f"Merged clusters {a} and {b} at {value:.6g}")
            members[n + k + 1] = sorted(members.pop(a) + members.pop(b))

    clustering = Clustering.from_clusters(list(members.values()), n)
    return clustering, dendrogram


def reduce_by_clustering(
    net: NetworkSystem,
    clustering: Clustering,
    tol: Optional[Tolerances] = None,
) -> ClusterReduction:
    """
    Project a network onto a clustering.

    The reduced model (Pi' M Pi, Pi' L Pi, Pi' F, H Pi) keeps the agent
    dynamics, stays a network of the same form and synchronizes whenever the
    original does.

    Args:
        net: Synchronizing network
        clustering: Vertex partition

    Returns:
        ClusterReduction with H2 and H-infinity errors
    """
    tol = tol or default_tolerances()
    graph = validate_network(net, tol)
    require_synchronization(net, tol)
    M_hat, L_hat, F_hat, H_hat = project_network(clustering, net.M, net.L, net.F, net.H)
    # Round-off in Pi' L Pi is relative to the original Laplacian
    check = check_laplacian(L_hat, tol, scale=np.abs(net.L).sum(axis=1).max())
    if not check.valid_connected:
        raise InfeasibleError(f"Projected Laplacian is invalid: {', '.join(check.problems)}")
    L_hat = build_laplacian(check.graph)
    reduced = NetworkSystem(M=M_hat, L=L_hat, F=F_hat, H=H_hat,
                            subsystem=net.subsystem, graph=check.graph)
    require_synchronization(reduced, tol)

    h2 = network_h2_error(net, reduced, tol)
    hinf = network_hinf_error(net, reduced, tol)
    match = None
    if net.is_single_integrator:
        match = bool(np.allclose(steady_output(net), steady_output(reduced), rtol=1e-9, atol=1e-12))
    quotient = quotient_graph(graph, clustering)
    logger.info(f"Reduced network {net.n} -> {clustering.r} vertices, H2 error "
                f"{'undefined' if h2 is None else f'{h2:.6e}'}")
    return ClusterReduction(reduced=reduced, clustering=clustering, h2_error=h2,
                            hinf_error=hinf, steady_state_match=match, quotient=quotient)


def dissimilarity_reduce(
    net: NetworkSystem,
    r: int,
    linkage: str = "average",
    tol: Optional[Tolerances] = None,
) -> Tuple[ClusterReduction, DissimilarityMatrix, Dendrogram]:
    """Dissimilarity-based clustering followed by projection."""
    dissim = dissimilarity_matrix(net, tol=tol)
    clustering, dendrogram = hierarchical_cluster(dissim.D, r, linkage)
    return reduce_by_clustering(net, clustering, tol), dissim, dendrogram


def errbound_gamma(
    net: NetworkSystem,
    clustering: Clustering,
    dissim: Optional[DissimilarityMatrix] = None,
    tol: Optional[Tolerances] = None,
) -> ErrorBound:
    """
    A-priori H2 bound gamma * sum_k |C_k| * max_{i,j in C_k} D_ij.

    gamma is the smallest value making the matrix
    [[I(x)(A'+A) - L(x)(C'B'+BC), L(x)BC, -I(x)C'],
     [L(x)C'B', -gamma I, I],
     [-I(x)C, I, -gamma I]]
    negative definite. Requires M = I, H = I, A + A' < 0 and square agents.

    Args:
        net: Network with strictly passive agents
        clustering: Vertex partition
        dissim: Precomputed dissimilarities

    Returns:
        ErrorBound with the actual H2 error for comparison
    """
    tol = tol or default_tolerances()
    agent = net.agent
    n = net.n
    if not net.has_identity_inertia():
        raise InfeasibleError("errbound_gamma needs M = I")
    if net.H.shape != (n, n) or not np.array_equal(net.H, np.eye(n)):
        raise InfeasibleError("errbound_gamma needs H = I")
    if agent.order != agent.outputs:
        raise InfeasibleError("errbound_gamma needs as many agent states as outputs")
    if np.linalg.eigvalsh(agent.A + agent.A.T).max() >= 0:
        raise InfeasibleError("errbound_gamma needs A + A' < 0")

    I_n = np.eye(n)
    BC = agent.B @ agent.C
    top = np.kron(I_n, agent.A.T + agent.A) - np.kron(net.L, agent.C.T @ agent.B.T + BC)
    cross = np.kron(net.L, BC)
    out = -np.kron(I_n, agent.C.T)
    size = n * agent.order
    # Blocks: state, disturbance, output
    M0 = np.block([
        [top, cross, out],
        [cross.T, np.zeros((size, size)), np.eye(size)],
        [out.T, np.eye(size), np.zeros((size, size))],
    ])
    gamma = lmi_gamma_bisect(M0, [size, size, size], [False, True, True], tol)

    dissim = dissim or dissimilarity_matrix(net, tol=tol)
    total = 0.0
    for k in range(1, clustering.r + 1):
        members = clustering.members(k)
        total += len(members) * float(dissim.D[np.ix_(members, members)].max())
    bound = gamma * total
    actual = reduce_by_clustering(net, clustering, tol).h2_error
    logger.info(f"Gamma bound {bound:.6e} (gamma {gamma:.6e}), actual {actual}")
    return ErrorBound(gamma=gamma, bound=bound, actual=actual)


def residual_gain_system(net: NetworkSystem, clustering: Clustering) -> StateSpace:
    """
    Map from the projection residual to the output error.

    With nu = (I - Pi Pi^+) x restricted to an orthonormal basis N of its
    range, the error is H nu + H Pi d where d follows the reduced network
    driven by -M_hat^{-1} Pi' L nu; d is written in disagreement
    coordinates of the reduced network.

    Returns:
        StateSpace (may have zero states or zero inputs)
    """
    pi = clustering.matrix()
    M_hat, L_hat, _, _ = project_network(clustering, net.M, net.L, net.F, net.H)
    projector = pi @ np.linalg.solve(M_hat, pi.T @ net.M)
    U, s, _ = np.linalg.svd(np.eye(net.n) - projector)
    N = U[:, :int((s > 1e-10).sum())]
    r = clustering.r
    # Single cluster: static map, no reduced dynamics
    if r == 1:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, N.shape[1])),
                          np.zeros((net.H.shape[0], 0)), net.H @ N)
    S, S_dagger = disagreement_basis(M_hat)
    m_hat_inv = np.diag(1.0 / np.diag(M_hat))
    return StateSpace(
        -S_dagger @ L_hat @ m_hat_inv @ S,
        -S_dagger @ pi.T @ net.L @ N,
        net.H @ pi @ m_hat_inv @ S,
        net.H @ N,
    )


def errbound_pseudo(
    net: NetworkSystem,
    clustering: Clustering,
    tol: Optional[Tolerances] = None,
) -> ErrorBound:
    """
    A-priori H2 bound gamma_s * sqrt(Tr((I - Pi Pi^+) P (I - Pi Pi^+)')).

    P is the pseudo controllability Gramian of the single-integrator network
    and gamma_s the H-infinity gain of residual_gain_system.

    Args:
        net: Synchronizing single-integrator network
        clustering: Vertex partition

    Returns:
        ErrorBound with the actual H2 error for comparison
    """
    tol = tol or default_tolerances()
    if not net.is_single_integrator:
        raise InvalidModelError("errbound_pseudo applies to single-integrator networks")
    validate_network(net, tol)
    pi = clustering.matrix()
    M_hat = pi.T @ net.M @ pi
    residual = np.eye(net.n) - pi @ np.linalg.solve(M_hat, pi.T @ net.M)
    m_inv = np.diag(1.0 / net.masses)
    P = pseudo_gramians(StateSpace(-m_inv @ net.L, m_inv @ net.F, np.eye(net.n)), tol).P
    energy = float(np.sqrt(max(np.trace(residual @ P @ residual.T), 0.0)))

    gain_sys = residual_gain_system(net, clustering)
    # No residual directions when every cluster is a singleton
    gamma = hinf_norm(gain_sys, tol) if gain_sys.inputs else 0.0
    bound = gamma * energy
    actual = reduce_by_clustering(net, clustering, tol).h2_error
    logger.info(f"Pseudo-Gramian bound {bound:.6e} (gamma_s {gamma:.6e}), actual {actual}")
    return ErrorBound(gamma=gamma, bound=bound, actual=actual)


def _aep_network(graph: WeightedGraph, leaders: Sequence[int], output: str) -> NetworkSystem:
    F = leader_matrix(graph.n, leaders)
    net = network_from_graph(graph, F)
    H = aep_output_matrix(graph) if output == "edges" else net.L
    return net.replace(H=H, graph=graph)


def _require_aep(graph: WeightedGraph, clustering: Clustering, tol: Tolerances) -> None:
    verdict = is_almost_equitable(graph, clustering, tol)
    if not verdict.is_aep:
        raise InfeasibleError(f"Partition is not almost equitable (violation {verdict.worst_violation:.3e})")


def aep_h2_error(
    graph: WeightedGraph,
    clustering: Clustering,
    leaders: Sequence[int],
    tol: Optional[Tolerances] = None,
) -> AepError:
    """
    Relative squared H2 error of an almost equitable partition.

    With leaders selecting F, H = W^{1/2} R' and M = I the error is
    sum_i (1 - 1/|C_{k_i}|) / (p (1 - 1/n)).

    Args:
        graph: Weighted graph
        clustering: Almost equitable partition
        leaders: 1-based leader vertices

    Returns:
        AepError (formula and direct computation)
    """
    tol = tol or default_tolerances()
    _require_aep(graph, clustering, tol)
    sizes = clustering.sizes
    n, p = graph.n, len(leaders)
    formula = sum(1.0 - 1.0 / sizes[clustering.assignment[v - 1] - 1] for v in leaders) / (p * (1.0 - 1.0 / n))

    net = _aep_network(graph, leaders, "edges")
    reduction = reduce_by_clustering(net, clustering, tol)
    full_norm = h2_norm_semistable(assemble(net), tol).value
    direct = None
    if reduction.h2_error is not None and full_norm:
        direct = (reduction.h2_error / full_norm) ** 2
    return AepError(formula=formula, direct=direct)


def aep_hinf_error(
    graph: WeightedGraph,
    clustering: Clustering,
    leaders: Sequence[int],
    tol: Optional[Tolerances] = None,
) -> AepError:
    """
    H-infinity error of an almost equitable partition with output H = L.

    The squared error is max_i (1 - 1/|C_{k_i}|) when the leaders lie in
    distinct clusters and 1 otherwise; the returned values are not squared.

    Args:
        graph: Weighted graph
        clustering: Almost equitable partition
        leaders: 1-based leader vertices

    Returns:
        AepError (formula and direct computation)
    """
    tol = tol or default_tolerances()
    _require_aep(graph, clustering, tol)
    sizes = clustering.sizes
    clusters = [clustering.assignment[v - 1] for v in leaders]
    if len(set(clusters)) == len(clusters):
        squared = max(1.0 - 1.0 / sizes[k - 1] for k in clusters)
    else:
        squared = 1.0
    net = _aep_network(graph, leaders, "laplacian")
    reduction = reduce_by_clustering(net, clustering, tol)
    return AepError(formula=float(np.sqrt(squared)), direct=reduction.hinf_error)
