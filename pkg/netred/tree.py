"""
Edge-importance reduction of tree networks.
Edge systems, diagonal generalized Gramians and merging of the least
important edges.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import networkx as nx
import numpy as np

from netred.clustering import ClusterReduction, reduce_by_clustering
from netred.config import Tolerances, TreeConfig, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError
from netred.graph import incidence
from netred.models import Clustering, NetworkSystem, PassivityCertificate, WeightedGraph
from netred.network import passivity_certificate, validate_network


logger = logging.getLogger(__name__)


@dataclass
class EdgeSystem:
    """
    Edge coordinates of a tree network.

    Attributes:
        graph: The tree
        R: Incidence matrix (n x (n-1))
        W: Edge weights (diagonal)
        L_e: Edge Laplacian R'R W
        F_e: R'F
        H_e: H R W L_e^{-1}
        F_f: L_e^{-1} F_e (dual system input)
        H_f: H R W (dual system output)
    """
    graph: WeightedGraph
    R: np.ndarray
    W: np.ndarray
    L_e: np.ndarray
    F_e: np.ndarray
    H_e: np.ndarray
    F_f: np.ndarray
    H_f: np.ndarray


@dataclass
class EdgeImportance:
    """
    Diagonal generalized Gramians of the edge system and edge ranking.

    Attributes:
        xi: Diagonal of X
        eta: Diagonal of Y
        order: Edge indices by decreasing xi * eta (ties by edge order)
        residual_X: Largest eigenvalue of the X inequality residual
        residual_Y: Largest eigenvalue of the Y inequality residual
    """
    xi: np.ndarray
    eta: np.ndarray
    order: List[int]
    residual_X: float
    residual_Y: float

    @property
    def products(self) -> np.ndarray:
        return self.xi * self.eta

    def report_rows(self, graph: WeightedGraph) -> List[dict]:
        """One row per edge: endpoints, xi, eta, product and rank (1 = most important)."""
        rank = {e: k + 1 for k, e in enumerate(self.order)}
        return [
            {'i': i, 'j': j, 'xi': float(self.xi[e]), 'eta': float(self.eta[e]),
             'importance': float(self.xi[e] * self.eta[e]), 'rank': rank[e]}
            for e, (i, j, _) in enumerate(graph.edges)
        ]


@dataclass
class TreeReduction:
    """
    Result of merging the least important tree edges.

    Attributes:
        reduction: Projection onto the resulting clustering
        importance: Edge ranking used
        merged: Merged edges (i, j)
        bound: A-priori H-infinity bound
    """
    reduction: ClusterReduction
    importance: EdgeImportance
    merged: List[tuple]
    bound: float


def is_tree(graph: WeightedGraph) -> bool:
    nxg = nx.Graph()
    nxg.add_nodes_from(range(1, graph.n + 1))
    nxg.add_edges_from((i, j) for i, j, _ in graph.edges)
    return nx.is_tree(nxg)


def edge_systems(
    net: NetworkSystem,
    cert: Optional[PassivityCertificate] = None,
    tol: Optional[Tolerances] = None,
) -> EdgeSystem:
    """
    Edge system and its dual for a tree network with M = I.

    Args:
        net: Network on a tree with passive minimal agents
        cert: Passivity certificate, verified against the agent (symmetric case when omitted)

    Returns:
        EdgeSystem
    """
    tol = tol or default_tolerances()
    graph = validate_network(net, tol)
    if not is_tree(graph):
        raise InfeasibleError("Edge-importance reduction needs a tree")
    if not net.has_identity_inertia():
        raise InfeasibleError("Edge-importance reduction needs M = I")
    if cert is None:
        passivity_certificate(net.agent, tol=tol)
    else:
        passivity_certificate(net.agent, K=cert.K, K_min=cert.K_min, K_max=cert.K_max, tol=tol)
    pair = incidence(graph)
    R, W = pair.R, pair.W
    L_e = R.T @ R @ W
    F_e = R.T @ net.F
    # Edge states x_e = R' x
    H_f = net.H @ R @ W
    return EdgeSystem(
        graph=graph, R=R, W=W, L_e=L_e, F_e=F_e,
        H_e=np.linalg.solve(L_e.T, H_f.T).T,
        F_f=np.linalg.solve(L_e, F_e),
        H_f=H_f,
    )


def _closed_form_scale(RtR: np.ndarray, W: np.ndarray, rhs: np.ndarray) -> float:
    """Smallest alpha with 2 alpha R'R >= rhs, via L~ = W^{1/2} R'R W^{1/2}."""
    root = np.sqrt(W)
    tilde = root @ RtR @ root
    vals, vecs = np.linalg.eigh(tilde)
    inv_root = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
    return float(np.linalg.eigvalsh(inv_root @ root @ rhs @ root @ inv_root).max()) / 2.0


def diagonal_edge_gramians(
    edges: EdgeSystem,
    config: Optional[TreeConfig] = None,
    tol: Optional[Tolerances] = None,
) -> EdgeImportance:
    """
    Diagonal X, Y with -L_e X - X L_e' + R'FF'R <= 0 and -L_e'Y - Y L_e + W R'H'H R W <= 0.

    Starts from X = alpha W^{-1}, Y = beta W (feasible by congruence) and
    optionally shrinks each diagonal entry by bisection while the residual
    stays negative semidefinite.

    Args:
        edges: Edge system of a tree network
        config: Tightening settings

    Returns:
        EdgeImportance
    """
    config = config or TreeConfig()
    tol = tol or default_tolerances()
    L_e, W, R = edges.L_e, edges.W, edges.R
    if L_e.size == 0:
        return EdgeImportance(xi=np.zeros(0), eta=np.zeros(0), order=[], residual_X=0.0, residual_Y=0.0)
    RtR = R.T @ R
    w = np.diag(W)
    rhs_x = edges.F_e @ edges.F_e.T
    rhs_y = edges.H_f.T @ edges.H_f

    def residual_x(xi: np.ndarray) -> float:
        X = np.diag(xi)
        return float(np.linalg.eigvalsh(rhs_x - L_e @ X - X @ L_e.T).max())

    def residual_y(eta: np.ndarray) -> float:
        Y = np.diag(eta)
        return float(np.linalg.eigvalsh(rhs_y - L_e.T @ Y - Y @ L_e).max())

    scale = max(np.abs(L_e).max(), 1.0)
    floor = 1e-12 * scale
    w_inv = np.diag(1.0 / w)
    alpha = max(_closed_form_scale(RtR, W, rhs_x), floor)
    beta = max(_closed_form_scale(RtR, W, w_inv @ rhs_y @ w_inv), floor)
    # X = alpha W^{-1}, Y = beta W
    xi = alpha / w
    eta = beta * w

    if config.tighten:
        xi = _tighten(xi, residual_x, config, floor, scale * max(np.abs(rhs_x).max(), 1.0))
        eta = _tighten(eta, residual_y, config, floor, scale * max(np.abs(rhs_y).max(), 1.0))

    res_x, res_y = residual_x(xi), residual_y(eta)
    limit = tol.feasibility * scale * max(np.abs(rhs_x).max(), np.abs(rhs_y).max(), xi.max(), eta.max(), 1.0)
    if res_x > limit or res_y > limit:
        raise InfeasibleError(f"Diagonal edge Gramians infeasible (residuals {res_x:.3e}, {res_y:.3e})")
    products = xi * eta
    # Most important first, ties by edge index
    order = sorted(range(len(xi)), key=lambda e: (-products[e], e))
    logger.info(f"Edge importance computed for {len(xi)} edges")
    return EdgeImportance(xi=xi, eta=eta, order=order, residual_X=res_x, residual_Y=res_y)


def _tighten(values: np.ndarray, residual, config: TreeConfig, floor: float, scale: float) -> np.ndarray:
    """Coordinate-wise bisection shrinking each entry while residual(values) <= 0."""
    values = values.copy()
    accept = 1e-12 * scale
    for _ in range(config.sweeps):
        for e in range(values.size):
            lo, hi = floor, values[e]
            trial = values.copy()
            trial[e] = lo
            if residual(trial) <= accept:
                values[e] = lo
                continue
            for _ in range(config.bisection_steps):
                mid = 0.5 * (lo + hi)
                trial[e] = mid
                if residual(trial) <= accept:
                    hi = mid
                else:
                    lo = mid
            values[e] = hi
    return values


def tree_cluster_reduce(
    net: NetworkSystem,
    r: int,
    cert: Optional[PassivityCertificate] = None,
    config: Optional[TreeConfig] = None,
    tol: Optional[Tolerances] = None,
) -> TreeReduction:
    """
    Merge the n - r least important edges of a tree network.

    The bound is 2 sum over removed edges of [L_e^{-1}]_ii sqrt(xi_i eta_i).

    Args:
        net: Tree network with M = I
        r: Number of clusters, 1 <= r <= n

    Returns:
        TreeReduction
    """
    tol = tol or default_tolerances()
    if not 1 <= r <= net.n:
        raise InvalidModelError(f"Number of clusters must lie in 1..{net.n}, got {r}")
    edges = edge_systems(net, cert, tol)
    importance = diagonal_edge_gramians(edges, config, tol)
    # A tree on r vertices keeps r - 1 edges
    removed = importance.order[r - 1:]
    merged = [edges.graph.edges[e][:2] for e in removed]

    contracted = nx.Graph()
    contracted.add_nodes_from(range(1, net.n + 1))
    contracted.add_edges_from(merged)
    clustering = Clustering.from_clusters(nx.connected_components(contracted), net.n)

    L_e_inv_diag = np.diag(np.linalg.inv(edges.L_e)) if removed else np.zeros(0)
    products = importance.products
    bound = 2.0 * float(sum(L_e_inv_diag[e] * np.sqrt(products[e]) for e in removed))
    reduction = reduce_by_clustering(net, clustering, tol)
    logger.info(f"Merged {len(merged)} edges into {clustering.r} clusters, bound {bound:.6e}")
    return TreeReduction(reduction=reduction, importance=importance, merged=merged, bound=bound)
