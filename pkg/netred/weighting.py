"""
Edge weighting of reduced networks.
A clustering fixes the reduced inertia, input and output matrices and the
quotient topology; the quotient edge weights are then tuned to minimize the
H2 reduction error by projected gradient descent.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from netred.config import Tolerances, WeightOptimizerConfig, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError
from netred.graph import QuotientGraph, project_network, quotient_graph
from netred.linsys import is_hurwitz, solve_lyapunov, stack_error
from netred.models import Clustering, NetworkSystem, StateSpace, WeightedGraph
from netred.network import (
    averages_cancel,
    decompose,
    disagreement_basis,
    require_synchronization,
    validate_network,
)


logger = logging.getLogger(__name__)


@dataclass
class ParameterizedReducedModel:
    """
    Reduced network with free quotient edge weights.

    The reduced Laplacian is R_hat diag(w) R_hat'; everything else is fixed
    by the clustering.

    Attributes:
        M_hat: Pi' M Pi
        R_hat: Incidence matrix of the quotient graph (r x kappa)
        F_hat: Pi' F
        H_hat: H Pi
        subsystem: Agent dynamics shared with the original network
        quotient: Quotient graph
        initial_weights: Aggregated crossing weights (projection baseline)
    """
    M_hat: np.ndarray
    R_hat: np.ndarray
    F_hat: np.ndarray
    H_hat: np.ndarray
    subsystem: Optional[StateSpace]
    quotient: QuotientGraph
    initial_weights: np.ndarray

    @property
    def kappa(self) -> int:
        return self.R_hat.shape[1]

    @property
    def r(self) -> int:
        return self.R_hat.shape[0]

    def check_weights(self, weights) -> np.ndarray:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != (self.kappa,):
            raise InvalidModelError(f"Expected {self.kappa} edge weights, got {w.size}")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvalidModelError("Edge weights must be positive and finite")
        return w

    def laplacian(self, weights) -> np.ndarray:
        w = self.check_weights(weights)
        return (self.R_hat * w) @ self.R_hat.T

    def network(self, weights) -> NetworkSystem:
        """Reduced network for the given weights."""
        w = self.check_weights(weights)
        graph = WeightedGraph(self.r, tuple((k, l, float(x)) for (k, l), x in zip(self.quotient.edges, w)))
        return NetworkSystem(
            M=self.M_hat, L=self.laplacian(w), F=self.F_hat, H=self.H_hat,
            subsystem=self.subsystem, graph=graph,
        )


@dataclass
class WeightOptimizationResult:
    """
    Outcome of the edge-weight optimization.

    Attributes:
        weights: Best weights found
        trace: H2 error after every accepted iteration, starting with the baseline
        baseline_error: H2 error of the clustering projection
        final_error: H2 error at the returned weights
        iterations: Accepted iterations
        converged: Stopped on the tolerance or stationarity rather than the iteration cap
        w_min: Lower bound enforced on every weight
        model: The parameterization used
    """
    weights: np.ndarray
    trace: List[float] = field(default_factory=list)
    baseline_error: float = 0.0
    final_error: float = 0.0
    iterations: int = 0
    converged: bool = False
    w_min: float = 0.0
    model: Optional[ParameterizedReducedModel] = None

    @property
    def reduced(self) -> NetworkSystem:
        return self.model.network(self.weights)

    def to_dict(self) -> dict:
        return {
            'weights': self.weights.tolist(),
            'edges': [list(e) for e in self.model.quotient.edges] if self.model else [],
            'baseline_error': self.baseline_error,
            'final_error': self.final_error,
            'iterations': self.iterations,
            'converged': self.converged,
            'w_min': self.w_min,
            'trace': list(self.trace),
        }


def parameterize(
    net: NetworkSystem,
    clustering: Clustering,
    tol: Optional[Tolerances] = None,
) -> ParameterizedReducedModel:
    """
    Parameterized reduced model on the quotient topology of a clustering.

    Args:
        net: Synchronizing network
        clustering: Vertex partition with a connected quotient

    Returns:
        ParameterizedReducedModel starting at the aggregated crossing weights
    """
    tol = tol or default_tolerances()
    graph = validate_network(net, tol)
    quotient = quotient_graph(graph, clustering)
    M_hat, _, F_hat, H_hat = project_network(clustering, net.M, net.L, net.F, net.H)
    logger.debug(f"Parameterized {clustering.r}-cluster model with {quotient.kappa} quotient edges")
    return ParameterizedReducedModel(
        M_hat=M_hat, R_hat=quotient.R_hat, F_hat=F_hat, H_hat=H_hat,
        subsystem=net.subsystem, quotient=quotient,
        initial_weights=quotient.weights.copy(),
    )


def _error_parts(net: NetworkSystem, model: ParameterizedReducedModel, w: np.ndarray, tol: Tolerances):
    reduced = model.network(w)
    if not averages_cancel(net, reduced, tol):
        raise InfeasibleError("Average modules do not cancel (C J B != 0); H2 error undefined")
    stable_full, _ = decompose(net)
    stable_red, _ = decompose(reduced)
    return stack_error(stable_full, stable_red), stable_full.order


def _objective(net: NetworkSystem, model: ParameterizedReducedModel, w: np.ndarray, tol: Tolerances) -> float:
    """Squared H2 error, inf when the reduced network loses synchronization."""
    err, _ = _error_parts(net, model, w, tol)
    if err.order == 0:
        return 0.0
    if not is_hurwitz(err.A, tol):
        return np.inf
    P = solve_lyapunov(err.A, err.B @ err.B.T, tol)
    return max(float(np.trace(err.C @ P @ err.C.T)), 0.0)


def h2_error(
    net: NetworkSystem,
    model: ParameterizedReducedModel,
    weights,
    tol: Optional[Tolerances] = None,
) -> float:
    """
    H2 norm of the difference between the network and the weighted reduced model.

    The average modules cancel for every weight vector, so the error lives
    in the stable disagreement parts.

    Args:
        net: Original synchronizing network
        model: Parameterization from parameterize()
        weights: Quotient edge weights

    Returns:
        The H2 error
    """
    tol = tol or default_tolerances()
    value = _objective(net, model, model.check_weights(weights), tol)
    if not np.isfinite(value):
        raise InfeasibleError("Weighted reduced network does not synchronize")
    return float(np.sqrt(value))


def gradient(
    net: NetworkSystem,
    model: ParameterizedReducedModel,
    weights,
    tol: Optional[Tolerances] = None,
) -> np.ndarray:
    """
    Gradient of the squared H2 error with respect to the quotient edge weights.

    With P and Q the Gramians of the error system and Z the reduced-model
    block of P Q, the k-th entry is
    -2 Tr((S_dagger r_k r_k' M_hat^{-1} S (x) B C) Z).

    Args:
        net: Original synchronizing network
        model: Parameterization
        weights: Point of evaluation

    Returns:
        Vector of length kappa
    """
    tol = tol or default_tolerances()
    w = model.check_weights(weights)
    if model.r == 1:
        return np.zeros(0)
    err, offset = _error_parts(net, model, w, tol)
    if not is_hurwitz(err.A, tol):
        raise InfeasibleError("Weighted reduced network does not synchronize")
    P = solve_lyapunov(err.A, err.B @ err.B.T, tol)
    Q = solve_lyapunov(err.A.T, err.C.T @ err.C, tol)
    # Reduced-model block only; the full network does not depend on w
    Z = (P @ Q)[offset:, offset:]

    agent = net.agent
    ell = agent.order
    BC = agent.B @ agent.C
    S, S_dagger = disagreement_basis(model.M_hat)
    left = S_dagger @ model.R_hat
    right = model.R_hat.T @ np.diag(1.0 / np.diag(model.M_hat)) @ S
    blocks = Z.reshape(model.r - 1, ell, model.r - 1, ell)
    grad = np.empty(model.kappa)
    for k in range(model.kappa):
        G = np.outer(left[:, k], right[k])
        grad[k] = -2.0 * np.einsum('ab,ij,bjai->', G, BC, blocks)
    return grad


def finite_difference_gradient(
    net: NetworkSystem,
    model: ParameterizedReducedModel,
    weights,
    rel_step: float = 1e-6,
    tol: Optional[Tolerances] = None,
) -> np.ndarray:
    """Central-difference gradient of the squared H2 error (forward near zero)."""
    tol = tol or default_tolerances()
    w = model.check_weights(weights)
    h = rel_step * float(w.mean()) if w.size else rel_step
    grad = np.empty(w.size)
    for k in range(w.size):
        up = w.copy()
        up[k] += h
        down = w.copy()
        if w[k] - h > 0:
            down[k] -= h
            grad[k] = (_objective(net, model, up, tol) - _objective(net, model, down, tol)) / (2 * h)
        else:
            grad[k] = (_objective(net, model, up, tol) - _objective(net, model, w, tol)) / h
    return grad


def optimize_weights(
    net: NetworkSystem,
    clustering: Clustering,
    config: Optional[WeightOptimizerConfig] = None,
    tol: Optional[Tolerances] = None,
) -> WeightOptimizationResult:
    """
    Minimize the H2 reduction error over the quotient edge weights.

    Projected gradient descent with an Armijo backtracking line search,
    started at the clustering projection. Weights are clamped to
    w_min = w_min_factor * mean initial weight. Every accepted step lowers
    the objective, so the result is never worse than the projection.

    Args:
        net: Synchronizing network
        clustering: Vertex partition with a connected quotient
        config: Optimizer settings

    Returns:
        WeightOptimizationResult
    """
    config = config or WeightOptimizerConfig()
    tol = tol or default_tolerances()
    require_synchronization(net, tol)
    model = parameterize(net, clustering, tol)
    w = model.initial_weights.copy()
    w_min = config.w_min_factor * float(w.mean()) if w.size else 0.0
    J = _objective(net, model, w, tol)
    if not np.isfinite(J):
        raise InfeasibleError("Clustering projection does not synchronize")
    baseline = float(np.sqrt(J))
    result = WeightOptimizationResult(weights=w, trace=[baseline], baseline_error=baseline,
                                      final_error=baseline, w_min=w_min, model=model)
    if w.size == 0 or J == 0.0:
        result.converged = True
        return result

    step = config.initial_step
    for iteration in range(config.max_iter):
        g = gradient(net, model, w, tol)
        if not np.any(g):
            result.converged = True
            break
        accepted = False
        for _ in range(config.max_backtracks):
            # Projection onto w >= w_min
            trial = np.maximum(w - step * g, w_min)
            decrease = float(g @ (w - trial))
            if decrease <= 0:
                step *= config.shrink
                continue
            J_trial = _objective(net, model, trial, tol)
            if J_trial <= J - config.armijo * decrease:
                accepted = True
                break
            step *= config.shrink
        if not accepted:
            logger.debug(f"Line search stalled at iteration {iteration}")
            result.converged = True
            break

        change = J - J_trial
        w, J = trial, J_trial
        result.iterations += 1
        result.trace.append(float(np.sqrt(J)))
        # Let the step grow back after a success
        step /= config.shrink
        if change <= config.rel_tol * max(J, np.finfo(float).tiny):
            result.converged = True
            break

    result.weights = w
    result.final_error = float(np.sqrt(J))
    logger.info(f"Edge weighting: H2 error {baseline:.6e} -> {result.final_error:.6e} "
                f"in {result.iterations} iterations")
    return result
