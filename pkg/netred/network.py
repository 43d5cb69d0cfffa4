"""
Network model: assembly of diffusively coupled networks, synchronization,
steady-state outputs, passivity certificates and the split into an
average module and a stable disagreement part.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from netred.config import Tolerances, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError, PassivityError
from netred.graph import build_laplacian, check_laplacian
from netred.linsys import (
    h2_norm,
    h2_norm_semistable,
    hinf_norm,
    is_hurwitz,
    is_minimal,
    semistability_check,
    spectral_abscissa,
    stack_error,
)
from netred.models import NetworkSystem, PassivityCertificate, StateSpace, WeightedGraph


logger = logging.getLogger(__name__)


@dataclass
class SyncVerdict:
    """
    Synchronization test result.

    Attributes:
        synchronized: A - lambda_k B C is Hurwitz for every nonzero eigenvalue of M^{-1} L
        worst_abscissa: Largest spectral abscissa over those eigenvalues
        eigenvalues: Ascending eigenvalues of M^{-1} L
    """
    synchronized: bool
    worst_abscissa: float
    eigenvalues: np.ndarray


def network_from_graph(
    graph: WeightedGraph,
    F: np.ndarray,
    H: Optional[np.ndarray] = None,
    M: Optional[np.ndarray] = None,
    subsystem: Optional[StateSpace] = None,
) -> NetworkSystem:
    """
    Network with the Laplacian of a graph.

    Args:
        graph: Interconnection graph
        F: Input matrix (n x p)
        H: Output matrix, the identity when omitted
        M: Inertia (vector or diagonal matrix), the identity when omitted
        subsystem: Agent dynamics, the single integrator when omitted

    Returns:
        NetworkSystem
    """
    n = graph.n
    return NetworkSystem(
        M=np.eye(n) if M is None else M,
        L=build_laplacian(graph),
        F=F,
        H=np.eye(n) if H is None else H,
        subsystem=subsystem,
        graph=graph,
    )


def validate_network(net: NetworkSystem, tol: Optional[Tolerances] = None) -> WeightedGraph:
    """
    Check that L is the Laplacian of a connected graph.

    Returns:
        The graph (the stored one when present)
    """
    tol = tol or default_tolerances()
    verdict = check_laplacian(net.L, tol)
    if not verdict.valid:
        raise InvalidModelError(f"Invalid Laplacian: {', '.join(verdict.problems)}")
    if not verdict.connected:
        raise InvalidModelError("Interconnection graph is disconnected")
    return net.graph if net.graph is not None else verdict.graph


def laplacian_eigenvalues(net: NetworkSystem) -> np.ndarray:
    """Ascending eigenvalues of M^{-1} L via the symmetric similarity M^{-1/2} L M^{-1/2}."""
    scale = 1.0 / np.sqrt(net.masses)
    return np.linalg.eigvalsh(scale[:, None] * net.L * scale[None, :])


def assemble(net: NetworkSystem) -> StateSpace:
    """
    Full-order state-space realization.

    A = I (x) A - M^{-1} L (x) B C, B = M^{-1} F (x) B, C = H (x) C.

    Args:
        net: Network system

    Returns:
        StateSpace of order n * ell
    """
    agent = net.agent
    m_inv = np.diag(1.0 / net.masses)
    A = np.kron(np.eye(net.n), agent.A) - np.kron(m_inv @ net.L, agent.B @ agent.C)
    B = np.kron(m_inv @ net.F, agent.B)
    C = np.kron(net.H, agent.C)
    return StateSpace(A, B, C)


def transfer_network(net: NetworkSystem, s: complex) -> np.ndarray:
    """
    Transfer matrix (H (x) C) [M (x) (sI - A) + L (x) B C]^{-1} (F (x) B).
    """
    agent = net.agent
    pencil = (np.kron(net.M, s * np.eye(agent.order) - agent.A)
              + np.kron(net.L, agent.B @ agent.C))
    return np.kron(net.H, agent.C) @ np.linalg.solve(pencil, np.kron(net.F, agent.B).astype(complex))


def check_synchronization(net: NetworkSystem, tol: Optional[Tolerances] = None) -> SyncVerdict:
    """
    Synchronization test.

    The network synchronizes iff A - lambda_k B C is Hurwitz for the
    eigenvalues lambda_2..lambda_n of M^{-1} L.

    Args:
        net: Network system

    Returns:
        SyncVerdict
    """
    tol = tol or default_tolerances()
    eigs = laplacian_eigenvalues(net)
    agent = net.agent
    worst = -np.inf
    for lam in eigs[1:]:
        worst = max(worst, spectral_abscissa(agent.A - lam * agent.B @ agent.C))
    synchronized = bool(worst < -tol.hurwitz)
    if not synchronized:
        logger.info(f"Network does not synchronize (worst abscissa {worst:.3e})")
    return SyncVerdict(synchronized=synchronized, worst_abscissa=float(worst), eigenvalues=eigs)


def require_synchronization(net: NetworkSystem, tol: Optional[Tolerances] = None) -> SyncVerdict:
    verdict = check_synchronization(net, tol)
    if not verdict.synchronized:
        raise InfeasibleError(f"Network does not synchronize (worst abscissa {verdict.worst_abscissa:.3e})")
    return verdict


def steady_output(net: NetworkSystem) -> np.ndarray:
    """
    Steady-state output H 1 1' F / (1' M 1) of a single-integrator network.

    Returns:
        q x p matrix
    """
    if not net.is_single_integrator:
        raise InvalidModelError("steady_output applies to single-integrator networks")
    ones = np.ones(net.n)
    return np.outer(net.H @ ones, ones @ net.F) / net.masses.sum()


def passivity_certificate(
    subsystem: StateSpace,
    K: Optional[np.ndarray] = None,
    K_min: Optional[np.ndarray] = None,
    K_max: Optional[np.ndarray] = None,
    tol: Optional[Tolerances] = None,
) -> PassivityCertificate:
    """
    Passivity certificate of a minimal agent realization.

    Without K the symmetric case applies: A + A' <= 0 and B = C' give K = I.
    Supplied certificates must satisfy K > 0, A'K + KA <= 0 and C' = K B.

    Args:
        subsystem: Agent dynamics (A, B, C)
        K: Certificate to verify, or None for the symmetric case
        K_min, K_max: Optional extremal certificates, each verified

    Returns:
        PassivityCertificate
    """
    tol = tol or default_tolerances()
    if not is_minimal(subsystem, tol):
        raise PassivityError("Subsystem realization is not minimal")
    A, B, C = subsystem.A, subsystem.B, subsystem.C
    scale = max(np.abs(A).max(), np.abs(B).max(), np.abs(C).max(), 1.0)

    def verify(cert: np.ndarray, name: str) -> np.ndarray:
        cert = np.asarray(cert, dtype=float)
        if cert.shape != A.shape:
            raise InvalidModelError(f"{name} must be {A.shape[0]} x {A.shape[0]}")
        if np.abs(cert - cert.T).max() > tol.passivity * scale:
            raise PassivityError(f"{name} is not symmetric")
        if np.linalg.eigvalsh(cert).min() <= 0:
            raise PassivityError(f"{name} is not positive definite")
        lyap = A.T @ cert + cert @ A
        worst = np.linalg.eigvalsh((lyap + lyap.T) / 2).max()
        if worst > tol.passivity * scale * max(np.abs(cert).max(), 1.0):
            raise PassivityError(f"{name}: A'K + KA has positive eigenvalue {worst:.3e}")
        if np.abs(C.T - cert @ B).max() > tol.passivity * scale * max(np.abs(cert).max(), 1.0):
            raise PassivityError(f"{name}: C' != K B")
        return (cert + cert.T) / 2

    if K is None:
        if subsystem.inputs != subsystem.outputs:
            raise PassivityError("Symmetric case needs as many inputs as outputs")
        worst = np.linalg.eigvalsh(A + A.T).max()
        if worst > tol.passivity * scale or np.abs(B - C.T).max() > tol.passivity * scale:
            raise PassivityError("Symmetric case inapplicable (needs A + A' <= 0 and B = C')")
        cert = PassivityCertificate(K=np.eye(A.shape[0]), source="symmetric")
    else:
        cert = PassivityCertificate(K=verify(K, "K"), source="supplied")

    if K_min is not None:
        cert.K_min = verify(K_min, "K_min")
    if K_max is not None:
        cert.K_max = verify(K_max, "K_max")
    return cert


def disagreement_basis(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Basis S = [-I; 1'] of the vectors orthogonal to 1 and its M-weighted left inverse.

    Returns:
        (S, S_dagger) with S_dagger = (S' M^{-1} S)^{-1} S' M^{-1}
    """
    n = M.shape[0]
    S = np.vstack([-np.eye(n - 1), np.ones((1, n - 1))])
    m_inv = np.diag(1.0 / np.diag(M))
    S_dagger = np.linalg.solve(S.T @ m_inv @ S, S.T @ m_inv)
    return S, S_dagger


def decompose(net: NetworkSystem) -> Tuple[StateSpace, StateSpace]:
    """
    Split a network into its stable disagreement part and its average module.

    With x_bar = (S_dagger M (x) I) x the disagreement dynamics are
    (I (x) A - S_dagger L M^{-1} S (x) B C, S_dagger F (x) B, H M^{-1} S (x) C);
    they are Hurwitz iff the network synchronizes. The average module is
    (A, (1' F / 1' M 1) (x) B, H 1 (x) C). The transfer matrix is the sum.

    Args:
        net: Network system

    Returns:
        (stable, average) state-space pair
    """
    agent = net.agent
    n = net.n
    ones = np.ones(n)
    average = StateSpace(
        agent.A,
        np.kron((ones @ net.F)[None, :] / net.masses.sum(), agent.B),
        np.kron((net.H @ ones)[:, None], agent.C),
    )
    if n == 1:
        stable = StateSpace(np.zeros((0, 0)), np.zeros((0, net.F.shape[1] * agent.inputs)),
                            np.zeros((net.H.shape[0] * agent.outputs, 0)))
        return stable, average
    S, S_dagger = disagreement_basis(net.M)
    m_inv = np.diag(1.0 / net.masses)
    stable = StateSpace(
        np.kron(np.eye(n - 1), agent.A) - np.kron(S_dagger @ net.L @ m_inv @ S, agent.B @ agent.C),
        np.kron(S_dagger @ net.F, agent.B),
        np.kron(net.H @ m_inv @ S, agent.C),
    )
    return stable, average


def averages_cancel(full: NetworkSystem, reduced: NetworkSystem, tol: Tolerances) -> bool:
    gain_full = np.outer(full.H.sum(axis=1), full.F.sum(axis=0)) / full.masses.sum()
    gain_red = np.outer(reduced.H.sum(axis=1), reduced.F.sum(axis=0)) / reduced.masses.sum()
    scale = max(np.abs(gain_full).max(initial=0.0), 1.0)
    if np.abs(gain_full).max(initial=0.0) <= tol.rank * scale and np.abs(gain_red).max(initial=0.0) <= tol.rank * scale:
        return True
    # Nonzero average gains cancel only for identical agents with equal gains
    a, b = full.agent, reduced.agent
    same_agent = (a.A.shape == b.A.shape and a.B.shape == b.B.shape and a.C.shape == b.C.shape
                  and np.array_equal(a.A, b.A) and np.array_equal(a.B, b.B) and np.array_equal(a.C, b.C))
    return same_agent and np.abs(gain_full - gain_red).max() <= tol.rank * scale


def error_system(full: NetworkSystem, reduced: NetworkSystem, tol: Optional[Tolerances] = None) -> StateSpace:
    """
    Error system G - G_hat in disagreement coordinates.

    Stable parts are stacked; the average modules are dropped when they
    cancel (same agent and gain, or both gains zero) and kept otherwise.

    Returns:
        StateSpace of the difference, Hurwitz when both networks synchronize
        and any kept average module is Hurwitz
    """
    tol = tol or default_tolerances()
    stable_full, avg_full = decompose(full)
    stable_red, avg_red = decompose(reduced)
    err = stack_error(stable_full, stable_red)
    if averages_cancel(full, reduced, tol):
        return err
    avg = stack_error(avg_full, avg_red)
    return StateSpace(
        sla.block_diag(err.A, avg.A),
        np.vstack([err.B, avg.B]),
        np.hstack([err.C, avg.C]),
    )


def network_h2_error(full: NetworkSystem, reduced: NetworkSystem, tol: Optional[Tolerances] = None) -> Optional[float]:
    """
    H2 norm of G - G_hat.

    Uses the pseudo-Gramian formula on the stacked assembled systems when
    they are semistable, and the disagreement-coordinate error system
    otherwise.

    Returns:
        The error, or None when it is not in H2
    """
    tol = tol or default_tolerances()
    stacked = stack_error(assemble(full), assemble(reduced))
    if semistability_check(stacked.A, tol).semistable:
        return h2_norm_semistable(stacked, tol).value
    err = error_system(full, reduced, tol)
    if not is_hurwitz(err.A, tol):
        logger.warning("Error system is not stable; H2 error undefined")
        return None
    return h2_norm(err, tol)


def network_hinf_error(full: NetworkSystem, reduced: NetworkSystem, tol: Optional[Tolerances] = None) -> Optional[float]:
    """H-infinity norm of G - G_hat, None when the error system is not stable."""
    tol = tol or default_tolerances()
    err = error_system(full, reduced, tol)
    if not is_hurwitz(err.A, tol):
        logger.warning("Error system is not stable; H-infinity error undefined")
        return None
    return hinf_norm(err, tol)
