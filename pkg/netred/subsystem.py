"""
Reduction of agent dynamics.
Synchronization-preserving balanced truncation of the subsystems through
a Riccati equation, and simultaneous reduction of the network and its
subsystems through Kronecker-structured generalized Gramians followed by a
Laplacian realization.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg as sla

from netred.config import Tolerances, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError, NumericalError
from netred.graph import aep_output_matrix, check_laplacian, realize_laplacian
from netred.linsys import (
    BalancedRealization,
    balance,
    hinf_norm,
    is_hurwitz,
    solve_riccati_interval,
    spectral_abscissa,
    stack_error,
)
from netred.models import NetworkSystem, PassivityCertificate, StateSpace
from netred.network import (
    check_synchronization,
    decompose,
    network_hinf_error,
    passivity_certificate,
    require_synchronization,
    validate_network,
)


logger = logging.getLogger(__name__)


@dataclass
class SubsystemReduction:
    """
    Network whose agents were reduced by Riccati-based balanced truncation.

    Attributes:
        reduced: Network with the original Laplacian and reduced agents
        subsystem: Reduced agent (A_hat, B_hat, C_hat)
        ghsv: Generalized Hankel singular values of the agent
        lam: Spectral point lambda the agent was shifted by
        delta: Largest distance from lambda to lambda_2 and lambda_n
        gamma: Gain parameter in (0, 1)
        K_min, K_max: Extremal Riccati solutions
        bound: 2 gamma sqrt(lambda_n) / (delta (1 - gamma^2)) times the discarded values
        bound_applies: Whether the output is W^{1/2} R', the case the bound covers
        synchronized: Reduced network synchronizes
        hinf_error: H-infinity norm of the error, None when undefined
    """
    reduced: NetworkSystem
    subsystem: StateSpace
    ghsv: np.ndarray
    lam: float
    delta: float
    gamma: float
    K_min: np.ndarray
    K_max: np.ndarray
    bound: float
    bound_applies: bool
    synchronized: bool
    hinf_error: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            'ghsv': self.ghsv.tolist(),
            'lambda': self.lam,
            'delta': self.delta,
            'gamma': self.gamma,
            'bound': self.bound,
            'bound_applies': self.bound_applies,
            'synchronized': self.synchronized,
            'hinf_error': self.hinf_error,
        }


@dataclass
class SpectralSplit:
    """
    Orthogonal split of a network with M = I into average and stable parts.

    Attributes:
        eigenvalues: Nonzero Laplacian eigenvalues (block means within multiplicity groups)
        multiplicities: Size of each group of equal eigenvalues
        T1: n x (n-1) orthonormal eigenvectors of the nonzero eigenvalues
        T2: 1 / sqrt(n)
        F_bar: T1' F
        H_bar: H T1
        stable: (I (x) A - Lambda (x) B C, F_bar (x) B, H_bar (x) C)
        average: (A, T2' F (x) B, H T2 (x) C)
    """
    eigenvalues: np.ndarray
    multiplicities: List[int]
    T1: np.ndarray
    T2: np.ndarray
    F_bar: np.ndarray
    H_bar: np.ndarray
    stable: StateSpace
    average: StateSpace

    @property
    def Lambda(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def blocks(self) -> List[np.ndarray]:
        """Index arrays of the multiplicity groups."""
        bounds = np.cumsum([0] + self.multiplicities)
        return [np.arange(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


@dataclass
class KroneckerGramians:
    """
    Generalized Gramians X (x) K_max^{-1} and Y (x) K_min of the stable part.

    Attributes:
        X: Network controllability factor, -Lambda X - X Lambda + F_bar F_bar' <= 0
        Y: Network observability factor, -Lambda Y - Y Lambda + H_bar' H_bar <= 0
        K_min, K_max: Agent certificates
        dual: True when X is the block-diagonal factor and Y the exact one
        residual_X, residual_Y: Largest eigenvalues of the Kronecker inequality residuals
        regularized: Whether a singular exact factor was shifted to be positive definite
    """
    X: np.ndarray
    Y: np.ndarray
    K_min: np.ndarray
    K_max: np.ndarray
    dual: bool = False
    residual_X: float = 0.0
    residual_Y: float = 0.0
    regularized: bool = False

    def kronecker(self):
        """Full-size Gramians (X (x) K_max^{-1}, Y (x) K_min)."""
        return np.kron(self.X, np.linalg.inv(self.K_max)), np.kron(self.Y, self.K_min)


@dataclass
class SimultaneousReduction:
    """
    Network and agents reduced together.

    Attributes:
        reduced: Reduced network with a realized Laplacian
        subsystem: Reduced agent
        sigma: Generalized Hankel singular values of the network part
        tau: Generalized Hankel singular values of the agent
        stable_bound: Bound on the stable-part error
        average_bound: Bound on the average-module error, None when the agent is not Hurwitz
        stable_error: Actual H-infinity error of the stable parts
        hinf_error: Actual H-infinity error of the whole network, None when undefined
        synchronized: Reduced network synchronizes
        gramians: Generalized Gramians used for the network part
    """
    reduced: NetworkSystem
    subsystem: StateSpace
    sigma: np.ndarray
    tau: np.ndarray
    stable_bound: float
    average_bound: Optional[float]
    stable_error: Optional[float] = None
    hinf_error: Optional[float] = None
    synchronized: bool = False
    gramians: Optional[KroneckerGramians] = field(default=None, repr=False)

    @property
    def bound(self) -> Optional[float]:
        if self.average_bound is None:
            return None
        return self.stable_bound + self.average_bound

    def to_dict(self) -> dict:
        return {
            'sigma': self.sigma.tolist(),
            'tau': self.tau.tolist(),
            'stable_bound': self.stable_bound,
            'average_bound': self.average_bound,
            'bound': self.bound,
            'stable_error': self.stable_error,
            'hinf_error': self.hinf_error,
            'synchronized': self.synchronized,
            'dual': self.gramians.dual if self.gramians else False,
        }


def _require_identity_inertia(net: NetworkSystem, what: str) -> None:
    if not net.has_identity_inertia():
        raise InfeasibleError(f"{what} needs M = I")


def _truncate_agent(agent: StateSpace, bal: BalancedRealization, k: int) -> StateSpace:
    if k == agent.order:
        return agent
    T1, Ti1 = bal.T[:k], bal.T_inv[:, :k]
    return StateSpace(T1 @ agent.A @ Ti1, T1 @ agent.B, agent.C @ Ti1)


def riccati_sync_reduce(
    net: NetworkSystem,
    k: int,
    lam: Optional[float] = None,
    gamma: float = 0.5,
    tol: Optional[Tolerances] = None,
) -> SubsystemReduction:
    """
    Reduce the agents while keeping the network synchronized.

    The extremal solutions K_min, K_max of the Riccati equation for
    (A - lambda B C, C, rho = delta / gamma) serve as generalized Gramians
    (K_max^{-1}, K_min) of (A - lambda B C, rho B, C). Balancing and
    truncating to order k gives the reduced agent, which is reconnected
    through the original Laplacian.

    Args:
        net: Synchronizing network with M = I
        k: Reduced agent order, 1 <= k <= ell
        lam: Spectral point, (lambda_2 + lambda_n) / 2 when omitted
        gamma: Gain parameter in (0, 1)

    Returns:
        SubsystemReduction
    """
    tol = tol or default_tolerances()
    _require_identity_inertia(net, "Subsystem reduction")
    graph = validate_network(net, tol)
    agent = net.agent
    if not 1 <= k <= agent.order:
        raise InvalidModelError(f"Reduced agent order must lie in 1..{agent.order}, got {k}")
    if not 0.0 < gamma < 1.0:
        raise InvalidModelError(f"gamma must lie in (0, 1), got {gamma}")
    if net.n < 2:
        raise InfeasibleError("Subsystem reduction needs at least two vertices")

    eigs = np.linalg.eigvalsh(net.L)
    lam2, lam_n = float(eigs[1]), float(eigs[-1])
    lam = 0.5 * (lam2 + lam_n) if lam is None else float(lam)
    # Floor keeps rho finite when lambda_2 = lambda_n
    delta = max(lam - lam2, lam_n - lam, 1e-3 * lam_n)
    rho = delta / gamma

    A_lam = agent.A - lam * agent.B @ agent.C
    if not is_hurwitz(A_lam, tol):
        raise InfeasibleError(f"A - lambda B C is not Hurwitz for lambda = {lam:.6g} "
                              f"(abscissa {spectral_abscissa(A_lam):.3e})")
    interval = solve_riccati_interval(A_lam, agent.B, agent.C, rho, tol)
    if not interval.feasible:
        gain = hinf_norm(StateSpace(A_lam, agent.B, agent.C), tol)
        raise InfeasibleError(f"Riccati equation infeasible ({interval.reason}); "
                              f"|C (sI - A + lambda B C)^-1 B| = {gain:.6g} must stay below "
                              f"gamma / delta = {gamma / delta:.6g}")

    # P = K_max^{-1}, Q = K_min
    bal = balance(np.linalg.inv(interval.K_max), interval.K_min, tol)
    reduced_agent = _truncate_agent(agent, bal, k)
    reduced = net.replace(subsystem=reduced_agent)
    synchronized = check_synchronization(reduced, tol).synchronized
    if not synchronized:
        logger.warning("Reduced network does not synchronize")

    bound = 2.0 * gamma * np.sqrt(lam_n) / (delta * (1.0 - gamma ** 2)) * float(bal.ghsv[k:].sum())
    # The bound holds only for edge outputs W^{1/2} R'
    H_edge = aep_output_matrix(graph)
    bound_applies = net.H.shape == H_edge.shape and np.allclose(net.H, H_edge, rtol=1e-12, atol=1e-12)
    hinf_error = network_hinf_error(net, reduced, tol) if synchronized else None
    logger.info(f"Agent order {agent.order} -> {k}, lambda {lam:.6g}, delta {delta:.6g}, "
                f"bound {bound:.6e}{'' if bound_applies else ' (output not W^1/2 R)'}")
    return SubsystemReduction(
        reduced=reduced, subsystem=reduced_agent, ghsv=bal.ghsv, lam=lam, delta=delta,
        gamma=gamma, K_min=interval.K_min, K_max=interval.K_max, bound=float(bound),
        bound_applies=bool(bound_applies), synchronized=synchronized, hinf_error=hinf_error,
    )


def spectral_split(net: NetworkSystem, tol: Optional[Tolerances] = None) -> SpectralSplit:
    """
    Split a network with M = I along the Laplacian eigenvectors.

    L = T1 Lambda T1' with T2 = 1 / sqrt(n) spanning the kernel; eigenvalues
    within a relative gap of tol.multiplicity_gap are grouped and replaced
    by their mean. The transfer matrix is the sum of the average and stable
    parts.

    Args:
        net: Synchronizing network with M = I

    Returns:
        SpectralSplit
    """
    tol = tol or default_tolerances()
    _require_identity_inertia(net, "Spectral split")
    validate_network(net, tol)
    require_synchronization(net, tol)
    n = net.n
    vals, vecs = np.linalg.eigh((net.L + net.L.T) / 2)
    T1 = vecs[:, 1:]
    T2 = np.full((n, 1), 1.0 / np.sqrt(n))
    nonzero = vals[1:]

    # Group nearly equal eigenvalues
    groups: List[List[int]] = []
    for idx, value in enumerate(nonzero):
        if groups and value - nonzero[groups[-1][0]] <= tol.multiplicity_gap * max(abs(value), 1.0):
            groups[-1].append(idx)
        else:
            groups.append([idx])
    averaged = np.concatenate([np.full(len(g), nonzero[g].mean()) for g in groups]) if groups else np.zeros(0)

    agent = net.agent
    F_bar = T1.T @ net.F
    H_bar = net.H @ T1
    stable = StateSpace(
        np.kron(np.eye(n - 1), agent.A) - np.kron(np.diag(averaged), agent.B @ agent.C),
        np.kron(F_bar, agent.B),
        np.kron(H_bar, agent.C),
    )
    average = StateSpace(agent.A, np.kron(T2.T @ net.F, agent.B), np.kron(net.H @ T2, agent.C))
    return SpectralSplit(
        eigenvalues=averaged, multiplicities=[len(g) for g in groups], T1=T1, T2=T2,
        F_bar=F_bar, H_bar=H_bar, stable=stable, average=average,
    )


def _exact_factor(lam: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solution of Lambda X + X Lambda = rhs for diagonal Lambda."""
    return rhs / (lam[:, None] + lam[None, :])


def _block_factor(split: SpectralSplit, rhs: np.ndarray) -> np.ndarray:
    """Block-diagonal (s / 2 lambda_i) I with s = lambda_max(rhs), so Lambda Y + Y Lambda >= rhs."""
    s = float(np.linalg.eigvalsh(rhs).max(initial=0.0)) if rhs.size else 0.0
    s = max(s, np.finfo(float).eps * max(float(split.eigenvalues.max(initial=1.0)), 1.0))
    return np.diag(s / (2.0 * split.eigenvalues))


def network_generalized_gramians(
    split: SpectralSplit,
    cert: PassivityCertificate,
    dual: bool = False,
    tol: Optional[Tolerances] = None,
) -> KroneckerGramians:
    """
    Kronecker-structured generalized Gramians of the stable part.

    In primal mode X solves -Lambda X - X Lambda + F_bar F_bar' = 0 exactly
    and Y is the block-diagonal scalar construction; dual mode swaps the
    roles. A singular exact factor is shifted by eps I, which keeps the
    inequality. Both Kronecker residuals are verified on the assembled
    stable part.

    Args:
        split: Spectral split of the network
        cert: Passivity certificate with K_min and K_max

    Returns:
        KroneckerGramians
    """
    tol = tol or default_tolerances()
    lam = split.eigenvalues
    FF = split.F_bar @ split.F_bar.T
    HH = split.H_bar.T @ split.H_bar
    if dual:
        X, Y = _block_factor(split, FF), _exact_factor(lam, HH)
    else:
        X, Y = _exact_factor(lam, FF), _block_factor(split, HH)

    regularized = False
    for name in ("X", "Y"):
        factor = X if name == "X" else Y
        factor = (factor + factor.T) / 2
        scale = max(np.abs(factor).max(initial=0.0), np.finfo(float).tiny)
        smallest = np.linalg.eigvalsh(factor).min(initial=np.inf)
        if smallest <= tol.rank * scale:
            logger.warning(f"Gramian factor {name} is singular; regularizing")
            factor = factor + (tol.rank * scale - min(smallest, 0.0)) * np.eye(factor.shape[0])
            regularized = True
        if name == "X":
            X = factor
        else:
            Y = factor

    grams = KroneckerGramians(X=X, Y=Y, K_min=cert.K_min, K_max=cert.K_max, dual=dual,
                              regularized=regularized)
    P, Q = grams.kronecker()
    sys = split.stable
    res_x = float(np.linalg.eigvalsh(sys.A @ P + P @ sys.A.T + sys.B @ sys.B.T).max(initial=0.0))
    res_y = float(np.linalg.eigvalsh(sys.A.T @ Q + Q @ sys.A + sys.C.T @ sys.C).max(initial=0.0))
    scale = max(np.abs(sys.A).max(initial=0.0), 1.0) * max(np.abs(P).max(initial=0.0), np.abs(Q).max(initial=0.0), 1.0)
    if res_x > tol.rank * scale or res_y > tol.rank * scale:
        raise NumericalError(f"Kronecker Gramian residuals too large ({res_x:.3e}, {res_y:.3e})")
    grams.residual_X, grams.residual_Y = res_x, res_y
    logger.debug(f"Kronecker Gramian residuals {res_x:.3e}, {res_y:.3e}")
    return grams


def _diagonalizer(lam_hat: np.ndarray, sigma: np.ndarray, dual: bool):
    """
    U and ascending eigenvalues with lam_hat = U diag(eigs) U^{-1}.

    Sigma Lambda_hat (primal) or Lambda_hat Sigma (dual) is symmetric
    positive definite, so Lambda_hat is similar to a symmetric matrix.
    """
    root = np.sqrt(sigma)
    if dual:
        sym = lam_hat * root[None, :] / root[:, None]
    else:
        sym = root[:, None] * lam_hat / root[None, :]
    eigs, Q = np.linalg.eigh((sym + sym.T) / 2)
    U = root[:, None] * Q if dual else Q / root[:, None]
    return U, eigs


def simultaneous_reduce(
    net: NetworkSystem,
    r: int,
    k: int,
    cert: Optional[PassivityCertificate] = None,
    dual: bool = False,
    tol: Optional[Tolerances] = None,
) -> SimultaneousReduction:
    """
    Reduce the network to r vertices and the agents to order k.

    The stable part is balanced with (X (x) K_max^{-1}, Y (x) K_min),
    which factors into balancing (Lambda, F_bar, H_bar) with (X, Y) and the
    agent with (K_max^{-1}, K_min). The truncated network matrix is
    similar to a symmetric positive definite one, so together with the
    average module it is similar to a Laplacian realized from its spectrum.

    Args:
        net: Synchronizing network with M = I and passive minimal agents
        r: Reduced number of vertices, 2 <= r <= n
        k: Reduced agent order, 1 <= k <= ell
        cert: Passivity certificate, verified against the agent (symmetric case when omitted)
        dual: Use the dual Gramian construction

    Returns:
        SimultaneousReduction with both bounds and the actual errors
    """
    tol = tol or default_tolerances()
    _require_identity_inertia(net, "Simultaneous reduction")
    n = net.n
    agent = net.agent
    if not 2 <= r <= n:
        raise InvalidModelError(f"Reduced number of vertices must lie in 2..{n}, got {r}")
    if not 1 <= k <= agent.order:
        raise InvalidModelError(f"Reduced agent order must lie in 1..{agent.order}, got {k}")
    if cert is None:
        cert = passivity_certificate(agent, tol=tol)
    else:
        cert = passivity_certificate(agent, K=cert.K, K_min=cert.K_min, K_max=cert.K_max, tol=tol)
    split = spectral_split(net, tol)
    grams = network_generalized_gramians(split, cert, dual, tol)

    bal_net = balance(grams.X, grams.Y, tol)
    sigma = bal_net.ghsv
    lam_bal = bal_net.T @ split.Lambda @ bal_net.T_inv
    F_bal = bal_net.T @ split.F_bar
    H_bal = split.H_bar @ bal_net.T_inv
    # One vertex is taken by the average module
    m = r - 1
    lam_hat, F1, H1 = lam_bal[:m, :m], F_bal[:m], H_bal[:, :m]

    bal_agent = balance(np.linalg.inv(cert.K_max), cert.K_min, tol)
    tau = bal_agent.ghsv
    reduced_agent = _truncate_agent(agent, bal_agent, k)

    U, eigs = _diagonalizer(lam_hat, sigma[:m], dual)
    if eigs.min() <= 0:
        raise NumericalError(f"Reduced network matrix has a nonpositive eigenvalue {eigs.min():.3e}")
    realization = realize_laplacian(np.concatenate([[0.0], eigs]), tol)
    # E maps the sorted spectrum (zero first) onto blkdiag(Lambda_hat, 0)
    E = sla.block_diag(U, np.ones((1, 1)))
    E_sorted = np.hstack([E[:, m:], E[:, :m]])
    T_net = E_sorted @ realization.V.T
    T_net_inv = realization.V @ np.linalg.inv(E_sorted)
    F_stack = np.vstack([F1, split.T2.T @ net.F])
    H_stack = np.hstack([H1, net.H @ split.T2])

    check = check_laplacian(realization.L, tol)
    if not check.valid_connected:
        raise NumericalError(f"Realized Laplacian is invalid: {', '.join(check.problems)}")
    reduced = NetworkSystem(M=np.eye(r), L=realization.L, F=T_net_inv @ F_stack,
                            H=H_stack @ T_net, subsystem=reduced_agent, graph=check.graph)
    synchronized = check_synchronization(reduced, tol).synchronized
    if not synchronized:
        logger.warning("Reduced network does not synchronize")

    stable_bound = 2.0 * float(sigma[m:].sum() * tau.sum() + sigma[:m].sum() * tau[k:].sum())
    ones = np.ones(n)
    # |H 1 1' F| / n scales the agent error in the average module
    gain = np.linalg.norm(np.outer(net.H @ ones, ones @ net.F), 2) / n
    if k == agent.order or gain == 0.0:
        average_bound = 0.0
    elif is_hurwitz(agent.A, tol) and is_hurwitz(reduced_agent.A, tol):
        average_bound = float(gain * hinf_norm(stack_error(agent, reduced_agent), tol))
    else:
        average_bound = None

    stable_error = hinf_error = None
    if synchronized:
        err = stack_error(decompose(net)[0], decompose(reduced)[0])
        stable_error = hinf_norm(err, tol) if is_hurwitz(err.A, tol) else None
        hinf_error = network_hinf_error(net, reduced, tol)
    logger.info(f"Simultaneous reduction ({n}, {agent.order}) -> ({r}, {k}), "
                f"stable bound {stable_bound:.6e}, stable error {stable_error}")
    return SimultaneousReduction(
        reduced=reduced, subsystem=reduced_agent, sigma=sigma, tau=tau,
        stable_bound=stable_bound, average_bound=average_bound, stable_error=stable_error,
        hinf_error=hinf_error, synchronized=synchronized, gramians=grams,
    )
