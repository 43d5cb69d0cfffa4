"""
Linear-system kernels.
Lyapunov and Riccati solvers, semistability, pseudo Gramians, H2 and
H-infinity norms, generalized balanced truncation and LMI bisection.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from netred.config import Tolerances, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError, NotHurwitzError, NumericalError
from netred.models import GramianPair, StateSpace, as_matrix


logger = logging.getLogger(__name__)


@dataclass
class SemistabilityVerdict:
    """
    Result of semistability_check.

    Attributes:
        semistable: Zero eigenvalues semisimple and all others in the open left half-plane
        J: Spectral projector onto ker(A) along im(A), when semistable
        zero_multiplicity: Algebraic multiplicity of the zero eigenvalue
        reason: Why the check failed, empty when it passed
    """
    semistable: bool
    J: Optional[np.ndarray]
    zero_multiplicity: int
    reason: str = ""


@dataclass
class H2Result:
    """
    H2 norm of a semistable system.

    Attributes:
        value: The norm, None when the system is not in H2
        defined: False when C J B != 0
        trace_P: Tr(C P C') computed from the controllability Gramian
        trace_Q: Tr(B' Q B) computed from the observability Gramian
    """
    value: Optional[float]
    defined: bool
    trace_P: Optional[float] = None
    trace_Q: Optional[float] = None


@dataclass
class BalancedRealization:
    """
    Balancing transform of a Gramian pair.

    Attributes:
        T: Transform with T P T' = T^{-T} Q T^{-1} = diag(ghsv)
        T_inv: Inverse of T
        ghsv: Generalized Hankel singular values, nonincreasing
    """
    T: np.ndarray
    T_inv: np.ndarray
    ghsv: np.ndarray


@dataclass
class TruncationResult:
    """
    Outcome of generalized balanced truncation.

    Attributes:
        reduced: Truncated system
        ghsv: All generalized Hankel singular values
        bound: Twice the sum of the discarded values
        balancing: The balancing transform used
    """
    reduced: StateSpace
    ghsv: np.ndarray
    bound: float
    balancing: BalancedRealization


@dataclass
class RiccatiInterval:
    """
    Extremal solutions of A'K + KA + C'C + rho^2 K B B' K = 0.

    Attributes:
        feasible: Whether positive definite solutions exist
        K_min: Stabilizing (minimal) solution
        K_max: Anti-stabilizing (maximal) solution
        reason: Why the equation is infeasible
    """
    feasible: bool
    K_min: Optional[np.ndarray] = None
    K_max: Optional[np.ndarray] = None
    reason: str = ""


def _norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(X)) if X.size else 0.0


def spectral_abscissa(A: np.ndarray) -> float:
    """Largest real part of the eigenvalues of A (-inf for an empty matrix)."""
    if A.size == 0:
        return -np.inf
    return float(np.linalg.eigvals(A).real.max())


def is_hurwitz(A: np.ndarray, tol: Optional[Tolerances] = None) -> bool:
    tol = tol or default_tolerances()
    return A.size == 0 or spectral_abscissa(A) < -tol.hurwitz


def _require_hurwitz(A: np.ndarray, what: str, tol: Tolerances) -> None:
    alpha = spectral_abscissa(A)
    if A.size and not alpha < -tol.hurwitz:
        raise NotHurwitzError(f"{what}: matrix is not Hurwitz", alpha)


def transfer(sys: StateSpace, s: complex) -> np.ndarray:
    """
    Evaluate C (sI - A)^{-1} B + D.

    Args:
        sys: State-space system
        s: Complex frequency

    Returns:
        outputs x inputs complex matrix
    """
    if sys.order == 0:
        return sys.D.astype(complex)
    resolvent = np.linalg.solve(s * np.eye(sys.order) - sys.A, sys.B.astype(complex))
    return sys.C @ resolvent + sys.D


def solve_lyapunov(A: np.ndarray, S: np.ndarray, tol: Optional[Tolerances] = None) -> np.ndarray:
    """
    Solve A X + X A' + S = 0 for Hurwitz A (Bartels-Stewart).

    Args:
        A: Hurwitz matrix
        S: Symmetric right-hand side

    Returns:
        Symmetric solution X
    """
    tol = tol or default_tolerances()
    A = np.asarray(A, dtype=float)
    S = np.asarray(S, dtype=float)
    if A.size == 0:
        return np.zeros((0, 0))
    _require_hurwitz(A, "solve_lyapunov", tol)
    X = sla.solve_continuous_lyapunov(A, -S)
    X = (X + X.T) / 2
    _check_residual(A, X, S, tol)
    return X


def _check_residual(A: np.ndarray, X: np.ndarray, S: np.ndarray, tol: Tolerances) -> None:
    residual = _norm(A @ X + X @ A.T + S)
    scale = 2 * _norm(A) * _norm(X) + _norm(S)
    if residual > tol.lyapunov_residual * max(scale, np.finfo(float).tiny) * max(1, A.shape[0]):
        raise NumericalError(f"Lyapunov residual {residual:.3e} exceeds tolerance (scale {scale:.3e})")
    logger.debug(f"Lyapunov residual {residual:.3e}")


def _kernel_and_image(A: np.ndarray, tol: Tolerances) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bases of ker(A), im(A) and ker(A') from one SVD."""
    U, s, Vt = np.linalg.svd(A)
    threshold = tol.rank * max(s.max(initial=0.0), 1.0)
    rank = int((s > threshold).sum())
    return Vt[rank:].T, U[:, :rank], U[:, rank:]


def semistability_check(A, tol: Optional[Tolerances] = None) -> SemistabilityVerdict:
    """
    Semistability test and spectral projector.

    A is semistable when its zero eigenvalue (if any) is semisimple and every
    other eigenvalue has negative real part. J projects onto ker(A) along im(A).

    Args:
        A: Square matrix

    Returns:
        SemistabilityVerdict
    """
    tol = tol or default_tolerances()
    A = as_matrix(A, "A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise InvalidModelError(f"A must be square, got {A.shape}")
    scale = max(_norm(A), 1.0)
    eigs = np.linalg.eigvals(A)
    is_zero = np.abs(eigs) <= tol.rank * scale
    algebraic = int(is_zero.sum())
    others = eigs[~is_zero]
    if others.size and others.real.max() >= -tol.hurwitz * scale:
        return SemistabilityVerdict(False, None, algebraic,
                                    f"eigenvalue with real part {others.real.max():.3e} off the open left half-plane")

    # Semisimple zero eigenvalue: geometric multiplicity must match
    N, _, W = _kernel_and_image(A, tol)
    geometric = N.shape[1]
    if geometric != algebraic:
        return SemistabilityVerdict(False, None, algebraic,
                                    f"zero eigenvalue not semisimple (algebraic {algebraic}, geometric {geometric})")
    if algebraic == 0:
        return SemistabilityVerdict(True, np.zeros((n, n)), 0)
    J = N @ np.linalg.solve(W.T @ N, W.T)
    return SemistabilityVerdict(True, J, algebraic)


def solve_lyapunov_semistable(A: np.ndarray, S: np.ndarray, tol: Optional[Tolerances] = None) -> np.ndarray:
    """
    Solve A X + X A' + S = 0 for semistable A with S = (I - J) S (I - J)'.

    Works in a basis splitting im(A) and ker(A): the Hurwitz block is solved
    with Bartels-Stewart, the coupling block vanishes and the kernel block is
    set to zero.

    Args:
        A: Semistable matrix
        S: Symmetric right-hand side supported on im(A)

    Returns:
        Symmetric solution with zero kernel block
    """
    tol = tol or default_tolerances()
    A = as_matrix(A, "A")
    S = as_matrix(S, "S")
    verdict = semistability_check(A, tol)
    if not verdict.semistable:
        raise InfeasibleError(f"solve_lyapunov_semistable: {verdict.reason}")
    if verdict.zero_multiplicity == 0:
        return solve_lyapunov(A, S, tol)

    N, image, _ = _kernel_and_image(A, tol)
    k = image.shape[1]
    # Columns: im(A) first, then ker(A)
    T = np.hstack([image, N])
    T_inv = np.linalg.inv(T)
    A_s = (T_inv @ A @ T)[:k, :k]
    S_t = T_inv @ S @ T_inv.T
    leak = _norm(S_t[k:, :]) if S_t.size else 0.0
    if leak > tol.rank * max(_norm(S), 1.0) * 1e2:
        raise InvalidModelError(f"Right-hand side is not supported on im(A) (kernel part {leak:.3e})")
    Y = np.zeros_like(S_t)
    if k:
        Y[:k, :k] = solve_lyapunov(A_s, S_t[:k, :k], tol)
    X = T @ Y @ T.T
    return (X + X.T) / 2


def pseudo_gramians(sys: StateSpace, tol: Optional[Tolerances] = None) -> GramianPair:
    """
    Pseudo controllability and observability Gramians of a semistable system.

    P = P~ - J P~ J' with A P~ + P~ A' + (I - J) B B' (I - J)' = 0, and dually
    for Q with A' and C.

    Args:
        sys: System with semistable A

    Returns:
        GramianPair of kind 'pseudo'
    """
    tol = tol or default_tolerances()
    verdict = semistability_check(sys.A, tol)
    if not verdict.semistable:
        raise InfeasibleError(f"pseudo_gramians: {verdict.reason}")
    J = verdict.J
    I = np.eye(sys.order)
    Bp = (I - J) @ sys.B
    Cp = sys.C @ (I - J)
    P_tilde = solve_lyapunov_semistable(sys.A, Bp @ Bp.T, tol)
    Q_tilde = solve_lyapunov_semistable(sys.A.T, Cp.T @ Cp, tol)
    P = P_tilde - J @ P_tilde @ J.T
    Q = Q_tilde - J.T @ Q_tilde @ J
    return GramianPair(P=(P + P.T) / 2, Q=(Q + Q.T) / 2, kind="pseudo")


def standard_gramians(sys: StateSpace, tol: Optional[Tolerances] = None) -> GramianPair:
    """Controllability and observability Gramians of a Hurwitz system."""
    tol = tol or default_tolerances()
    P = solve_lyapunov(sys.A, sys.B @ sys.B.T, tol)
    Q = solve_lyapunov(sys.A.T, sys.C.T @ sys.C, tol)
    return GramianPair(P=P, Q=Q, kind="standard")


def h2_norm_semistable(sys: StateSpace, tol: Optional[Tolerances] = None) -> H2Result:
    """
    H2 norm of a semistable system.

    The norm exists iff C J B = 0; it then equals sqrt(Tr(C P C')) with the
    pseudo controllability Gramian, and Tr(B' Q B) must agree.

    Args:
        sys: System with semistable A and zero feedthrough

    Returns:
        H2Result (value None when the norm is undefined)
    """
    tol = tol or default_tolerances()
    if np.any(sys.D):
        return H2Result(value=None, defined=False)
    if sys.order == 0:
        return H2Result(value=0.0, defined=True, trace_P=0.0, trace_Q=0.0)
    verdict = semistability_check(sys.A, tol)
    if not verdict.semistable:
        raise InfeasibleError(f"h2_norm_semistable: {verdict.reason}")
    leak = _norm(sys.C @ verdict.J @ sys.B)
    scale = max(_norm(sys.C) * max(_norm(verdict.J), 1.0) * _norm(sys.B), np.finfo(float).tiny)
    if leak > tol.h2_defined * scale:
        logger.info(f"H2 norm undefined: |C J B| = {leak:.3e}")
        return H2Result(value=None, defined=False)

    gramians = pseudo_gramians(sys, tol)
    trace_P = float(np.trace(sys.C @ gramians.P @ sys.C.T))
    trace_Q = float(np.trace(sys.B.T @ gramians.Q @ sys.B))
    if abs(trace_P - trace_Q) > tol.trace_agreement * max(abs(trace_P), abs(trace_Q), 1e-300):
        logger.warning(f"H2 trace formulas disagree: {trace_P:.12e} vs {trace_Q:.12e}")
    return H2Result(value=float(np.sqrt(max(trace_P, 0.0))), defined=True,
                    trace_P=trace_P, trace_Q=trace_Q)


def h2_norm(sys: StateSpace, tol: Optional[Tolerances] = None) -> float:
    """H2 norm of a Hurwitz system with zero feedthrough."""
    tol = tol or default_tolerances()
    if sys.order == 0:
        return 0.0
    P = solve_lyapunov(sys.A, sys.B @ sys.B.T, tol)
    return float(np.sqrt(max(np.trace(sys.C @ P @ sys.C.T), 0.0)))


def _sigma_max(G: np.ndarray) -> float:
    return float(np.linalg.svd(G, compute_uv=False).max(initial=0.0)) if G.size else 0.0


def frequency_sweep_norm(sys: StateSpace, omegas: Iterable[float]) -> float:
    """
    Largest singular value of G(j omega) over a frequency grid.

    A lower estimate of the H-infinity norm, for diagnostics.
    """
    return max((_sigma_max(transfer(sys, 1j * w)) for w in omegas), default=0.0)


def _imaginary_frequencies(sys: StateSpace, gamma: float, tol: Tolerances) -> List[float]:
    """Frequencies where the gamma-Hamiltonian has imaginary-axis eigenvalues."""
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    R = gamma ** 2 * np.eye(D.shape[1]) - D.T @ D
    S = gamma ** 2 * np.eye(D.shape[0]) - D @ D.T
    R_inv = np.linalg.inv(R)
    Ah = A + B @ R_inv @ D.T @ C
    ham = np.block([
        [Ah, gamma * B @ R_inv @ B.T],
        [-gamma * C.T @ np.linalg.solve(S, C), -Ah.T],
    ])
    eigs = np.linalg.eigvals(ham)
    on_axis = np.abs(eigs.real) <= tol.hamiltonian_axis * np.maximum(1.0, np.abs(eigs))
    return sorted({abs(float(w)) for w in eigs[on_axis].imag})


def hinf_norm(sys: StateSpace, tol: Optional[Tolerances] = None) -> float:
    """
    H-infinity norm of a Hurwitz system.

    Bisection on gamma using the imaginary-axis eigenvalues of the
    Hamiltonian; frequencies found on the axis also raise the lower bound.

    Args:
        sys: Hurwitz system

    Returns:
        The norm to relative accuracy tol.hinf_rel
    """
    tol = tol or default_tolerances()
    d_norm = _sigma_max(sys.D)
    if sys.order == 0 or not np.any(sys.B) or not np.any(sys.C):
        return d_norm
    _require_hurwitz(sys.A, "hinf_norm", tol)

    eigs = np.linalg.eigvals(sys.A)
    candidates = {0.0} | {abs(float(e)) for e in np.abs(eigs)} | {abs(float(e.imag)) for e in eigs}
    lo = max(d_norm, frequency_sweep_norm(sys, candidates))
    if lo <= np.finfo(float).tiny:
        lo = frequency_sweep_norm(sys, np.logspace(-6, 6, 241))
        if lo <= np.finfo(float).tiny:
            return 0.0

    # Grow hi until the Hamiltonian has no imaginary-axis eigenvalues
    hi = max(2.0 * lo, lo + 1e-12)
    for _ in range(200):
        freqs = _imaginary_frequencies(sys, hi, tol)
        if not freqs:
            break
        lo = max(lo, hi, frequency_sweep_norm(sys, freqs))
        hi = 2.0 * lo
    else:
        raise NumericalError("hinf_norm: no upper bound found")

    iterations = 0
    while hi - lo > tol.hinf_rel * hi:
        mid = 0.5 * (lo + hi)
        freqs = _imaginary_frequencies(sys, mid, tol)
        if freqs:
            # Midpoints of the crossing intervals
            peaks = [0.5 * (a + b) for a, b in zip(freqs, freqs[1:])] + freqs
            lo = max(mid, frequency_sweep_norm(sys, peaks))
        else:
            hi = mid
        iterations += 1
        if iterations > 200:
            raise NumericalError("hinf_norm: bisection did not converge")
    logger.debug(f"H-infinity norm in [{lo:.9e}, {hi:.9e}] after {iterations} bisections")
    return 0.5 * (lo + hi)


def stack_error(sys1: StateSpace, sys2: StateSpace) -> StateSpace:
    """
    Error system of sys1 - sys2 driven by the same input.

    Returns:
        StateSpace with block-diagonal A, stacked B and C = [C1, -C2]
    """
    if sys1.inputs != sys2.inputs or sys1.outputs != sys2.outputs:
        raise InvalidModelError("Systems must have the same numbers of inputs and outputs")
    return StateSpace(
        sla.block_diag(sys1.A, sys2.A),
        np.vstack([sys1.B, sys2.B]),
        np.hstack([sys1.C, -sys2.C]),
        sys1.D - sys2.D,
    )


def balance(P: np.ndarray, Q: np.ndarray, tol: Optional[Tolerances] = None) -> BalancedRealization:
    """
    Square-root balancing of a positive definite Gramian pair.

    With P = L L' and L' Q L = U S^2 U', T = S^{1/2} U' L^{-1} gives
    T P T' = T^{-T} Q T^{-1} = S. Ties keep the earlier index.

    Args:
        P: Controllability-type Gramian (positive definite)
        Q: Observability-type Gramian (positive definite)

    Returns:
        BalancedRealization
    """
    tol = tol or default_tolerances()
    P = (np.asarray(P, dtype=float) + np.asarray(P, dtype=float).T) / 2
    Q = (np.asarray(Q, dtype=float) + np.asarray(Q, dtype=float).T) / 2
    try:
        Lp = np.linalg.cholesky(P)
    except np.linalg.LinAlgError as e:
        raise InfeasibleError("Controllability Gramian is not positive definite") from e
    eigs, U = np.linalg.eigh(Lp.T @ Q @ Lp)
    # Descending order
    order = np.argsort(-eigs, kind="stable")
    eigs, U = eigs[order], U[:, order]
    if eigs.size and eigs[-1] <= tol.rank ** 2 * max(eigs[0], np.finfo(float).tiny):
        raise InfeasibleError(f"Gramians are singular or indefinite (smallest product eigenvalue {eigs[-1]:.3e})")
    ghsv = np.sqrt(eigs)
    root = np.sqrt(ghsv)
    T = (root[:, None] * U.T) @ np.linalg.inv(Lp)
    T_inv = Lp @ (U / root[None, :])
    return BalancedRealization(T=T, T_inv=T_inv, ghsv=ghsv)


def generalized_balanced_truncation(
    sys: StateSpace,
    gramians: GramianPair,
    r: int,
    tol: Optional[Tolerances] = None,
) -> TruncationResult:
    """
    Balanced truncation with (generalized) Gramians.

    Args:
        sys: System to reduce
        gramians: P and Q satisfying the Lyapunov inequalities of sys
        r: Reduced order, 1 <= r <= order

    Returns:
        TruncationResult with bound 2 * sum of discarded GHSVs
    """
    tol = tol or default_tolerances()
    if not 1 <= r <= sys.order:
        raise InvalidModelError(f"Reduced order must lie in 1..{sys.order}, got {r}")
    bal = balance(gramians.P, gramians.Q, tol)
    T1, Ti1 = bal.T[:r], bal.T_inv[:, :r]
    reduced = StateSpace(T1 @ sys.A @ Ti1, T1 @ sys.B, sys.C @ Ti1, sys.D)
    bound = 2.0 * float(bal.ghsv[r:].sum())
    logger.debug(f"Balanced truncation {sys.order} -> {r}, bound {bound:.6e}")
    return TruncationResult(reduced=reduced, ghsv=bal.ghsv, bound=bound, balancing=bal)


def _riccati_from_subspace(Z: np.ndarray, n: int, tol: Tolerances) -> Optional[np.ndarray]:
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U1) > 1.0 / tol.rank ** 1.5:
        return None
    K = np.linalg.solve(U1.T, U2.T).T
    return (K + K.T) / 2


def solve_riccati_interval(
    A: np.ndarray,
    B: np.ndarray,
    C: np.ndarray,
    rho: float,
    tol: Optional[Tolerances] = None,
) -> RiccatiInterval:
    """
    Minimal and maximal solutions of A'K + KA + C'C + rho^2 K B B' K = 0.

    Both come from ordered real Schur forms of the Hamiltonian
    [[A, rho^2 B B'], [-C'C, -A']]: the stable invariant subspace gives the
    minimal solution, the anti-stable one the maximal.

    Args:
        A: Hurwitz matrix
        B, C: Input and output matrices
        rho: Positive scaling

    Returns:
        RiccatiInterval (infeasible when the Hamiltonian has imaginary-axis eigenvalues)

    Raises:
        NumericalError: If a solution misses the relative residual tolerance
    """
    tol = tol or default_tolerances()
    A, B, C = as_matrix(A, "A"), as_matrix(B, "B"), as_matrix(C, "C", vector="row")
    n = A.shape[0]
    _require_hurwitz(A, "solve_riccati_interval", tol)
    ham = np.block([[A, rho ** 2 * B @ B.T], [-C.T @ C, -A.T]])
    eigs = np.linalg.eigvals(ham)
    axis = np.abs(eigs.real).min()
    if axis <= tol.hamiltonian_axis * max(_norm(ham), 1.0):
        return RiccatiInterval(False, reason=f"Hamiltonian has imaginary-axis eigenvalues (|Re| = {axis:.3e})")

    # K = U2 U1^{-1} from each invariant subspace
    _, Z_lhp, sdim_l = sla.schur(ham, output="real", sort="lhp")
    _, Z_rhp, sdim_r = sla.schur(ham, output="real", sort="rhp")
    if sdim_l != n or sdim_r != n:
        return RiccatiInterval(False, reason="stable/anti-stable subspaces have the wrong dimension")
    K_min = _riccati_from_subspace(Z_lhp, n, tol)
    K_max = _riccati_from_subspace(Z_rhp, n, tol)
    if K_min is None or K_max is None:
        return RiccatiInterval(False, reason="invariant subspace is not a graph (no extremal solution)")
    for name, K in (("minimal", K_min), ("maximal", K_max)):
        if np.linalg.eigvalsh(K).min() <= 0:
            return RiccatiInterval(False, reason=f"{name} solution is not positive definite")
        residual = _norm(A.T @ K + K @ A + C.T @ C + rho ** 2 * K @ B @ B.T @ K)
        scale = 2 * _norm(A) * _norm(K) + _norm(C) ** 2 + rho ** 2 * _norm(B) ** 2 * _norm(K) ** 2
        logger.debug(f"Riccati {name} solution residual {residual:.3e} (scale {scale:.3e})")
        if residual > tol.riccati_residual * max(scale, np.finfo(float).tiny):
            raise NumericalError(f"Riccati {name} solution residual {residual:.3e} exceeds "
                                 f"{tol.riccati_residual:.1e} relative to {scale:.3e}")
    return RiccatiInterval(True, K_min=K_min, K_max=K_max)


def lmi_gamma_bisect(
    M0: np.ndarray,
    block_sizes: Sequence[int],
    gamma_blocks: Sequence[bool],
    tol: Optional[Tolerances] = None,
    bracket: Tuple[float, float] = (1e-8, 1e8),
) -> float:
    """
    Smallest gamma with M0 - gamma * D negative definite.

    D is block diagonal with identity blocks where gamma_blocks is True and
    zero blocks elsewhere. Feasibility is monotone in gamma, so a
    logarithmic bisection on the bracket finds the threshold.

    Args:
        M0: Symmetric matrix (the LMI at gamma = 0)
        block_sizes: Sizes of the diagonal blocks
        gamma_blocks: Which blocks carry -gamma * I

    Returns:
        Feasible gamma within relative accuracy tol.lmi_rel
    """
    tol = tol or default_tolerances()
    M0 = (np.asarray(M0, dtype=float) + np.asarray(M0, dtype=float).T) / 2
    if sum(block_sizes) != M0.shape[0] or len(block_sizes) != len(gamma_blocks):
        raise InvalidModelError("Block structure does not match the LMI matrix")
    mask = np.concatenate([np.full(size, bool(g)) for size, g in zip(block_sizes, gamma_blocks)])
    D = np.diag(mask.astype(float))

    free = ~mask
    if free.any() and np.linalg.eigvalsh(M0[np.ix_(free, free)]).max() >= -tol.lmi_margin:
        raise InfeasibleError("LMI infeasible: gamma-free block is not negative definite")

    def feasible(gamma: float) -> bool:
        return np.linalg.eigvalsh(M0 - gamma * D).max() < -tol.lmi_margin

    lo, hi = bracket
    if feasible(lo):
        return lo
    if not feasible(hi):
        raise InfeasibleError(f"LMI infeasible for every gamma up to {hi:.1e}")
    while hi - lo > tol.lmi_rel * hi:
        # Geometric steps across decades, arithmetic near the threshold
        mid = np.sqrt(lo * hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    logger.debug(f"LMI gamma bisection converged to {hi:.9e}")
    return hi


def is_minimal(sys: StateSpace, tol: Optional[Tolerances] = None) -> bool:
    """Kalman rank test for controllability and observability."""
    tol = tol or default_tolerances()
    n = sys.order
    ctrb = np.hstack([np.linalg.matrix_power(sys.A, k) @ sys.B for k in range(n)])
    obsv = np.vstack([sys.C @ np.linalg.matrix_power(sys.A, k) for k in range(n)])

    def rank(X: np.ndarray) -> int:
        s = np.linalg.svd(X, compute_uv=False)
        return int((s > tol.minimality * max(s.max(initial=0.0), 1e-300)).sum())

    return rank(ctrb) == n and rank(obsv) == n
