"""
Unit tests for linear-system primitives: Lyapunov and Riccati solvers,
semistability, system norms and balanced truncation.
"""

import numpy as np
import pytest

from netred.config import Tolerances
from netred.errors import InfeasibleError, InvalidModelError, NotHurwitzError, NumericalError
from netred.linsys import (
    balance,
    frequency_sweep_norm,
    generalized_balanced_truncation,
    h2_norm,
    h2_norm_semistable,
    hinf_norm,
    is_hurwitz,
    is_minimal,
    lmi_gamma_bisect,
    pseudo_gramians,
    semistability_check,
    solve_lyapunov,
    solve_lyapunov_semistable,
    solve_riccati_interval,
    spectral_abscissa,
    stack_error,
    standard_gramians,
    transfer,
)
from netred.models import StateSpace


def first_order(a: float) -> StateSpace:
    """1/(s + a)."""
    return StateSpace([[-a]], [[1.0]], [[1.0]])


class TestLyapunov:
    """Test cases for Lyapunov solvers."""

    def test_scalar(self):
        """Test -2x + 1 = 0."""
        X = solve_lyapunov(np.array([[-1.0]]), np.array([[1.0]]))
        assert X[0, 0] == pytest.approx(0.5)

    def test_residual(self, rng):
        """Test the residual of a random stable solve."""
        A = -np.eye(4) * 2 + 0.3 * rng.standard_normal((4, 4))
        S = np.eye(4)
        X = solve_lyapunov(A, S)
        np.testing.assert_allclose(A @ X + X @ A.T + S, 0.0, atol=1e-10)
        np.testing.assert_allclose(X, X.T)

    def test_requires_hurwitz(self):
        """Test that an unstable matrix is rejected."""
        with pytest.raises(NotHurwitzError) as info:
            solve_lyapunov(np.array([[1.0]]), np.array([[1.0]]))
        assert info.value.abscissa == pytest.approx(1.0)

    def test_empty(self):
        """Test the zero-dimensional solve."""
        assert solve_lyapunov(np.zeros((0, 0)), np.zeros((0, 0))).shape == (0, 0)


class TestSemistability:
    """Test cases for semistability and the spectral projector."""

    @pytest.fixture
    def negative_laplacian(self):
        """A = -L for the two-vertex path."""
        return np.array([[-1.0, 1.0], [1.0, -1.0]])

    def test_semistable(self, negative_laplacian):
        """Test that -L is semistable with J = 11'/2."""
        verdict = semistability_check(negative_laplacian)
        assert verdict.semistable
        assert verdict.zero_multiplicity == 1
        np.testing.assert_allclose(verdict.J, np.full((2, 2), 0.5), atol=1e-12)

    def test_jordan_block_is_not_semistable(self):
        """Test that a nilpotent Jordan block fails."""
        verdict = semistability_check(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert not verdict.semistable
        assert "semisimple" in verdict.reason

    def test_unstable_is_not_semistable(self):
        """Test that a positive eigenvalue fails."""
        assert not semistability_check(np.array([[1.0]])).semistable

    def test_hurwitz_has_zero_projector(self):
        """Test that a Hurwitz matrix gives J = 0."""
        verdict = semistability_check(-np.eye(2))
        assert verdict.semistable
        np.testing.assert_array_equal(verdict.J, np.zeros((2, 2)))

    def test_semistable_lyapunov(self, negative_laplacian):
        """Test the semistable solve against the closed form."""
        b = np.array([[0.5], [-0.5]])
        X = solve_lyapunov_semistable(negative_laplacian, b @ b.T)
        np.testing.assert_allclose(X, 0.0625 * np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-12)

    def test_semistable_lyapunov_rejects_kernel_rhs(self, negative_laplacian):
        """Test that a right-hand side touching the kernel is rejected."""
        with pytest.raises(InvalidModelError):
            solve_lyapunov_semistable(negative_laplacian, np.ones((2, 2)))

    def test_pseudo_gramian(self, negative_laplacian):
        """Test the pseudo controllability Gramian of (-L, e1)."""
        sys = StateSpace(negative_laplacian, [[1.0], [0.0]], [[1.0, -1.0]])
        P = pseudo_gramians(sys).P
        np.testing.assert_allclose(P, 0.0625 * np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-12)


class TestNorms:
    """Test cases for H2 and H-infinity norms."""

    def test_h2_first_order(self):
        """Test ||1/(s+a)||_2 = 1/sqrt(2a)."""
        assert h2_norm(first_order(2.0)) == pytest.approx(0.5)

    def test_h2_semistable_defined(self):
        """Test the H2 norm of a semistable system with C J B = 0."""
        A = np.array([[-1.0, 1.0], [1.0, -1.0]])
        result = h2_norm_semistable(StateSpace(A, [[1.0], [0.0]], [[1.0, -1.0]]))
        assert result.defined
        assert result.value == pytest.approx(0.5)
        assert result.trace_P == pytest.approx(result.trace_Q)

    def test_h2_semistable_undefined(self):
        """Test that C J B != 0 leaves the norm undefined."""
        A = np.array([[-1.0, 1.0], [1.0, -1.0]])
        result = h2_norm_semistable(StateSpace(A, [[1.0], [0.0]], [[1.0, 0.0]]))
        assert not result.defined
        assert result.value is None

    def test_h2_matches_semistable_for_hurwitz(self):
        """Test that both H2 routines agree on a Hurwitz system."""
        sys = StateSpace([[-1.0, 0.5], [0.0, -3.0]], [[1.0], [1.0]], [[1.0, 2.0]])
        assert h2_norm_semistable(sys).value == pytest.approx(h2_norm(sys))

    def test_hinf_first_order(self):
        """Test ||1/(s+a)||_inf = 1/a."""
        assert hinf_norm(first_order(4.0)) == pytest.approx(0.25, rel=1e-5)

    def test_hinf_resonant(self):
        """Test a lightly damped second-order peak 1/(2 zeta)."""
        zeta = 0.05
        sys = StateSpace([[0.0, 1.0], [-1.0, -2 * zeta]], [[0.0], [1.0]], [[1.0, 0.0]])
        peak = 1.0 / (2 * zeta * np.sqrt(1 - zeta ** 2))
        assert hinf_norm(sys) == pytest.approx(peak, rel=1e-5)

    def test_hinf_dominates_sweep(self, rng):
        """Test that the norm bounds a frequency sweep from above."""
        A = -np.eye(3) * 1.5 + 0.5 * rng.standard_normal((3, 3))
        sys = StateSpace(A, rng.standard_normal((3, 2)), rng.standard_normal((2, 3)))
        if not is_hurwitz(A):
            pytest.skip("random matrix not Hurwitz")
        sweep = frequency_sweep_norm(sys, np.logspace(-3, 3, 400))
        assert hinf_norm(sys) >= sweep * (1 - 1e-6)

    def test_hinf_zero_input(self):
        """Test that a system without input has zero gain."""
        sys = StateSpace([[-1.0]], np.zeros((1, 1)), [[1.0]])
        assert hinf_norm(sys) == 0.0

    def test_transfer(self):
        """Test evaluating the transfer function."""
        G = transfer(first_order(1.0), 1j)
        assert G[0, 0] == pytest.approx(1.0 / (1.0 + 1j))

    def test_stack_error(self):
        """Test that identical systems give a zero error."""
        err = stack_error(first_order(1.0), first_order(1.0))
        assert err.order == 2
        assert h2_norm(err) == pytest.approx(0.0, abs=1e-12)

    def test_stack_error_shape_mismatch(self):
        """Test that port counts must match."""
        other = StateSpace([[-1.0]], [[1.0, 1.0]], [[1.0]])
        with pytest.raises(InvalidModelError):
            stack_error(first_order(1.0), other)

    def test_spectral_abscissa(self):
        """Test the spectral abscissa."""
        assert spectral_abscissa(np.diag([-1.0, -3.0])) == pytest.approx(-1.0)
        assert spectral_abscissa(np.zeros((0, 0))) == -np.inf


class TestBalancedTruncation:
    """Test cases for balancing and truncation."""

    @pytest.fixture
    def system(self):
        """Diagonal system with well separated modes."""
        return StateSpace(np.diag([-1.0, -10.0, -100.0]), [[1.0], [1.0], [1.0]], [[1.0, 1.0, 1.0]])

    def test_balanced_gramians_equal_diagonal(self, system):
        """Test T P T' = T^{-T} Q T^{-1} = diag(ghsv)."""
        gramians = standard_gramians(system)
        bal = balance(gramians.P, gramians.Q)
        np.testing.assert_allclose(bal.T @ gramians.P @ bal.T.T, np.diag(bal.ghsv), atol=1e-12)
        np.testing.assert_allclose(bal.T_inv.T @ gramians.Q @ bal.T_inv, np.diag(bal.ghsv), atol=1e-12)
        np.testing.assert_allclose(bal.T @ bal.T_inv, np.eye(3), atol=1e-10)
        assert np.all(np.diff(bal.ghsv) <= 0)

    def test_truncation_bound(self, system):
        """Test that the H-infinity error respects twice the tail sum."""
        result = generalized_balanced_truncation(system, standard_gramians(system), 1)
        error = hinf_norm(stack_error(system, result.reduced))
        assert result.reduced.order == 1
        assert error <= result.bound * (1 + 1e-6)

    def test_full_order_is_exact(self, system):
        """Test that keeping every state gives a zero bound."""
        result = generalized_balanced_truncation(system, standard_gramians(system), 3)
        assert result.bound == 0.0

    def test_order_out_of_range(self, system):
        """Test that the order must lie in 1..n."""
        with pytest.raises(InvalidModelError):
            generalized_balanced_truncation(system, standard_gramians(system), 0)

    def test_singular_gramian(self):
        """Test that a singular controllability Gramian is infeasible."""
        with pytest.raises(InfeasibleError):
            balance(np.diag([1.0, 0.0]), np.eye(2))


class TestRiccati:
    """Test cases for the extremal Riccati solutions."""

    def test_scalar_interval(self):
        """Test K^2 - 4K + 1 = 0 with roots 2 -/+ sqrt(3)."""
        result = solve_riccati_interval(np.array([[-2.0]]), np.array([[1.0]]), np.array([[1.0]]), 1.0)
        assert result.feasible
        assert result.K_min[0, 0] == pytest.approx(2 - np.sqrt(3))
        assert result.K_max[0, 0] == pytest.approx(2 + np.sqrt(3))

    def test_scalar_infeasible(self):
        """Test that a large scaling leaves no real solution."""
        result = solve_riccati_interval(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]), 2.0)
        assert not result.feasible
        assert result.reason

    def test_requires_hurwitz(self):
        """Test that A must be Hurwitz."""
        with pytest.raises(NotHurwitzError):
            solve_riccati_interval(np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]]), 1.0)

    def test_two_state_residual(self, passive_agent):
        """Test that both solutions satisfy the equation to the residual tolerance."""
        A, B, C = passive_agent.A, passive_agent.B, passive_agent.C
        result = solve_riccati_interval(A, B, C, 0.5)
        assert result.feasible
        for K in (result.K_min, result.K_max):
            residual = A.T @ K + K @ A + C.T @ C + 0.25 * K @ B @ B.T @ K
            assert np.abs(residual).max() <= 1e-9 * max(np.abs(K).max(), 1.0) ** 2

    def test_residual_tolerance_enforced(self, passive_agent):
        """Test that a solution missing the residual tolerance raises."""
        A, B, C = passive_agent.A, passive_agent.B, passive_agent.C
        with pytest.raises(NumericalError, match="residual"):
            solve_riccati_interval(A, B, C, 0.5, Tolerances(riccati_residual=1e-300))


class TestLmiBisection:
    """Test cases for the gamma bisection."""

    def test_scalar_threshold(self):
        """Test [[-1, 1], [1, -gamma]] < 0 iff gamma > 1."""
        gamma = lmi_gamma_bisect(np.array([[-1.0, 1.0], [1.0, 0.0]]), [1, 1], [False, True])
        assert gamma == pytest.approx(1.0, rel=1e-5)

    def test_free_block_must_be_negative(self):
        """Test that a non-negative gamma-free block is infeasible."""
        with pytest.raises(InfeasibleError):
            lmi_gamma_bisect(np.array([[1.0, 0.0], [0.0, 0.0]]), [1, 1], [False, True])

    def test_block_structure_mismatch(self):
        """Test that block sizes must cover the matrix."""
        with pytest.raises(InvalidModelError):
            lmi_gamma_bisect(np.zeros((2, 2)), [1], [True])


class TestMinimality:
    """Test cases for the Kalman rank test."""

    def test_minimal(self, passive_agent):
        """Test a controllable and observable agent."""
        assert is_minimal(passive_agent)

    def test_uncontrollable(self):
        """Test a decoupled unreachable mode."""
        sys = StateSpace(np.diag([-1.0, -2.0]), [[1.0], [0.0]], [[1.0, 1.0]])
        assert not is_minimal(sys)
