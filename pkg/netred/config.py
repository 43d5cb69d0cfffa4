"""
Configuration for netred.
Tolerances and optimizer settings live in frozen dataclasses; the
NETRED_TOL environment variable overrides the tolerance bundle.
"""

import os
from dataclasses import dataclass, fields, replace
from typing import Mapping, Optional

from netred.errors import InvalidModelError


ENV_VAR = "NETRED_TOL"


@dataclass(frozen=True)
class Tolerances:
    """
    Numerical tolerances used across the library.

    Attributes:
        laplacian: Relative tolerance for Laplacian structure checks
        rank: Relative singular-value threshold for rank and kernel decisions
        lyapunov_residual: Relative residual accepted from Lyapunov solves
        h2_defined: Relative threshold for the C J B = 0 test
        trace_agreement: Relative agreement required between the two H2 trace formulas
        hamiltonian_axis: Real-part threshold for imaginary-axis eigenvalues
        riccati_residual: Relative residual accepted from Riccati solutions
        hinf_rel: Relative accuracy of the H-infinity bisection
        lmi_margin: Strictness margin for LMI feasibility
        lmi_rel: Relative accuracy of the LMI gamma bisection
        passivity: Tolerance for passivity certificate checks
        minimality: Relative threshold for Kalman rank tests
        hurwitz: Margin below zero required of a spectral abscissa
        aep: Absolute tolerance for almost equitable partitions
        multiplicity_gap: Relative gap below which eigenvalues share a block
        feasibility: Relative margin for Gramian inequality residuals
    """
    laplacian: float = 1e-9
    rank: float = 1e-8
    lyapunov_residual: float = 1e-9
    h2_defined: float = 1e-8
    trace_agreement: float = 1e-7
    hamiltonian_axis: float = 1e-8
    riccati_residual: float = 1e-7
    hinf_rel: float = 1e-6
    lmi_margin: float = 1e-10
    lmi_rel: float = 1e-6
    passivity: float = 1e-9
    minimality: float = 1e-9
    hurwitz: float = 1e-9
    aep: float = 1e-9
    multiplicity_gap: float = 1e-8
    feasibility: float = 1e-9

    def scaled(self, factor: float) -> "Tolerances":
        """
        Return a copy with every tolerance multiplied by factor.

        Args:
            factor: Positive scale factor

        Returns:
            Scaled Tolerances
        """
        if factor <= 0:
            raise InvalidModelError(f"Tolerance scale must be positive, got {factor}")
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


def parse_tolerances(text: str, base: Optional[Tolerances] = None) -> Tolerances:
    """
    Parse a tolerance override string.

    Accepts either a bare float (scales every tolerance) or comma-separated
    name=value pairs overriding individual fields.

    Args:
        text: Override string, e.g. "1e-2" or "laplacian=1e-8,rank=1e-7"
        base: Tolerances to start from (defaults to the built-in values)

    Returns:
        Tolerances with the overrides applied
    """
    base = base or Tolerances()
    text = text.strip()
    if not text:
        return base
    try:
        return base.scaled(float(text))
    except ValueError:
        pass

    known = {f.name for f in fields(Tolerances)}
    overrides = {}
    for part in text.split(","):
        if "=" not in part:
            raise InvalidModelError(f"Malformed {ENV_VAR} entry: '{part}'")
        name, value = (s.strip() for s in part.split("=", 1))
        if name not in known:
            raise InvalidModelError(f"Unknown tolerance '{name}' in {ENV_VAR}")
        try:
            overrides[name] = float(value)
        except ValueError as e:
            raise InvalidModelError(f"Tolerance '{name}' is not a number: '{value}'") from e
        if overrides[name] <= 0:
            raise InvalidModelError(f"Tolerance '{name}' must be positive")
    return replace(base, **overrides)


def default_tolerances(env: Optional[Mapping[str, str]] = None) -> Tolerances:
    """
    Tolerances in effect, honouring the NETRED_TOL environment variable.

    Args:
        env: Environment mapping (defaults to os.environ)

    Returns:
        Tolerances
    """
    env = os.environ if env is None else env
    return parse_tolerances(env.get(ENV_VAR, ""))


@dataclass(frozen=True)
class WeightOptimizerConfig:
    """
    Settings of the projected-gradient edge-weight optimizer.

    Attributes:
        max_iter: Iteration cap
        rel_tol: Stop when the relative objective change falls below this
        w_min_factor: Lower weight bound as a fraction of the mean initial weight
        armijo: Sufficient-decrease constant
        shrink: Backtracking factor
        initial_step: First trial step of every line search
        max_backtracks: Line-search halvings before giving up
    """
    max_iter: int = 500
    rel_tol: float = 1e-8
    w_min_factor: float = 1e-6
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 60


@dataclass(frozen=True)
class TreeConfig:
    """
    Settings of the diagonal edge-Gramian computation.

    Attributes:
        tighten: Run per-entry bisection tightening after the closed-form start
        sweeps: Coordinate-descent sweeps over all edges
        bisection_steps: Bisection steps per diagonal entry
    """
    tighten: bool = True
    sweeps: int = 3
    bisection_steps: int = 40
