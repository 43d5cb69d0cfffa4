"""
Exception hierarchy for netred.
Every error carries the exit code the command-line interface returns for it.
"""


class NetredError(Exception):
    """Base class for all netred errors."""

    exit_code = 1


class InvalidModelError(NetredError, ValueError):
    """
    Raised for malformed input: bad dimensions, invalid Laplacians,
    clusterings or graphs, and unparseable model files.
    """

    exit_code = 2


class InfeasibleError(NetredError):
    """
    Raised when a mathematical precondition fails (not Hurwitz, not
    synchronizing, not a tree, LMI or Riccati infeasible, ...).
    """

    exit_code = 3


class NotHurwitzError(InfeasibleError):
    """
    Raised when a matrix required to be Hurwitz is not.

    Attributes:
        abscissa: Largest real part among the eigenvalues
    """

    def __init__(self, message: str, abscissa: float):
        super().__init__(f"{message} (spectral abscissa {abscissa:.3e})")
        self.abscissa = abscissa


class PassivityError(InfeasibleError):
    """Raised when no valid passivity certificate is available."""


class NumericalError(NetredError):
    """Raised when a solver residual exceeds tolerance or a transform is singular."""

    exit_code = 4
