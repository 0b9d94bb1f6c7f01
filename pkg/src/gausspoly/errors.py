"""Exception hierarchy.

Two roots matter to callers: :class:`PreconditionError` (bad input, CLI exit
code 2) and :class:`NumericalContractError` (a computed object failed its
own contract, CLI exit code 3).
"""
from __future__ import annotations


class GausspolyError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(GausspolyError, ValueError):
    """Input violates a documented precondition."""


class ConfigurationError(PreconditionError):
    """Invalid ensemble or experiment configuration."""


class UnknownExperimentError(ConfigurationError):
    pass


class InvalidConstantError(ConfigurationError):
    pass


class EmptySpanError(PreconditionError):
    pass


class EmptyKernelError(PreconditionError):
    pass


class DimensionMismatchError(PreconditionError):
    pass


class ModeError(PreconditionError):
    """Exact enumeration requested beyond its size cap."""


class HypothesisFailure(PreconditionError):
    """A required hypothesis does not hold for the supplied data."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegeneracyError(PreconditionError):
    pass


class InfeasibleError(PreconditionError):
    """The L1 program has no feasible point (rank-deficient generators)."""


class ReportIOError(GausspolyError, OSError):
    pass


class NumericalContractError(GausspolyError, ArithmeticError):
    """A numerical postcondition failed."""


class ContractViolation(NumericalContractError):
    pass


class SolverFailure(NumericalContractError):
    """The simplex solver stopped without an optimality certificate.

    ``best_bound`` is a valid lower bound on the optimum (from the last dual
    iterate, rescaled to feasibility) and ``upper_bound`` the objective of
    the last primal feasible point.
    """

    def __init__(self, message, best_bound=float("nan"), upper_bound=float("nan")):
        super().__init__(message)
        self.best_bound = best_bound
        self.upper_bound = upper_bound


class CoverageFailure(NumericalContractError):
    def __init__(self, message, achieved_radius=float("nan")):
        super().__init__(message)
        self.achieved_radius = achieved_radius


class NetCoverageViolation(NumericalContractError):
    pass


class SamplingFailure(NumericalContractError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
