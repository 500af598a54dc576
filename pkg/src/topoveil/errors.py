"""Exception types shared across the library.

Every error raised by topoveil derives from :class:`TopoveilError`, so
callers can catch the whole family with one clause.  The CLI maps these
onto process exit codes (config 2, infeasible 3, numerical 4).
"""


class TopoveilError(Exception):
    """Base class for all topoveil errors."""


class ConfigError(TopoveilError):
    """Invalid scenario file, CLI arguments, or inconsistent configuration."""


class DimensionMismatch(TopoveilError):
    """Operands have incompatible shapes."""


class NotStochastic(TopoveilError):
    """A weight matrix has a row sum that differs from 1 beyond tolerance."""


class NegativeEntry(TopoveilError):
    """A weight matrix contains a negative entry."""


class NoUniqueStationary(TopoveilError):
    """The unit eigenvalue is not simple, so the stationary vector is ambiguous."""


class NonConvergence(TopoveilError):
    """The underlying eigenvalue solver failed to converge."""


class NotContractive(TopoveilError):
    """A non-unit eigenvalue has modulus >= 1 at tolerance."""


class NotComputable(TopoveilError):
    """The requested quantity does not exist for this input."""


class NumericalFailure(TopoveilError):
    """A numerical routine stalled or returned an unverifiable result."""


class Infeasible(TopoveilError):
    """A design problem admits no solution under its constraints."""


class ScalingFailed(TopoveilError):
    """No scaling of a candidate feedback satisfied all constraints."""


class NotDiagonalizable(TopoveilError):
    """The weight matrix has no eigenvector basis at tolerance."""


class NoValidSubset(TopoveilError):
    """No eigenmode subset satisfies the support condition."""


class RefinementInfeasible(TopoveilError):
    """The nonnegativity refinement step has no solution."""


class AlphaTooLarge(TopoveilError):
    """The Laplacian gain violates a convergence or nonnegativity bound."""


class HorizonTooShort(TopoveilError):
    """The trajectory or observation horizon is too short for the operation."""


class BudgetDegenerate(TopoveilError):
    """The privacy budget is not positive."""


class DeltaTooLarge(TopoveilError):
    """The adjustment parameter exceeds the smallest positive row weight."""


class TooLarge(TopoveilError):
    """The instance exceeds the size cap of an exhaustive routine."""


class NoFeasibleCount(TopoveilError):
    """No support count meets the budget threshold (cannot occur for tau > 0)."""
