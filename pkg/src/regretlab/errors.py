"""Exception hierarchy shared across the package."""


class RegretlabError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(RegretlabError):
    """Operands live on different algebra shapes."""


class BadWeights(RegretlabError):
    """Mixture weights are not a probability vector."""


class NumericalFailure(RegretlabError):
    """A numerical routine (eigensolver, optimizer) did not converge."""


class DomainError(RegretlabError):
    """Input outside the mathematical domain of the operation."""


class SupportError(RegretlabError):
    """Evaluation requested outside the support of a distribution."""


class RequiresFiniteActions(RegretlabError):
    """Operation is only defined for finitely generated value functions."""


class BoundaryState(RegretlabError):
    """Gradient undefined at a boundary state and no fallback configured."""


class NonUniqueOptimum(RegretlabError):
    """More than one optimal action where a unique one is required."""


class NotARecoveryPair(RegretlabError):
    """The recovery map does not restore the designated states."""


class NotOrthogonal(RegretlabError):
    """States required to be orthogonal are not."""


class DimensionTooSmall(UserWarning):
    """Check is vacuous below dimension three (warning, not an error)."""


class DegenerateSample(RegretlabError):
    """Sampled data carries no information for the requested fit."""


class TooLarge(RegretlabError):
    """Problem size exceeds the exact-enumeration guard."""


class InfiniteAtVertex(RegretlabError):
    """Divergence from a vertex is infinite, rule construction impossible."""


class Infeasible(RegretlabError):
    """No portfolio achieves a finite objective."""
