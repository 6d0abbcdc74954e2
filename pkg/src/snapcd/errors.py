"""Exception types shared across the package."""


class SnapError(Exception):
    """Base class for all errors raised by this package."""


class CyclicGraphError(SnapError):
    """A directed cycle was found where a DAG is required."""


class InvalidQueryError(SnapError):
    """A (x, y | S) query with x == y or an endpoint inside S."""


class EmptySelectionError(SnapError):
    """An induced subgraph was requested over an empty vertex set."""


class SizeMismatchError(SnapError):
    """Two graphs with different vertex counts were compared."""


class MissingSepsetError(SnapError):
    """An unshielded non-adjacent pair has no recorded separating set."""


class SingularCovarianceError(SnapError):
    """The covariance submatrix is not invertible to tolerance."""


class InsufficientSamplesError(SnapError):
    """Too few samples for the requested conditioning set size."""


class NotCategoricalError(SnapError):
    """A categorical-data test was asked to run on non-categorical data."""


class NotContinuousError(SnapError):
    """A continuous-data test was asked to run on non-continuous data."""


class NotIdentifiableError(SnapError):
    """The requested causal effect is not identifiable by adjustment."""


class UndirectedIncidenceError(SnapError):
    """The parent set is ambiguous because of an undirected incident edge."""


class SingularDesignError(SnapError):
    """The regression design matrix is rank deficient."""


class MissingPairError(SnapError):
    """An estimate is missing for an ordered target pair."""


class InfeasibleConfigError(SnapError):
    """Random graph generation could not satisfy its constraints."""


class NoIdentifiableSetError(SnapError):
    """No identifiable target set was found within the retry budget."""


class BudgetExceededError(SnapError):
    """A discovery run spent more CI tests than its configured budget."""
