"""Exception types shared across the laboratory modules."""

from __future__ import annotations


class FeketeLabError(Exception):
    """Base class for all library errors."""


class ZeroVector(FeketeLabError):
    """A homogeneous representative with norm below threshold was supplied."""


class DomainError(FeketeLabError):
    """A numeric argument fell outside its documented range."""


class ModelMismatch(FeketeLabError):
    """Objects built over different model geometries were combined."""


class SpaceMismatch(FeketeLabError):
    """Sections from different section spaces were combined."""


class LevelMismatch(FeketeLabError):
    """A tensor/oversampling level constraint was violated."""


class CountMismatch(FeketeLabError):
    """A point or value list has the wrong cardinality."""


class SingularConfiguration(FeketeLabError):
    """A configuration with |vdm| = 0 was used where invertibility is required."""


class NonConvergence(FeketeLabError):
    """The solver failed to reach its tolerance within the iteration budget."""


class BudgetExceeded(FeketeLabError):
    """The vanishing budget of the witness construction was exceeded."""


class InsufficientTrials(FeketeLabError):
    """A Monte Carlo experiment was requested with too few trials."""


class SchemaError(FeketeLabError):
    """A JSON artifact failed schema or version validation."""
