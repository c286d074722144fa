"""Exception types shared across the engine."""

from __future__ import annotations


class ScaleflowError(Exception):
    """Base class for engine errors."""


class CommitConflict(ScaleflowError):
    """Context commit attempted against a non-latest version."""


class DuplicateResult(ScaleflowError):
    """A (scale_id, completed_at) pair was applied to the history twice."""


class UnknownAttribute(ScaleflowError):
    """Attribute id not present in the knowledge-base vocabulary."""


class DimensionMismatch(ScaleflowError):
    """Vector operands have different dimensions."""


class EmptyCatalog(ScaleflowError):
    """Candidate scoring requires at least one scale."""


class NoEligibleScale(ScaleflowError):
    """Every candidate was removed by constraint filtering."""


class InvalidResponse(ScaleflowError):
    """Assessment answer rejected (out-of-order item or value not among options)."""


class IncompleteResponses(ScaleflowError):
    """Scoring requires an answer for every item."""


class UnknownSession(ScaleflowError):
    """Session id not registered with the engine."""


class SessionClosed(ScaleflowError):
    """Operation attempted on a closed session."""


class IllegalTransition(ScaleflowError):
    """Session event not legal in the current phase."""


class AuditPoisoned(ScaleflowError):
    """Append attempted on a log that failed verification."""


class ReplayRejected(ScaleflowError):
    """Replay preconditions not met (broken chain or genesis mismatch)."""
