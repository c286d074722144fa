"""Versioned shared session state and its update transformation.

Every committed update produces a brand-new immutable snapshot with
version bumped by exactly one. Attribute evidence merges by EWMA; signal
histories are append-only. The store enforces compare-and-set semantics
so a stale writer can never clobber a newer snapshot.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

import numpy as np

from . import canonical
from .errors import CommitConflict, DuplicateResult
from .extraction import ExtractionResult

DEFAULT_EWMA_LAMBDA = 0.6
DEFAULT_WORDS_REF = 20
DEFAULT_VALENCE_WINDOW = 5


def _clamp(value: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return max(lo, min(hi, value))


@dataclass(frozen=True)
class AttributeEvidence:
    attribute_id: str
    value: float  # [-1, 1]: -1 confidently absent, 0 unknown, +1 confidently present
    last_observed_turn: int
    observation_count: int


@dataclass(frozen=True)
class BehavioralSample:
    """Per-turn raw behavioral input."""

    latency_ms: int
    word_count: int
    timestamp: int


@dataclass(frozen=True)
class BehavioralSummary:
    last_latency_ms: int = 0
    mean_latency_ms: float = 0.0
    words_per_turn: tuple[int, ...] = ()
    engagement_score: float = 0.0


@dataclass(frozen=True)
class ScaleResultRef:
    scale_id: str
    completed_at: int
    total_score: float
    normalized_severity: float
    band_label: str
    turn: int  # turn at which the result was applied; drives cooldown filtering


@dataclass(frozen=True)
class LongitudinalHistory:
    results: tuple[ScaleResultRef, ...] = ()

    def latest_severity(self) -> float:
        return self.results[-1].normalized_severity if self.results else 0.0


@dataclass(frozen=True)
class ContextState:
    session_id: str
    version: int = 0
    turn: int = 0
    attributes: dict[str, AttributeEvidence] = field(default_factory=dict)
    valence_history: tuple[float, ...] = ()
    behavior: BehavioralSummary = field(default_factory=BehavioralSummary)
    history: LongitudinalHistory = field(default_factory=LongitudinalHistory)
    risk_keyword_hits: tuple[tuple[int, str], ...] = ()
    created_at: int = 0
    updated_at: int = 0

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "version": self.version,
            "turn": self.turn,
            "attributes": {
                attr_id: {
                    "value": ev.value,
                    "last_observed_turn": ev.last_observed_turn,
                    "observation_count": ev.observation_count,
                }
                for attr_id, ev in sorted(self.attributes.items())
            },
            "valence_history": list(self.valence_history),
            "behavior": {
                "last_latency_ms": self.behavior.last_latency_ms,
                "mean_latency_ms": self.behavior.mean_latency_ms,
                "words_per_turn": list(self.behavior.words_per_turn),
                "engagement_score": self.behavior.engagement_score,
            },
            "history": [
                {
                    "scale_id": r.scale_id,
                    "completed_at": r.completed_at,
                    "total_score": r.total_score,
                    "normalized_severity": r.normalized_severity,
                    "band_label": r.band_label,
                    "turn": r.turn,
                }
                for r in self.history.results
            ],
            "risk_keyword_hits": [[turn, kw] for turn, kw in self.risk_keyword_hits],
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    def snapshot_hash(self) -> str:
        return canonical.digest(self.to_dict())


def new_session_state(session_id: str, created_at: int) -> ContextState:
    return ContextState(session_id=session_id, created_at=created_at, updated_at=created_at)


def update_context(
    prev: ContextState,
    extraction: ExtractionResult,
    behavior: BehavioralSample,
    *,
    ewma_lambda: float = DEFAULT_EWMA_LAMBDA,
    words_ref: int = DEFAULT_WORDS_REF,
) -> ContextState:
    """Apply one user turn to the context state (pure; prev untouched).

    Attribute evidence merges by EWMA (fresh attributes take the observed
    value directly); valence and word counts append; engagement is an
    EWMA of min(1, word_count / words_ref).
    """
    turn = prev.turn + 1

    attributes = dict(prev.attributes)
    for attr_id in sorted(extraction.attribute_observations):
        observed = _clamp(extraction.attribute_observations[attr_id])
        existing = attributes.get(attr_id)
        if existing is None:
            attributes[attr_id] = AttributeEvidence(
                attribute_id=attr_id, value=observed, last_observed_turn=turn, observation_count=1
            )
        else:
            merged = _clamp(ewma_lambda * observed + (1.0 - ewma_lambda) * existing.value)
            attributes[attr_id] = AttributeEvidence(
                attribute_id=attr_id,
                value=merged,
                last_observed_turn=turn,
                observation_count=existing.observation_count + 1,
            )

    raw_engagement = min(1.0, behavior.word_count / words_ref) if words_ref > 0 else 0.0
    if prev.behavior.words_per_turn:
        engagement = ewma_lambda * raw_engagement + (1.0 - ewma_lambda) * prev.behavior.engagement_score
    else:
        engagement = raw_engagement
    n_turns = len(prev.behavior.words_per_turn) + 1
    mean_latency = prev.behavior.mean_latency_ms + (behavior.latency_ms - prev.behavior.mean_latency_ms) / n_turns
    summary = BehavioralSummary(
        last_latency_ms=behavior.latency_ms,
        mean_latency_ms=mean_latency,
        words_per_turn=prev.behavior.words_per_turn + (behavior.word_count,),
        engagement_score=_clamp(engagement, 0.0, 1.0),
    )

    hits = prev.risk_keyword_hits + tuple((turn, kw) for kw in extraction.risk_keyword_hits)

    return replace(
        prev,
        version=prev.version + 1,
        turn=turn,
        attributes=attributes,
        valence_history=prev.valence_history + (_clamp(extraction.valence),),
        behavior=summary,
        risk_keyword_hits=hits,
        updated_at=behavior.timestamp,
    )


def context_vector(state: ContextState, kb, *, valence_window: int = DEFAULT_VALENCE_WINDOW) -> np.ndarray:
    """Numeric view of the state: attribute slots in vocabulary order,
    then mean recent valence, engagement, and latest normalized severity.

    `kb` provides `attribute_vocabulary`; dimension is len(vocabulary) + 3.
    """
    slots = [state.attributes[a].value if a in state.attributes else 0.0 for a in kb.attribute_vocabulary]
    recent = state.valence_history[-valence_window:] if valence_window > 0 else ()
    mean_valence = sum(recent) / len(recent) if recent else 0.0
    return np.array(
        slots + [mean_valence, state.behavior.engagement_score, state.history.latest_severity()],
        dtype=float,
    )


def apply_scale_result(prev: ContextState, result) -> ContextState:
    """Fold a completed scale result into the longitudinal history.

    Bumps version but not turn. A repeated (scale_id, completed_at) pair
    is a replay error.
    """
    for existing in prev.history.results:
        if existing.scale_id == result.scale_id and existing.completed_at == result.completed_at:
            raise DuplicateResult(f"result for {result.scale_id} at {result.completed_at} already applied")
    ref = ScaleResultRef(
        scale_id=result.scale_id,
        completed_at=result.completed_at,
        total_score=result.total_score,
        normalized_severity=result.normalized_severity,
        band_label=result.band_label,
        turn=prev.turn,
    )
    ordered = tuple(sorted(prev.history.results + (ref,), key=lambda r: (r.completed_at, r.scale_id)))
    return replace(
        prev,
        version=prev.version + 1,
        history=LongitudinalHistory(results=ordered),
        updated_at=result.completed_at,
    )


class ContextStore:
    """Per-session latest-snapshot store with compare-and-set commits.

    Snapshots are immutable; readers may hold stale ones freely. A commit
    whose version is not exactly latest+1 is rejected.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._latest: dict[str, ContextState] = {}

    def create(self, state: ContextState) -> None:
        with self._lock:
            if state.session_id in self._latest:
                raise CommitConflict(f"session {state.session_id} already exists")
            self._latest[state.session_id] = state

    def latest(self, session_id: str) -> ContextState:
        with self._lock:
            return self._latest[session_id]

    def commit(self, state: ContextState) -> ContextState:
        with self._lock:
            current = self._latest.get(state.session_id)
            expected = 0 if current is None else current.version + 1
            if state.version != expected:
                raise CommitConflict(
                    f"commit version {state.version} against latest "
                    f"{'none' if current is None else current.version}"
                )
            self._latest[state.session_id] = state
            return state

    def drop(self, session_id: str) -> None:
        with self._lock:
            self._latest.pop(session_id, None)
