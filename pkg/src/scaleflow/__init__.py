"""Adaptive psychometric intake engine.

Multi-turn dialogue sessions over a versioned context state, with
information-gain-driven refinement questions, weighted scale
recommendation, schema-driven administration and scoring, a hard risk
override, and a hash-chained audit log that replays bit-exactly.
"""

from .belief import (
    BeliefState,
    KnowledgeBase,
    Phase,
    PhaseThresholds,
    compute_confidence,
    decide_phase,
    entropy,
    expected_info_gain,
    select_refinement_attribute,
    update_belief,
)
from .config import EngineConfig
from .context import (
    AttributeEvidence,
    BehavioralSample,
    ContextState,
    ContextStore,
    apply_scale_result,
    context_vector,
    update_context,
)
from .engine import Engine, EventChannel, Session, SessionPhase, TurnResponse
from .extraction import (
    EndpointExtractor,
    ExtractionResult,
    Lexicon,
    LexiconExtractor,
    Utterance,
    extract_signals,
    validate_lexicon,
)
from .recommender import (
    Recommendation,
    ScaleProfile,
    ScoringWeights,
    adaptability_score,
    finalize_recommendation,
    priority_score,
    score_candidates,
)
from .replay import ReplayReport, replay_session
from .risk import RiskConfig, RiskLevel, RiskSignals, RiskVerdict, derive_signals, evaluate, risk_index
from .scales import (
    AssessmentSession,
    ScaleDefinition,
    ScaleResult,
    next_item,
    score_scale,
    submit_response,
    validate_scale_definition,
)

__version__ = "0.1.0"

__all__ = [
    "AssessmentSession",
    "AttributeEvidence",
    "BehavioralSample",
    "BeliefState",
    "ContextState",
    "ContextStore",
    "EndpointExtractor",
    "Engine",
    "EngineConfig",
    "EventChannel",
    "ExtractionResult",
    "KnowledgeBase",
    "Lexicon",
    "LexiconExtractor",
    "Phase",
    "PhaseThresholds",
    "Recommendation",
    "ReplayReport",
    "RiskConfig",
    "RiskLevel",
    "RiskSignals",
    "RiskVerdict",
    "ScaleDefinition",
    "ScaleProfile",
    "ScaleResult",
    "ScoringWeights",
    "Session",
    "SessionPhase",
    "TurnResponse",
    "Utterance",
    "adaptability_score",
    "apply_scale_result",
    "compute_confidence",
    "context_vector",
    "decide_phase",
    "derive_signals",
    "entropy",
    "evaluate",
    "expected_info_gain",
    "extract_signals",
    "finalize_recommendation",
    "next_item",
    "priority_score",
    "replay_session",
    "risk_index",
    "score_candidates",
    "score_scale",
    "select_refinement_attribute",
    "submit_response",
    "update_belief",
    "update_context",
    "validate_lexicon",
    "validate_scale_definition",
]
