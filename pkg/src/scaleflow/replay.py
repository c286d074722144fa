"""Deterministic re-execution of a recorded session.

Replay rebuilds a fresh engine from the same assets, re-applies every
externally-driven input found in the log (turns, assessment answers,
operator actions), and compares the regenerated audit stream byte for
byte against the recording. The first divergent seq is the primary
regression signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import canonical
from .audit import AuditEvent, verify_events
from .belief import KnowledgeBase
from .config import EngineConfig
from .engine import Engine
from .errors import ReplayRejected, ScaleflowError
from .extraction import Lexicon
from .scales import ScaleDefinition

# Assets whose fingerprint must match for re-execution to make sense.
STRICT_FINGERPRINTS = ("kb_fingerprint", "lexicon_fingerprint", "catalog_fingerprint")


@dataclass
class ReplayReport:
    ok: bool
    divergent_seq: int | None = None
    detail: str = ""
    recorded_events: int = 0
    recomputed_events: int = 0
    notes: list[str] = field(default_factory=list)


def _apply_input(engine: Engine, session_id: str, event: AuditEvent) -> None:
    payload = event.payload
    kind = event.kind
    try:
        if kind == "utterance":
            engine.handle_turn(
                session_id,
                payload["text"],
                latency_ms=payload["latency_ms"],
                now=payload["received_at"],
            )
        elif kind == "scale_response":
            engine.submit_assessment_response(
                session_id, payload["item_id"], payload["value"], now=payload["submitted_at"]
            )
        elif kind == "phase_transition" and payload.get("trigger") == "api":
            _apply_api_transition(engine, session_id, payload)
        elif kind == "warning" and payload.get("trigger") == "api":
            _apply_rejected_action(engine, session_id, payload)
    except ScaleflowError:
        # A rejected re-application surfaces as an audit divergence below.
        pass


def _apply_api_transition(engine: Engine, session_id: str, payload: dict) -> None:
    event_name = payload.get("event")
    if event_name == "RecommendationAccepted":
        engine.accept_recommendation(session_id, payload["scale_id"], now=payload["requested_at"])
    elif event_name == "OverrideCleared":
        engine.clear_override(session_id, now=payload["requested_at"])
    elif event_name == "UserClosed":
        engine.close_session(session_id, now=payload["requested_at"])


def _apply_rejected_action(engine: Engine, session_id: str, payload: dict) -> None:
    action = payload.get("action")
    if action == "accept":
        engine.accept_recommendation(session_id, payload["scale_id"], now=payload["requested_at"])
    elif action == "respond":
        engine.submit_assessment_response(
            session_id, payload["item_id"], payload["value"], now=payload["submitted_at"]
        )
    elif action == "clear_override":
        engine.clear_override(session_id, now=payload["requested_at"])


def replay_session(
    events: list[AuditEvent],
    kb: KnowledgeBase,
    lexicon: Lexicon,
    catalog: dict[str, ScaleDefinition],
    config: EngineConfig,
) -> ReplayReport:
    """Re-execute a recorded session and compare decision payloads."""
    if not events:
        raise ReplayRejected("empty log")
    broken = verify_events(events)
    if broken is not None:
        raise ReplayRejected(f"hash chain broken at seq {broken}")

    genesis = events[0]
    if genesis.kind != "genesis":
        raise ReplayRejected(f"first event is {genesis.kind!r}, expected genesis")

    notes: list[str] = []
    # Replay always runs the deterministic local pipeline: external
    # endpoints recorded in config are ignored here.
    engine = Engine(kb=kb, lexicon=lexicon, catalog=catalog, config=config, audit_dir=None)
    fingerprints = engine.fingerprints()
    for key in STRICT_FINGERPRINTS:
        if genesis.payload.get(key) != fingerprints[key]:
            raise ReplayRejected(f"genesis mismatch: {key} differs from provided assets")
    config_differs = genesis.payload.get("config_fingerprint") != fingerprints["config_fingerprint"]
    if config_differs:
        notes.append("config fingerprint differs; expecting divergence at the first affected decision")

    session_id = genesis.payload["session_id"]
    engine.create_session(session_id, now=genesis.payload["created_at"])
    for event in events[1:]:
        _apply_input(engine, session_id, event)

    recomputed = engine.audit_events(session_id)
    limit = min(len(events), len(recomputed))
    for i in range(limit):
        recorded_evt, recomputed_evt = events[i], recomputed[i]
        if recorded_evt.kind != recomputed_evt.kind:
            return ReplayReport(
                ok=False,
                divergent_seq=recorded_evt.seq,
                detail=f"kind {recomputed_evt.kind!r} != recorded {recorded_evt.kind!r}",
                recorded_events=len(events),
                recomputed_events=len(recomputed),
                notes=notes,
            )
        if i == 0 and config_differs:
            # The genesis carries the old config fingerprint by design;
            # actual decision payloads must reveal the difference instead.
            continue
        recorded_bytes = canonical.dumps(recorded_evt.payload)
        recomputed_bytes = canonical.dumps(recomputed_evt.payload)
        if recorded_bytes != recomputed_bytes:
            return ReplayReport(
                ok=False,
                divergent_seq=recorded_evt.seq,
                detail=f"payload mismatch on kind {recorded_evt.kind!r}",
                recorded_events=len(events),
                recomputed_events=len(recomputed),
                notes=notes,
            )
    if len(events) != len(recomputed):
        return ReplayReport(
            ok=False,
            divergent_seq=limit,
            detail=f"event count mismatch: recorded {len(events)}, recomputed {len(recomputed)}",
            recorded_events=len(events),
            recomputed_events=len(recomputed),
            notes=notes,
        )
    return ReplayReport(
        ok=True,
        recorded_events=len(events),
        recomputed_events=len(recomputed),
        notes=notes,
    )
