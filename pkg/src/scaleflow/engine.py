"""Session lifecycle state machine and blackboard coordination.

One coordinator drives the per-turn pipeline: extract, commit context,
synchronous risk check (override preempts everything), belief update
from a pending refinement answer, confidence gating, then an
exploration prompt, a targeted refinement question, or a scored
recommendation. Every decision is audited before the turn's response is
released, and all timestamps enter through the call boundary so a
recorded session replays bit-exactly.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum

from . import risk as risk_mod
from .audit import AuditLog, log_path
from .belief import (
    BeliefState,
    KnowledgeBase,
    Phase,
    compute_confidence,
    decide_phase,
    evidence_outcome,
    expected_info_gain,
    initial_belief,
    select_refinement_attribute,
    update_belief,
)
from .config import EngineConfig
from .context import (
    BehavioralSample,
    ContextState,
    ContextStore,
    apply_scale_result,
    context_vector,
    new_session_state,
    update_context,
)
from .errors import (
    CommitConflict,
    IllegalTransition,
    InvalidResponse,
    NoEligibleScale,
    SessionClosed,
    UnknownSession,
)
from .extraction import EndpointExtractor, Lexicon, LexiconExtractor, Utterance
from .recommender import (
    EndpointReranker,
    FinalizeConfig,
    IdentityReranker,
    Recommendation,
    Reranker,
    finalize_recommendation,
    score_candidates,
)
from .risk import RiskLevel, RiskVerdict
from .scales import (
    AssessmentSession,
    ScaleDefinition,
    ScaleResult,
    catalog_fingerprint,
    next_item,
    score_scale,
    submit_response,
)

logger = logging.getLogger(__name__)

EXPLORE_PROMPTS = (
    "Thanks for sharing that. What else has been on your mind lately?",
    "I hear you. How have the past couple of weeks felt overall?",
    "Could you tell me a bit more about how your days have been going?",
)

INTERVENTION_TEXT = (
    "I'm concerned about your safety right now, so I've paused our assessment. "
    "If you are in immediate danger, please contact your local emergency number. "
    "You can also reach a crisis counselor through your regional crisis line. "
    "A human supervisor has been notified and this session will stay paused until they review it."
)

ASSESSMENT_CONTINUE_TEXT = "Thanks for telling me. Let's continue with the questionnaire."

CLOSED_TEXT = "This session is closed."


class SessionPhase(str, Enum):
    GREETING = "Greeting"
    EXPLORATION = "Exploration"
    REFINEMENT = "Refinement"
    RECOMMENDATION = "Recommendation"
    ASSESSMENT = "Assessment"
    RESULTS = "Results"
    INTERVENTION = "Intervention"
    CLOSED = "Closed"


PHASE_FOR_DECISION = {
    Phase.EXPLORE: SessionPhase.EXPLORATION,
    Phase.REFINE: SessionPhase.REFINEMENT,
    Phase.RECOMMEND: SessionPhase.RECOMMENDATION,
}


class EventChannel:
    """Ordered per-session event stream with resume-by-seq semantics."""

    def __init__(self) -> None:
        self._events: list[dict] = []
        self._cond = threading.Condition()

    def publish(self, event_type: str, data: dict) -> int:
        with self._cond:
            seq = len(self._events)
            self._events.append({"seq": seq, "type": event_type, "data": data})
            self._cond.notify_all()
            return seq

    def events_since(self, last_seq: int = -1) -> list[dict]:
        with self._cond:
            return [e for e in self._events if e["seq"] > last_seq]

    def wait_for(self, last_seq: int, timeout: float) -> list[dict]:
        """Events after last_seq, blocking up to timeout; empty list on timeout."""
        deadline = time.monotonic() + timeout
        with self._cond:
            while True:
                fresh = [e for e in self._events if e["seq"] > last_seq]
                if fresh:
                    return fresh
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                self._cond.wait(remaining)


@dataclass
class Session:
    session_id: str
    phase: SessionPhase
    belief: BeliefState
    log: AuditLog
    channel: EventChannel = field(default_factory=EventChannel)
    pending_refinement_attribute: str | None = None
    active_assessment: AssessmentSession | None = None
    suspended_assessment: AssessmentSession | None = None
    last_recommendation: Recommendation | None = None
    last_result: ScaleResult | None = None
    risk_state: RiskVerdict | None = None
    override_started_turn: int | None = None
    last_confidence: float = 0.0
    lock: threading.RLock = field(default_factory=threading.RLock)


@dataclass(frozen=True)
class TurnResponse:
    reply_text: str
    phase: SessionPhase
    recommendation: Recommendation | None
    scale_item: dict | None
    risk_level: RiskLevel
    context_version: int

    def to_payload(self) -> dict:
        return {
            "reply_text": self.reply_text,
            "phase": self.phase.value,
            "recommendation": self.recommendation.to_payload() if self.recommendation else None,
            "scale_item": self.scale_item,
            "risk_level": self.risk_level.value,
            "context_version": self.context_version,
        }


def _now_ms() -> int:
    return int(time.time() * 1000)


class Engine:
    """Coordinates all agents for any number of independent sessions."""

    def __init__(
        self,
        kb: KnowledgeBase,
        lexicon: Lexicon,
        catalog: dict[str, ScaleDefinition],
        config: EngineConfig | None = None,
        audit_dir: str | None = None,
        clock=None,
        reranker: Reranker | None = None,
    ):
        self.kb = kb
        self.lexicon = lexicon
        self.catalog = catalog
        self.config = config or EngineConfig()
        self.audit_dir = audit_dir
        self.clock = clock or _now_ms
        self.store = ContextStore()
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()

        # Fallback notes land on the calling thread: a turn runs start to
        # finish on one thread, so attribution to the session is safe.
        self._warnings = threading.local()
        if self.config.endpoints.extractor_url:
            self.extractor = EndpointExtractor(
                self.config.endpoints.extractor_url,
                lexicon,
                timeout_ms=self.config.timeouts.extractor_ms,
                on_fallback=self._note_extractor_fallback,
            )
        else:
            self.extractor = LexiconExtractor(lexicon)

        if reranker is not None:
            self.reranker = reranker
        elif self.config.endpoints.reranker_url:
            self.reranker = EndpointReranker(
                self.config.endpoints.reranker_url,
                timeout_ms=self.config.timeouts.reranker_ms,
                on_fallback=self._note_reranker_fallback,
            )
        else:
            self.reranker = IdentityReranker()

    # -- asset identity -------------------------------------------------

    def fingerprints(self) -> dict:
        return {
            "kb_fingerprint": self.kb.fingerprint(),
            "lexicon_fingerprint": self.lexicon.fingerprint(),
            "catalog_fingerprint": catalog_fingerprint(self.catalog),
            "config_fingerprint": self.config.fingerprint(),
        }

    def _note_extractor_fallback(self, message: str) -> None:
        self._warnings.extractor = message

    def _note_reranker_fallback(self, message: str) -> None:
        self._warnings.reranker = message

    # -- session lifecycle ------------------------------------------------

    def create_session(self, session_id: str | None = None, now: int | None = None) -> str:
        session_id = session_id or uuid.uuid4().hex
        now = self.clock() if now is None else now
        with self._sessions_lock:
            if session_id in self.sessions:
                raise IllegalTransition(f"session {session_id} already exists")
            path = log_path(self.audit_dir, session_id) if self.audit_dir else None
            log = AuditLog(session_id, path=path)
            session = Session(
                session_id=session_id,
                phase=SessionPhase.GREETING,
                belief=initial_belief(self.kb),
                log=log,
            )
            self.sessions[session_id] = session
        self.store.create(new_session_state(session_id, created_at=now))
        payload = {
            "action": "create",
            "session_id": session_id,
            "created_at": now,
            "algorithm": "sha256",
        }
        payload.update(self.fingerprints())
        log.record("genesis", payload, turn=0)
        return session_id

    def _session(self, session_id: str) -> Session:
        with self._sessions_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def greeting_text(self) -> str:
        return (
            "Hello, I'm here to help figure out which assessment fits you best. "
            "How have you been feeling recently?"
        )

    # -- risk plumbing ----------------------------------------------------

    def risk_snapshots(self) -> dict[str, tuple[ContextState, int | None]]:
        """Latest snapshot + override bookkeeping per open session (for the async loop)."""
        snapshots: dict[str, tuple[ContextState, int | None]] = {}
        with self._sessions_lock:
            items = list(self.sessions.items())
        for session_id, session in items:
            if session.phase is not SessionPhase.CLOSED:
                snapshots[session_id] = (self.store.latest(session_id), session.override_started_turn)
        return snapshots

    def publish_risk(self, session_id: str, verdict: RiskVerdict) -> None:
        session = self._session(session_id)
        session.channel.publish(
            "risk",
            {"r": verdict.r, "level": verdict.level.value, "evaluated_version": verdict.evaluated_version},
        )
        if verdict.level is RiskLevel.OVERRIDE and session.phase is not SessionPhase.INTERVENTION:
            with session.lock:
                if session.phase not in (SessionPhase.INTERVENTION, SessionPhase.CLOSED):
                    self._raise_override(session, self.store.latest(session_id), verdict)

    def _notify_webhook(self, session: Session, verdict: RiskVerdict, turn: int) -> None:
        url = self.config.endpoints.webhook_url
        if not url:
            return
        payload = {
            "session_id": session.session_id,
            "turn": turn,
            "r": verdict.r,
            "level": verdict.level.value,
        }

        def _send() -> None:
            if not risk_mod.post_webhook(url, payload, self.config.timeouts.webhook_ms):
                logger.warning("override webhook delivery failed for session %s", session.session_id)

        threading.Thread(target=_send, name="override-webhook", daemon=True).start()

    # -- phase transitions --------------------------------------------------

    def _change_phase(
        self,
        session: Session,
        state: ContextState,
        to: SessionPhase,
        event: str,
        trigger: str,
        extra: dict | None = None,
    ) -> None:
        payload = {"from": session.phase.value, "to": to.value, "event": event, "trigger": trigger}
        if extra:
            payload.update(extra)
        session.log.record("phase_transition", payload, turn=state.turn)
        session.phase = to
        session.channel.publish(
            "phase_transition", {"from": payload["from"], "to": payload["to"], "event": event}
        )

    def _raise_override(self, session: Session, state: ContextState, verdict: RiskVerdict) -> None:
        """Override preempts everything: halt assessment, enter Intervention."""
        session.override_started_turn = state.turn
        session.log.record(
            "override",
            {
                "r": verdict.r,
                "turn": state.turn,
                "hysteresis_until_turn": state.turn + self.config.risk.hysteresis_turns,
            },
            turn=state.turn,
        )
        if session.active_assessment is not None:
            session.suspended_assessment = session.active_assessment
            session.active_assessment = None
        self._change_phase(session, state, SessionPhase.INTERVENTION, "OverrideRaised", "engine")
        self._notify_webhook(session, verdict, state.turn)

    # -- the per-turn pipeline ------------------------------------------------

    def handle_turn(
        self, session_id: str, text: str, latency_ms: int = 0, now: int | None = None
    ) -> TurnResponse:
        session = self._session(session_id)
        now = self.clock() if now is None else now
        with session.lock:
            if session.phase is SessionPhase.CLOSED:
                raise SessionClosed(session_id)
            prev = self.store.latest(session_id)
            turn = prev.turn + 1

            session.log.record(
                "utterance",
                {"action": "turn", "text": text, "latency_ms": latency_ms, "received_at": now},
                turn=turn,
            )

            utterance = Utterance(text=text, turn=turn, received_at=now, latency_ms=latency_ms)
            self._warnings.extractor = None
            extraction = self.extractor.extract(utterance)
            if getattr(self._warnings, "extractor", None):
                session.log.record(
                    "warning", {"reason": self._warnings.extractor, "trigger": "engine"}, turn=turn
                )

            sample = BehavioralSample(latency_ms=latency_ms, word_count=extraction.word_count, timestamp=now)
            state = self._commit_turn(session_id, prev, extraction, sample)
            session.log.record("extraction", extraction.to_payload(), turn=turn)
            session.log.record(
                "context_commit",
                {"version": state.version, "turn": state.turn, "snapshot_hash": state.snapshot_hash()},
                turn=turn,
            )

            verdict = risk_mod.evaluate(state, self.lexicon, self.config.risk, session.override_started_turn)
            session.risk_state = verdict
            session.log.record("risk_verdict", verdict.to_payload(), turn=turn)
            session.channel.publish(
                "risk",
                {"r": verdict.r, "level": verdict.level.value, "evaluated_version": verdict.evaluated_version},
            )

            if verdict.level is RiskLevel.OVERRIDE:
                if session.phase is not SessionPhase.INTERVENTION:
                    self._raise_override(session, state, verdict)
                return self._intervention_response(verdict, state)
            if session.phase is SessionPhase.INTERVENTION:
                # Override index decayed but the session awaits an explicit clearance.
                return self._intervention_response(verdict, state)

            if session.pending_refinement_attribute is not None:
                attr = session.pending_refinement_attribute
                evidence = state.attributes.get(attr)
                outcome = evidence_outcome(evidence.value if evidence else None)
                if outcome is not None:
                    session.belief = update_belief(session.belief, attr, outcome, self.kb)
                session.pending_refinement_attribute = None

            if session.phase is SessionPhase.ASSESSMENT:
                # Mid-assessment chatter: keep the questionnaire in charge.
                return TurnResponse(
                    reply_text=ASSESSMENT_CONTINUE_TEXT,
                    phase=session.phase,
                    recommendation=None,
                    scale_item=self._item_payload(session),
                    risk_level=verdict.level,
                    context_version=state.version,
                )

            conf = compute_confidence(state, session.belief, self.kb)
            session.last_confidence = conf
            decision = decide_phase(conf, self.config.thresholds)
            session.log.record(
                "confidence",
                {
                    "conf": conf,
                    "suspected": session.belief.argmax(),
                    "decision": decision.value,
                    "belief": session.belief.to_payload(),
                },
                turn=turn,
            )

            if decision is Phase.RECOMMEND:
                response = self._recommend(session, state, verdict)
            elif decision is Phase.REFINE:
                response = self._refine(session, state, verdict)
            else:
                response = self._explore(session, state, verdict)
            return response

    def _commit_turn(self, session_id, prev, extraction, sample) -> ContextState:
        """Commit with a single internal retry on version conflict."""
        state = update_context(
            prev, extraction, sample, ewma_lambda=self.config.ewma_lambda, words_ref=self.config.words_ref
        )
        try:
            return self.store.commit(state)
        except CommitConflict:
            latest = self.store.latest(session_id)
            state = update_context(
                latest, extraction, sample, ewma_lambda=self.config.ewma_lambda, words_ref=self.config.words_ref
            )
            return self.store.commit(state)

    def _intervention_response(self, verdict: RiskVerdict, state: ContextState) -> TurnResponse:
        return TurnResponse(
            reply_text=INTERVENTION_TEXT,
            phase=SessionPhase.INTERVENTION,
            recommendation=None,
            scale_item=None,
            risk_level=verdict.level,
            context_version=state.version,
        )

    def _explore(self, session: Session, state: ContextState, verdict: RiskVerdict) -> TurnResponse:
        if session.phase is not SessionPhase.EXPLORATION:
            self._change_phase(session, state, SessionPhase.EXPLORATION, "TurnProcessed", "engine")
        prompt = EXPLORE_PROMPTS[state.turn % len(EXPLORE_PROMPTS)]
        return TurnResponse(
            reply_text=prompt,
            phase=session.phase,
            recommendation=None,
            scale_item=None,
            risk_level=verdict.level,
            context_version=state.version,
        )

    def _refine(self, session: Session, state: ContextState, verdict: RiskVerdict) -> TurnResponse:
        attribute = select_refinement_attribute(session.belief, state, self.kb)
        if session.phase is not SessionPhase.REFINEMENT:
            self._change_phase(session, state, SessionPhase.REFINEMENT, "TurnProcessed", "engine")
        if attribute is None:
            # Nothing informative left to ask; keep the conversation open.
            prompt = EXPLORE_PROMPTS[state.turn % len(EXPLORE_PROMPTS)]
        else:
            gain = expected_info_gain(session.belief, attribute, self.kb)
            prompt = self.kb.question_for(attribute)
            session.log.record(
                "refinement_selected",
                {"attribute": attribute, "expected_ig": gain, "question": prompt},
                turn=state.turn,
            )
            session.pending_refinement_attribute = attribute
        return TurnResponse(
            reply_text=prompt,
            phase=session.phase,
            recommendation=None,
            scale_item=None,
            risk_level=verdict.level,
            context_version=state.version,
        )

    def _recommend(self, session: Session, state: ContextState, verdict: RiskVerdict) -> TurnResponse:
        profiles = [self.catalog[scale_id].profile for scale_id in sorted(self.catalog)]
        ctx = context_vector(state, self.kb, valence_window=self.config.valence_window)
        ranked = score_candidates(ctx, profiles, self.config.weights, state)
        session.log.record(
            "scores", {"candidates": [c.to_payload() for c in ranked]}, turn=state.turn
        )
        self._warnings.reranker = None
        try:
            recommendation = finalize_recommendation(
                ranked,
                session.belief,
                state,
                reranker=self.reranker,
                config=FinalizeConfig(mode=self.config.recommendation_mode, max_joint=self.config.max_joint),
            )
        except NoEligibleScale as exc:
            session.log.record("warning", {"reason": str(exc), "trigger": "engine"}, turn=state.turn)
            return self._refine(session, state, verdict)
        if getattr(self._warnings, "reranker", None):
            session.log.record(
                "warning", {"reason": self._warnings.reranker, "trigger": "engine"}, turn=state.turn
            )

        session.last_recommendation = recommendation
        session.log.record("recommendation", recommendation.to_payload(), turn=state.turn)
        if session.phase is not SessionPhase.RECOMMENDATION:
            self._change_phase(session, state, SessionPhase.RECOMMENDATION, "TurnProcessed", "engine")
        session.channel.publish("recommendation", recommendation.to_payload())

        titles = [
            f"{self.catalog[c.scale_id].title} ({self.catalog[c.scale_id].profile.item_count} questions)"
            for c in recommendation.scales
        ]
        reply = (
            "Based on what you've shared, I recommend: "
            + "; ".join(titles)
            + ". Accept a recommendation to begin."
        )
        return TurnResponse(
            reply_text=reply,
            phase=session.phase,
            recommendation=recommendation,
            scale_item=None,
            risk_level=verdict.level,
            context_version=state.version,
        )

    # -- assessment flow ---------------------------------------------------

    def _item_payload(self, session: Session) -> dict | None:
        assessment = session.active_assessment
        if assessment is None:
            return None
        definition = self.catalog[assessment.scale_id]
        item = next_item(assessment, definition)
        if item is None:
            return None
        return {
            "scale_id": definition.scale_id,
            "title": definition.title,
            "item_id": item.item_id,
            "prompt": item.prompt,
            "options": [{"label": o.label, "value": o.value} for o in item.options],
            "index": assessment.cursor,
            "total": len(definition.items),
            "answered": len(assessment.responses),
        }

    def accept_recommendation(self, session_id: str, scale_id: str, now: int | None = None) -> dict:
        session = self._session(session_id)
        now = self.clock() if now is None else now
        with session.lock:
            state = self.store.latest(session_id)
            recommended = session.last_recommendation.scale_ids() if session.last_recommendation else ()
            if session.phase is not SessionPhase.RECOMMENDATION or scale_id not in recommended:
                reason = (
                    f"RecommendationAccepted illegal in phase {session.phase.value}"
                    if session.phase is not SessionPhase.RECOMMENDATION
                    else f"scale {scale_id} was not recommended"
                )
                session.log.record(
                    "warning",
                    {
                        "reason": reason,
                        "action": "accept",
                        "trigger": "api",
                        "scale_id": scale_id,
                        "requested_at": now,
                    },
                    turn=state.turn,
                )
                raise IllegalTransition(reason)
            self._change_phase(
                session,
                state,
                SessionPhase.ASSESSMENT,
                "RecommendationAccepted",
                "api",
                extra={"scale_id": scale_id, "requested_at": now},
            )
            session.active_assessment = AssessmentSession(scale_id=scale_id, started_at=now)
            session.log.record(
                "scale_started", {"scale_id": scale_id, "started_at": now}, turn=state.turn
            )
            return {"scale_id": scale_id, "item": self._item_payload(session)}

    def assessment_next(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            if session.phase is not SessionPhase.ASSESSMENT or session.active_assessment is None:
                raise IllegalTransition(f"no active assessment in phase {session.phase.value}")
            return {"scale_id": session.active_assessment.scale_id, "item": self._item_payload(session)}

    def submit_assessment_response(
        self, session_id: str, item_id: str, value: int, now: int | None = None
    ) -> dict:
        session = self._session(session_id)
        now = self.clock() if now is None else now
        with session.lock:
            state = self.store.latest(session_id)
            if session.phase is not SessionPhase.ASSESSMENT or session.active_assessment is None:
                reason = f"no active assessment in phase {session.phase.value}"
                session.log.record(
                    "warning",
                    {
                        "reason": reason,
                        "action": "respond",
                        "trigger": "api",
                        "item_id": item_id,
                        "value": value,
                        "submitted_at": now,
                    },
                    turn=state.turn,
                )
                raise IllegalTransition(reason)
            definition = self.catalog[session.active_assessment.scale_id]
            try:
                advanced = submit_response(
                    session.active_assessment, item_id, value, definition, submitted_at=now
                )
            except InvalidResponse as exc:
                session.log.record(
                    "warning",
                    {
                        "reason": str(exc),
                        "action": "respond",
                        "trigger": "api",
                        "item_id": item_id,
                        "value": value,
                        "submitted_at": now,
                    },
                    turn=state.turn,
                )
                raise
            session.active_assessment = advanced
            session.log.record(
                "scale_response",
                {
                    "action": "respond",
                    "scale_id": definition.scale_id,
                    "item_id": item_id,
                    "value": value,
                    "submitted_at": now,
                },
                turn=state.turn,
            )
            if not advanced.completed(definition):
                return {"done": False, "item": self._item_payload(session)}

            result = score_scale(definition, advanced.responses, completed_at=now)
            session.last_result = result
            session.log.record("scale_result", result.to_payload(), turn=state.turn)
            new_state = self.store.commit(apply_scale_result(state, result))
            session.log.record(
                "context_commit",
                {
                    "version": new_state.version,
                    "turn": new_state.turn,
                    "snapshot_hash": new_state.snapshot_hash(),
                },
                turn=new_state.turn,
            )
            session.active_assessment = None
            self._change_phase(
                session, new_state, SessionPhase.RESULTS, "AssessmentCompleted", "engine",
                extra={"scale_id": definition.scale_id},
            )
            session.channel.publish("scale_result", result.to_payload())
            return {"done": True, "result": self._result_payload(result, definition)}

    def _result_payload(self, result: ScaleResult, definition: ScaleDefinition) -> dict:
        band = next(b for b in definition.scoring.bands if b.label == result.band_label)
        payload = result.to_payload()
        payload["title"] = definition.title
        payload["interpretation"] = band.interpretation
        return payload

    def get_result(self, session_id: str) -> dict | None:
        session = self._session(session_id)
        with session.lock:
            if session.last_result is None:
                return None
            definition = self.catalog[session.last_result.scale_id]
            return self._result_payload(session.last_result, definition)

    # -- operator actions -----------------------------------------------------

    def clear_override(self, session_id: str, now: int | None = None) -> dict:
        session = self._session(session_id)
        now = self.clock() if now is None else now
        with session.lock:
            state = self.store.latest(session_id)
            if session.phase is not SessionPhase.INTERVENTION:
                reason = f"OverrideCleared illegal in phase {session.phase.value}"
                session.log.record(
                    "warning",
                    {"reason": reason, "action": "clear_override", "trigger": "api", "requested_at": now},
                    turn=state.turn,
                )
                raise IllegalTransition(reason)
            started = session.override_started_turn
            if started is not None and state.turn <= started + self.config.risk.hysteresis_turns:
                reason = (
                    f"hysteresis active until turn {started + self.config.risk.hysteresis_turns}"
                )
                session.log.record(
                    "warning",
                    {"reason": reason, "action": "clear_override", "trigger": "api", "requested_at": now},
                    turn=state.turn,
                )
                raise IllegalTransition(reason)
            verdict = risk_mod.evaluate(state, self.lexicon, self.config.risk, None)
            if verdict.level is RiskLevel.OVERRIDE:
                reason = f"risk index still above threshold ({verdict.r:.4f})"
                session.log.record(
                    "warning",
                    {"reason": reason, "action": "clear_override", "trigger": "api", "requested_at": now},
                    turn=state.turn,
                )
                raise IllegalTransition(reason)
            session.override_started_turn = None
            session.risk_state = verdict
            session.suspended_assessment = None
            conf = compute_confidence(state, session.belief, self.kb)
            target = PHASE_FOR_DECISION[decide_phase(conf, self.config.thresholds)]
            self._change_phase(
                session,
                state,
                target,
                "OverrideCleared",
                "api",
                extra={"requested_at": now, "verdict": verdict.to_payload(), "conf": conf},
            )
            return {"phase": session.phase.value, "risk_level": verdict.level.value}

    def close_session(self, session_id: str, now: int | None = None) -> None:
        session = self._session(session_id)
        now = self.clock() if now is None else now
        with session.lock:
            if session.phase is SessionPhase.CLOSED:
                return
            state = self.store.latest(session_id)
            self._change_phase(
                session, state, SessionPhase.CLOSED, "UserClosed", "api", extra={"requested_at": now}
            )
            session.log.close()

    # -- introspection -----------------------------------------------------

    def session_view(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            state = self.store.latest(session_id)
            return {
                "session_id": session_id,
                "phase": session.phase.value,
                "context_version": state.version,
                "turn": state.turn,
                "confidence": session.last_confidence,
                "risk_level": session.risk_state.level.value if session.risk_state else RiskLevel.NORMAL.value,
                "recommendation": session.last_recommendation.to_payload() if session.last_recommendation else None,
            }

    def audit_events(self, session_id: str):
        return self._session(session_id).log.events()

    def verify_audit(self, session_id: str) -> int | None:
        return self._session(session_id).log.verify()

    def channel(self, session_id: str) -> EventChannel:
        return self._session(session_id).channel

    def session_phase(self, session_id: str) -> SessionPhase:
        return self._session(session_id).phase
