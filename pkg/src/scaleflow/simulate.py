"""Scripted persona sessions: drive an engine turn by turn.

A script is a JSON document with dialogue turns and, optionally, an
acceptance policy and an answer strategy for the administered scale.
Timestamps advance deterministically from the configured epoch so a
simulated session is exactly reproducible (and replayable).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .engine import Engine, SessionPhase

TURN_STEP_MS = 30_000
ACTION_STEP_MS = 5_000


@dataclass
class TurnTrace:
    turn: int
    text: str
    reply: str
    phase: str
    risk_level: str
    risk_index: float
    context_version: int
    confidence: float | None = None
    suspected: str | None = None
    belief_entropy: float | None = None
    asked_attribute: str | None = None


@dataclass
class SimulationOutcome:
    session_id: str
    turns: list[TurnTrace] = field(default_factory=list)
    accepted_scale: str | None = None
    recommendation: dict | None = None
    result: dict | None = None
    final_phase: str = ""
    audit_event_count: int = 0
    verify_ok: bool = True


def _belief_entropy(probabilities: dict[str, float]) -> float:
    return -sum(p * math.log2(p) for p in probabilities.values() if p > 0)


def _answer_value(answers: dict, index: int, item: dict) -> int:
    values = [o["value"] for o in item["options"]]
    strategy = answers.get("strategy", "cycle")
    if strategy == "constant":
        wanted = answers.get("value", 0)
    else:
        pattern = answers.get("values", [1, 2, 1, 0])
        wanted = pattern[index % len(pattern)]
    # Snap to the nearest legal option value.
    return min(values, key=lambda v: (abs(v - wanted), v))


def _trace_for_turn(engine: Engine, session_id: str, turn: int, since: int) -> dict:
    info: dict = {}
    for event in engine.audit_events(session_id)[since:]:
        if event.turn != turn:
            continue
        if event.kind == "confidence":
            info["confidence"] = event.payload["conf"]
            info["suspected"] = event.payload["suspected"]
            info["belief_entropy"] = _belief_entropy(event.payload["belief"])
        elif event.kind == "risk_verdict":
            info["risk_index"] = event.payload["r"]
        elif event.kind == "refinement_selected":
            info["asked_attribute"] = event.payload["attribute"]
    return info


def run_script(
    engine: Engine,
    script: dict,
    session_id: str | None = None,
    epoch_ms: int | None = None,
) -> SimulationOutcome:
    epoch = int(time.time() * 1000) if epoch_ms is None else epoch_ms
    name = script.get("name", "session")
    sid = engine.create_session(session_id or script.get("session_id") or f"sim-{name}", now=epoch)
    outcome = SimulationOutcome(session_id=sid)

    now = epoch
    for index, turn_spec in enumerate(script.get("turns", []), start=1):
        now += TURN_STEP_MS
        before = len(engine.audit_events(sid))
        response = engine.handle_turn(
            sid, turn_spec["text"], latency_ms=turn_spec.get("latency_ms", 1500), now=now
        )
        info = _trace_for_turn(engine, sid, index, before)
        outcome.turns.append(
            TurnTrace(
                turn=index,
                text=turn_spec["text"],
                reply=response.reply_text,
                phase=response.phase.value,
                risk_level=response.risk_level.value,
                risk_index=info.get("risk_index", 0.0),
                context_version=response.context_version,
                confidence=info.get("confidence"),
                suspected=info.get("suspected"),
                belief_entropy=info.get("belief_entropy"),
                asked_attribute=info.get("asked_attribute"),
            )
        )
        if response.recommendation is not None:
            outcome.recommendation = response.recommendation.to_payload()

        if (
            response.phase is SessionPhase.RECOMMENDATION
            and script.get("accept") == "first"
            and outcome.accepted_scale is None
            and response.recommendation is not None
        ):
            scale_id = response.recommendation.scales[0].scale_id
            now += ACTION_STEP_MS
            accepted = engine.accept_recommendation(sid, scale_id, now=now)
            outcome.accepted_scale = scale_id
            answers = script.get("answers", {"strategy": "cycle", "values": [1, 2, 1, 0]})
            item = accepted["item"]
            answer_index = 0
            while item is not None:
                now += ACTION_STEP_MS
                submitted = engine.submit_assessment_response(
                    sid, item["item_id"], _answer_value(answers, answer_index, item), now=now
                )
                answer_index += 1
                if submitted["done"]:
                    outcome.result = submitted["result"]
                    item = None
                else:
                    item = submitted["item"]

    outcome.final_phase = engine.session_phase(sid).value
    outcome.audit_event_count = len(engine.audit_events(sid))
    outcome.verify_ok = engine.verify_audit(sid) is None
    return outcome
