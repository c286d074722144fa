"""HTTP + server-sent-events surface over one engine instance.

The API carries no decision logic: every phase, recommendation, and
score in a response comes verbatim from the engine. The event stream
supports resume via Last-Event-ID (or ?last_seq=) with at-least-once
delivery; clients dedup on seq.
"""

from __future__ import annotations

import json
from typing import Iterator

from fastapi import FastAPI, Header, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .engine import Engine
from .errors import (
    IllegalTransition,
    InvalidResponse,
    ScaleflowError,
    SessionClosed,
    UnknownSession,
)

DEFAULT_KEEPALIVE_S = 15.0


class TurnRequest(BaseModel):
    text: str
    latency_ms: int = 0


class AcceptRequest(BaseModel):
    scale_id: str


class ResponseRequest(BaseModel):
    item_id: str
    value: int


def _sse_frame(event: dict) -> str:
    return f"id: {event['seq']}\nevent: {event['type']}\ndata: {json.dumps(event['data'])}\n\n"


def sse_stream(channel, resume_from: int, keepalive_s: float, max_events: int | None = None) -> Iterator[str]:
    """Frames after resume_from, with keepalive comments during idle spells.

    At-least-once delivery: a client that reconnects with its last seen id
    gets everything newer, and deduplicates on the id field.
    """
    cursor = resume_from
    delivered = 0
    while True:
        fresh = channel.wait_for(cursor, timeout=keepalive_s)
        if not fresh:
            yield ": keepalive\n\n"
            continue
        for event in fresh:
            cursor = event["seq"]
            yield _sse_frame(event)
            delivered += 1
            if max_events is not None and delivered >= max_events:
                return


def create_app(engine: Engine, keepalive_s: float = DEFAULT_KEEPALIVE_S) -> FastAPI:
    app = FastAPI(title="scaleflow", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ScaleflowError)
    async def handle_engine_error(request: Request, exc: ScaleflowError):
        status = 500
        if isinstance(exc, UnknownSession):
            status = 404
        elif isinstance(exc, (SessionClosed, IllegalTransition)):
            status = 409
        elif isinstance(exc, InvalidResponse):
            status = 422
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session():
        session_id = engine.create_session()
        return {"session_id": session_id, "phase": "Greeting", "greeting": engine.greeting_text()}

    @app.get("/sessions/{session_id}")
    def session_view(session_id: str):
        return engine.session_view(session_id)

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnRequest):
        return engine.handle_turn(session_id, body.text, latency_ms=body.latency_ms).to_payload()

    @app.post("/sessions/{session_id}/accept")
    def accept(session_id: str, body: AcceptRequest):
        return engine.accept_recommendation(session_id, body.scale_id)

    @app.get("/sessions/{session_id}/assessment/next")
    def assessment_next(session_id: str):
        return engine.assessment_next(session_id)

    @app.post("/sessions/{session_id}/assessment/responses")
    def assessment_response(session_id: str, body: ResponseRequest):
        return engine.submit_assessment_response(session_id, body.item_id, body.value)

    @app.get("/sessions/{session_id}/result")
    def result(session_id: str):
        payload = engine.get_result(session_id)
        if payload is None:
            return JSONResponse(status_code=404, content={"error": "no result yet"})
        return payload

    @app.post("/sessions/{session_id}/clear-override")
    def clear_override(session_id: str):
        return engine.clear_override(session_id)

    @app.post("/sessions/{session_id}/close")
    def close(session_id: str):
        engine.close_session(session_id)
        return {"phase": "Closed"}

    @app.get("/sessions/{session_id}/events")
    def events(
        session_id: str,
        last_seq: int = Query(default=-1),
        max_events: int | None = Query(default=None),
        last_event_id: str | None = Header(default=None),
    ):
        channel = engine.channel(session_id)
        resume_from = last_seq
        if last_event_id is not None:
            try:
                resume_from = max(resume_from, int(last_event_id))
            except ValueError:
                pass

        return StreamingResponse(
            sse_stream(channel, resume_from, keepalive_s, max_events),
            media_type="text/event-stream",
        )

    return app
