"""Append-only, hash-chained decision record.

One JSON line per event. Each event hashes (seq || prev_hash || canonical
payload); the first event chains from a genesis hash of 32 zero bytes.
The log is written through before the triggering turn's response is
released, and a log that ever fails verification refuses further
appends.
"""

from __future__ import annotations

import io
import json
import os
import threading
from dataclasses import dataclass

from . import canonical
from .errors import AuditPoisoned, ScaleflowError

EVENT_KINDS = frozenset(
    {
        "genesis",
        "utterance",
        "extraction",
        "context_commit",
        "confidence",
        "refinement_selected",
        "scores",
        "recommendation",
        "risk_verdict",
        "override",
        "scale_started",
        "scale_response",
        "scale_result",
        "phase_transition",
        "warning",
    }
)


@dataclass(frozen=True)
class AuditEvent:
    seq: int
    session_id: str
    turn: int
    kind: str
    payload: dict
    prev_hash: str
    hash: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "session_id": self.session_id,
            "turn": self.turn,
            "kind": self.kind,
            "payload": self.payload,
            "prev_hash": self.prev_hash,
            "hash": self.hash,
        }


def verify_events(events: list[AuditEvent]) -> int | None:
    """Recompute the chain; returns the first broken seq, or None if intact."""
    prev_hash = canonical.GENESIS_HASH
    for position, event in enumerate(events):
        if event.seq != position:
            return position
        if event.prev_hash != prev_hash:
            return event.seq
        expected = canonical.chain_hash(event.seq, event.prev_hash, event.payload)
        if event.hash != expected:
            return event.seq
        prev_hash = event.hash
    return None


class AuditLog:
    """Per-session appender with optional JSONL persistence."""

    def __init__(self, session_id: str, path: str | None = None):
        self.session_id = session_id
        self.path = path
        self._events: list[AuditEvent] = []
        self._prev_hash = canonical.GENESIS_HASH
        self._poisoned = False
        self._lock = threading.Lock()
        self._fh: io.TextIOWrapper | None = None
        if path is not None:
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            self._fh = open(path, "a", encoding="utf-8")

    def record(self, kind: str, payload: dict, turn: int) -> int:
        """Append one event; returns its seq. Flushes before returning."""
        if kind not in EVENT_KINDS:
            raise ScaleflowError(f"unknown audit event kind {kind!r}")
        with self._lock:
            if self._poisoned:
                raise AuditPoisoned(f"audit log for {self.session_id} failed verification; append refused")
            seq = len(self._events)
            event = AuditEvent(
                seq=seq,
                session_id=self.session_id,
                turn=turn,
                kind=kind,
                payload=payload,
                prev_hash=self._prev_hash,
                hash=canonical.chain_hash(seq, self._prev_hash, payload),
            )
            if self._fh is not None:
                self._fh.write(canonical.dumps(event.to_dict()) + "\n")
                self._fh.flush()
            self._events.append(event)
            self._prev_hash = event.hash
            return seq

    def events(self) -> list[AuditEvent]:
        with self._lock:
            return list(self._events)

    def verify(self) -> int | None:
        """First broken seq, or None. A broken chain poisons the log."""
        with self._lock:
            broken = verify_events(self._events)
            if broken is not None:
                self._poisoned = True
            return broken

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


def _event_from_dict(record: dict) -> AuditEvent:
    return AuditEvent(
        seq=int(record["seq"]),
        session_id=record["session_id"],
        turn=int(record["turn"]),
        kind=record["kind"],
        payload=record["payload"],
        prev_hash=record["prev_hash"],
        hash=record["hash"],
    )


def read_log(path: str) -> list[AuditEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(_event_from_dict(json.loads(line)))
    return events


def verify_file(path: str) -> int | None:
    return verify_events(read_log(path))


def log_path(directory: str, session_id: str) -> str:
    return os.path.join(directory, f"{session_id}.jsonl")
