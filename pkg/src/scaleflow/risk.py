"""Continuous risk index and hard-constraint override.

The index is a logistic squash of four weighted signals derived from the
latest context snapshot: emotional volatility, risk-keyword severity,
linguistic anomaly, and historical severity. No bias term, so the
no-signal baseline is exactly 0.5 — safely below the 0.85 override
threshold. Once an override fires, it holds for a hysteresis window
regardless of the raw index.
"""

from __future__ import annotations

import math
import statistics
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .context import ContextState
from .extraction import Lexicon

DEFAULT_ALPHA = 2.0
DEFAULT_BETA = 3.0
DEFAULT_GAMMA = 1.5
DEFAULT_DELTA = 1.5
DEFAULT_R_HIGH = 0.85
DEFAULT_WINDOW = 4
DEFAULT_HYSTERESIS_TURNS = 3

ELEVATED_THRESHOLD = 0.7


class RiskLevel(str, Enum):
    NORMAL = "Normal"
    ELEVATED = "Elevated"
    OVERRIDE = "Override"


@dataclass(frozen=True)
class RiskSignals:
    emotional_volatility: float  # E
    keyword_score: float  # K
    linguistic_anomaly: float  # L
    historical_severity: float  # S

    def to_payload(self) -> dict:
        return {
            "emotional_volatility": self.emotional_volatility,
            "keyword_score": self.keyword_score,
            "linguistic_anomaly": self.linguistic_anomaly,
            "historical_severity": self.historical_severity,
        }


@dataclass(frozen=True)
class RiskConfig:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    delta: float = DEFAULT_DELTA
    r_high: float = DEFAULT_R_HIGH
    window: int = DEFAULT_WINDOW
    hysteresis_turns: int = DEFAULT_HYSTERESIS_TURNS

    def __post_init__(self) -> None:
        if not (0.0 < self.r_high < 1.0):
            raise ValueError(f"r_high must be inside (0,1), got {self.r_high}")
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if self.hysteresis_turns < 0:
            raise ValueError("hysteresis_turns must be >= 0")


@dataclass(frozen=True)
class RiskVerdict:
    r: float
    level: RiskLevel
    evaluated_version: int
    signals: RiskSignals

    def to_payload(self) -> dict:
        return {
            "r": self.r,
            "level": self.level.value,
            "evaluated_version": self.evaluated_version,
            "signals": self.signals.to_payload(),
        }


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def derive_signals(state: ContextState, lexicon: Lexicon, config: RiskConfig) -> RiskSignals:
    """Compute (E, K, L, S) from the snapshot, each clamped to [0,1].

    E: population stddev of recent valence, doubled; K: clamped sum of
    keyword severity weights in the window; L: |z|/3 of the latest word
    count against the session distribution; S: latest normalized severity.
    """
    recent_valence = state.valence_history[-config.window :]
    if len(recent_valence) >= 2:
        volatility = min(1.0, 2.0 * statistics.pstdev(recent_valence))
    else:
        volatility = 0.0

    window_start = state.turn - config.window + 1
    keyword_total = sum(
        lexicon.keyword_weight(keyword_id)
        for turn, keyword_id in state.risk_keyword_hits
        if turn >= window_start
    )
    keyword = min(1.0, keyword_total)

    words = state.behavior.words_per_turn
    anomaly = 0.0
    if len(words) >= 3:
        spread = statistics.pstdev(words)
        if spread > 0:
            z = (words[-1] - statistics.fmean(words)) / spread
            anomaly = min(1.0, abs(z) / 3.0)

    severity = state.history.latest_severity()
    return RiskSignals(
        emotional_volatility=volatility,
        keyword_score=keyword,
        linguistic_anomaly=anomaly,
        historical_severity=severity,
    )


def risk_index(signals: RiskSignals, config: RiskConfig) -> float:
    """Logistic sigmoid of the weighted signal sum; strictly inside (0,1)."""
    weighted = (
        config.alpha * signals.emotional_volatility
        + config.beta * signals.keyword_score
        + config.gamma * signals.linguistic_anomaly
        + config.delta * signals.historical_severity
    )
    return sigmoid(weighted)


def evaluate(
    state: ContextState,
    lexicon: Lexicon,
    config: RiskConfig,
    override_started_turn: int | None = None,
) -> RiskVerdict:
    """Full evaluation of one snapshot.

    Override iff r strictly exceeds r_high, or a previous override is
    still inside its hysteresis window (state.turn within
    override_started_turn + hysteresis_turns).
    """
    signals = derive_signals(state, lexicon, config)
    r = risk_index(signals, config)
    hysteresis_active = (
        override_started_turn is not None
        and state.turn <= override_started_turn + config.hysteresis_turns
    )
    if r > config.r_high or hysteresis_active:
        level = RiskLevel.OVERRIDE
    elif r > ELEVATED_THRESHOLD:
        level = RiskLevel.ELEVATED
    else:
        level = RiskLevel.NORMAL
    return RiskVerdict(r=r, level=level, evaluated_version=state.version, signals=signals)


class RiskMonitorLoop:
    """Background loop that re-evaluates the latest snapshots.

    Reads immutable snapshots, never writes context state. Publishes a
    verdict through `publish(session_id, verdict)` whenever the evaluated
    version changes. The synchronous per-turn check remains the safety
    gate; this loop only surfaces verdicts between turns (e.g. after a
    commit made outside the turn pipeline).
    """

    def __init__(
        self,
        snapshot_source: Callable[[], dict[str, tuple[ContextState, int | None]]],
        lexicon: Lexicon,
        config: RiskConfig,
        publish: Callable[[str, RiskVerdict], None],
        poll_interval_s: float = 0.5,
    ):
        self._snapshot_source = snapshot_source
        self._lexicon = lexicon
        self._config = config
        self._publish = publish
        self._poll_interval_s = poll_interval_s
        self._last_version: dict[str, int] = {}
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def poll_once(self) -> None:
        for session_id, (state, override_turn) in self._snapshot_source().items():
            if self._last_version.get(session_id) == state.version:
                continue
            verdict = evaluate(state, self._lexicon, self._config, override_turn)
            self._last_version[session_id] = state.version
            self._publish(session_id, verdict)

    def _run(self) -> None:
        while not self._stop.is_set():
            self.poll_once()
            self._stop.wait(self._poll_interval_s)

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, name="risk-monitor", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def __enter__(self) -> "RiskMonitorLoop":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()


def post_webhook(url: str, payload: dict, timeout_ms: int = 2000) -> bool:
    """Fire-and-forget supervisor notification; returns delivery success."""
    import json as _json
    import urllib.request

    try:
        data = _json.dumps(payload).encode("utf-8")
        request = urllib.request.Request(url, data=data, headers={"Content-Type": "application/json"})
        with urllib.request.urlopen(request, timeout=timeout_ms / 1000.0):
            return True
    except Exception:
        return False
