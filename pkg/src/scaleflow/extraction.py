"""Turns a raw utterance into structured signals.

The default extractor is a deterministic lexicon scanner: longest-match
phrase detection with a 3-token negation window. An optional endpoint
client can delegate extraction to an external service and falls back to
the lexicon on any malformed reply.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable

from . import canonical

NEGATION_WINDOW = 3

_TOKEN_RE = re.compile(r"[a-z0-9']+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def _clamp(value: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return max(lo, min(hi, value))


@dataclass(frozen=True)
class Utterance:
    text: str
    turn: int
    received_at: int
    latency_ms: int


@dataclass(frozen=True)
class ExtractionResult:
    """Structured signals for one user turn. All values are clamped to range."""

    attribute_observations: dict[str, float] = field(default_factory=dict)
    valence: float = 0.0
    risk_keyword_hits: tuple[str, ...] = ()
    word_count: int = 0

    def to_payload(self) -> dict:
        return {
            "attribute_observations": {k: self.attribute_observations[k] for k in sorted(self.attribute_observations)},
            "valence": self.valence,
            "risk_keyword_hits": list(self.risk_keyword_hits),
            "word_count": self.word_count,
        }


@dataclass(frozen=True)
class LexiconEntry:
    attribute_id: str
    polarity: int  # +1 or -1
    weight: float  # (0, 1]


@dataclass(frozen=True)
class RiskKeyword:
    keyword_id: str
    weight: float  # (0, 1]


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, LexiconEntry]
    valence_terms: dict[str, float]
    risk_keywords: dict[str, RiskKeyword]
    negation_markers: tuple[str, ...]

    @classmethod
    def from_dict(cls, document: dict) -> "Lexicon":
        entries = {
            phrase: LexiconEntry(
                attribute_id=spec["attribute"],
                polarity=int(spec["polarity"]),
                weight=float(spec["weight"]),
            )
            for phrase, spec in document.get("entries", {}).items()
        }
        risk = {
            phrase: RiskKeyword(keyword_id=spec["id"], weight=float(spec["weight"]))
            for phrase, spec in document.get("risk_keywords", {}).items()
        }
        return cls(
            entries=entries,
            valence_terms={p: float(v) for p, v in document.get("valence_terms", {}).items()},
            risk_keywords=risk,
            negation_markers=tuple(document.get("negation_markers", [])),
        )

    def to_dict(self) -> dict:
        return {
            "entries": {
                p: {"attribute": e.attribute_id, "polarity": e.polarity, "weight": e.weight}
                for p, e in sorted(self.entries.items())
            },
            "valence_terms": dict(sorted(self.valence_terms.items())),
            "risk_keywords": {
                p: {"id": k.keyword_id, "weight": k.weight} for p, k in sorted(self.risk_keywords.items())
            },
            "negation_markers": list(self.negation_markers),
        }

    def fingerprint(self) -> str:
        return canonical.digest(self.to_dict())

    def keyword_weight(self, keyword_id: str) -> float:
        """Max severity weight over phrases sharing a keyword id."""
        weights = [k.weight for k in self.risk_keywords.values() if k.keyword_id == keyword_id]
        return max(weights, default=0.0)


def load_lexicon(path: str) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return Lexicon.from_dict(json.load(fh))


def validate_lexicon(document: dict) -> list[str]:
    """Validate a raw lexicon document; returns a list of findings (empty = ok)."""
    findings: list[str] = []
    seen_per_table: dict[str, set[tuple[str, ...]]] = {}

    def check_phrase(phrase: str, where: str) -> None:
        # The same phrase may appear in different tables (an attribute cue
        # can also carry valence); duplicates only matter within a table,
        # compared after tokenization since matching is case-folded.
        tokens = tuple(tokenize(phrase))
        if not phrase or not tokens:
            findings.append(f"{where}: empty phrase")
            return
        seen = seen_per_table.setdefault(where, set())
        if tokens in seen:
            findings.append(f"{where}: duplicate phrase {phrase!r}")
        seen.add(tokens)

    for phrase, spec in document.get("entries", {}).items():
        check_phrase(phrase, "entries")
        weight = spec.get("weight", 0)
        if not (0 < weight <= 1):
            findings.append(f"entries[{phrase!r}]: weight out of range (0,1]: {weight}")
        if spec.get("polarity") not in (1, -1):
            findings.append(f"entries[{phrase!r}]: polarity must be +1 or -1")
        if not spec.get("attribute"):
            findings.append(f"entries[{phrase!r}]: missing attribute id")
    for phrase, value in document.get("valence_terms", {}).items():
        check_phrase(phrase, "valence_terms")
        if not (-1 <= value <= 1):
            findings.append(f"valence_terms[{phrase!r}]: value out of range [-1,1]: {value}")
    for phrase, spec in document.get("risk_keywords", {}).items():
        check_phrase(phrase, "risk_keywords")
        weight = spec.get("weight", 0)
        if not (0 < weight <= 1):
            findings.append(f"risk_keywords[{phrase!r}]: weight out of range (0,1]: {weight}")
        if not spec.get("id"):
            findings.append(f"risk_keywords[{phrase!r}]: missing keyword id")
    for marker in document.get("negation_markers", []):
        if not marker or not tokenize(marker):
            findings.append("negation_markers: empty phrase")
    return findings


def _phrase_index(phrases: dict) -> dict[str, list[tuple[tuple[str, ...], str]]]:
    """Index phrases by first token; candidates sorted longest-first, then lexicographic."""
    index: dict[str, list[tuple[tuple[str, ...], str]]] = {}
    for phrase in phrases:
        tokens = tuple(tokenize(phrase))
        if not tokens:
            continue
        index.setdefault(tokens[0], []).append((tokens, phrase))
    for candidates in index.values():
        candidates.sort(key=lambda item: (-len(item[0]), item[1]))
    return index


def _scan(tokens: list[str], phrases: dict) -> list[tuple[int, str]]:
    """Longest-match, non-overlapping scan of one phrase table.

    Returns (start_index, phrase) matches in text order. Ties on length
    break lexicographically via the index ordering.
    """
    index = _phrase_index(phrases)
    matches: list[tuple[int, str]] = []
    i = 0
    while i < len(tokens):
        hit = None
        for candidate_tokens, phrase in index.get(tokens[i], []):
            if tuple(tokens[i : i + len(candidate_tokens)]) == candidate_tokens:
                hit = (candidate_tokens, phrase)
                break
        if hit is None:
            i += 1
        else:
            matches.append((i, hit[1]))
            i += len(hit[0])
    return matches


def _negated(tokens: list[str], start: int, markers: tuple[str, ...]) -> bool:
    """True when a negation marker ends within NEGATION_WINDOW tokens before start."""
    window = tokens[max(0, start - NEGATION_WINDOW) : start]
    for marker in markers:
        marker_tokens = tokenize(marker)
        if not marker_tokens:
            continue
        span = len(marker_tokens)
        for offset in range(len(window) - span + 1):
            if window[offset : offset + span] == marker_tokens:
                return True
    return False


def extract_signals(utterance: Utterance, lexicon: Lexicon) -> ExtractionResult:
    """Deterministic lexicon extraction for one utterance."""
    tokens = tokenize(utterance.text)
    if not tokens:
        return ExtractionResult()

    # Attribute observations: strongest |value| per attribute wins,
    # ties broken by lexicographically smallest phrase.
    candidates: dict[str, tuple[float, str]] = {}
    for start, phrase in _scan(tokens, lexicon.entries):
        entry = lexicon.entries[phrase]
        sign = -entry.polarity if _negated(tokens, start, lexicon.negation_markers) else entry.polarity
        value = _clamp(sign * entry.weight)
        current = candidates.get(entry.attribute_id)
        if (
            current is None
            or abs(value) > abs(current[0])
            or (abs(value) == abs(current[0]) and phrase < current[1])
        ):
            candidates[entry.attribute_id] = (value, phrase)
    observations = {attr: value for attr, (value, _) in candidates.items()}

    valence_values: list[float] = []
    for start, phrase in _scan(tokens, lexicon.valence_terms):
        value = lexicon.valence_terms[phrase]
        if _negated(tokens, start, lexicon.negation_markers):
            value = -value
        valence_values.append(value)
    valence = _clamp(sum(valence_values) / len(valence_values)) if valence_values else 0.0

    hits = tuple(lexicon.risk_keywords[phrase].keyword_id for _, phrase in _scan(tokens, lexicon.risk_keywords))

    return ExtractionResult(
        attribute_observations=observations,
        valence=valence,
        risk_keyword_hits=hits,
        word_count=len(tokens),
    )


class LexiconExtractor:
    """Default extractor: pure function of (text, lexicon)."""

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon

    def extract(self, utterance: Utterance) -> ExtractionResult:
        return extract_signals(utterance, self.lexicon)


def _post_json(url: str, payload: dict, timeout_ms: int) -> dict:
    data = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(url, data=data, headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(request, timeout=timeout_ms / 1000.0) as response:
        return json.loads(response.read().decode("utf-8"))


def _parse_endpoint_reply(reply: dict) -> ExtractionResult:
    observations = reply["attribute_observations"]
    if not isinstance(observations, dict):
        raise ValueError("attribute_observations must be an object")
    parsed = {str(k): _clamp(float(v)) for k, v in observations.items()}
    valence = _clamp(float(reply["valence"]))
    hits = tuple(str(h) for h in reply["risk_keyword_hits"])
    word_count = int(reply.get("word_count", 0))
    return ExtractionResult(
        attribute_observations=parsed, valence=valence, risk_keyword_hits=hits, word_count=word_count
    )


class EndpointExtractor:
    """POSTs the utterance to an external extraction service.

    Any transport or shape failure falls back to the lexicon extractor;
    `on_fallback` receives a one-line description for audit warnings.
    """

    def __init__(
        self,
        url: str,
        lexicon: Lexicon,
        timeout_ms: int = 2000,
        on_fallback: Callable[[str], None] | None = None,
    ):
        self.url = url
        self.timeout_ms = timeout_ms
        self._fallback = LexiconExtractor(lexicon)
        self._on_fallback = on_fallback

    def extract(self, utterance: Utterance) -> ExtractionResult:
        try:
            reply = _post_json(self.url, {"text": utterance.text, "turn": utterance.turn}, self.timeout_ms)
            result = _parse_endpoint_reply(reply)
        except (urllib.error.URLError, OSError, ValueError, KeyError, TypeError) as exc:
            if self._on_fallback is not None:
                self._on_fallback(f"extractor endpoint fallback: {exc.__class__.__name__}: {exc}")
            return self._fallback.extract(utterance)
        word_count = result.word_count or len(tokenize(utterance.text))
        return ExtractionResult(
            attribute_observations=result.attribute_observations,
            valence=result.valence,
            risk_keyword_hits=result.risk_keyword_hits,
            word_count=word_count,
        )
