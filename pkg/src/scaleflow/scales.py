"""Schema-driven questionnaire definitions, progression, and scoring.

Scales live as JSON documents so new instruments can be added without
code changes. Items are presented strictly in authored order; scoring is
a pure function over a complete response set, with reverse-scored items
mapped through (max_option + min_option - value) and band lookup by
total.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from . import canonical
from .errors import IncompleteResponses, InvalidResponse
from .recommender import ScaleProfile

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScaleOption:
    label: str
    value: int


@dataclass(frozen=True)
class ScaleItem:
    item_id: str
    prompt: str
    options: tuple[ScaleOption, ...]
    reverse_scored: bool = False

    def values(self) -> tuple[int, ...]:
        return tuple(o.value for o in self.options)

    def reverse_map(self, value: int) -> int:
        bounds = self.values()
        return max(bounds) + min(bounds) - value


@dataclass(frozen=True)
class ScoreBand:
    min_total: float
    max_total: float
    label: str
    normalized_severity: float
    interpretation: str = ""


@dataclass(frozen=True)
class ScoringRules:
    method: str  # "sum" | "mean"
    bands: tuple[ScoreBand, ...]
    subscales: dict[str, frozenset[str]] = field(default_factory=dict)


@dataclass(frozen=True)
class ScaleDefinition:
    scale_id: str
    title: str
    items: tuple[ScaleItem, ...]
    scoring: ScoringRules
    profile: ScaleProfile
    schema_version: int = SCHEMA_VERSION

    def item_by_id(self, item_id: str) -> ScaleItem | None:
        for item in self.items:
            if item.item_id == item_id:
                return item
        return None

    def total_range(self) -> tuple[float, float]:
        per_item = [(min(i.values()), max(i.values())) for i in self.items]
        lows = [lo for lo, _ in per_item]
        highs = [hi for _, hi in per_item]
        if self.scoring.method == "mean":
            return sum(lows) / len(lows), sum(highs) / len(highs)
        return float(sum(lows)), float(sum(highs))

    @classmethod
    def from_dict(cls, document: dict) -> "ScaleDefinition":
        items = tuple(
            ScaleItem(
                item_id=i["item_id"],
                prompt=i["prompt"],
                options=tuple(ScaleOption(label=o["label"], value=int(o["value"])) for o in i["options"]),
                reverse_scored=bool(i.get("reverse_scored", False)),
            )
            for i in document["items"]
        )
        scoring = document["scoring"]
        rules = ScoringRules(
            method=scoring["method"],
            bands=tuple(
                ScoreBand(
                    min_total=float(b["min_total"]),
                    max_total=float(b["max_total"]),
                    label=b["label"],
                    normalized_severity=float(b["normalized_severity"]),
                    interpretation=b.get("interpretation", ""),
                )
                for b in scoring["bands"]
            ),
            subscales={k: frozenset(v) for k, v in scoring.get("subscales", {}).items()},
        )
        profile_doc = document["profile"]
        profile = ScaleProfile(
            scale_id=document["scale_id"],
            characteristic_vector=tuple(float(x) for x in profile_doc["characteristic_vector"]),
            item_count=int(profile_doc.get("item_count", len(items))),
            covered_dimensions=frozenset(profile_doc.get("covered_dimensions", [])),
            contraindications=frozenset(profile_doc.get("contraindications", [])),
            cooldown_turns=int(profile_doc.get("cooldown_turns", 0)),
        )
        return cls(
            scale_id=document["scale_id"],
            title=document.get("title", document["scale_id"]),
            items=items,
            scoring=rules,
            profile=profile,
            schema_version=int(document.get("schema_version", SCHEMA_VERSION)),
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "scale_id": self.scale_id,
            "title": self.title,
            "items": [
                {
                    "item_id": i.item_id,
                    "prompt": i.prompt,
                    "options": [{"label": o.label, "value": o.value} for o in i.options],
                    "reverse_scored": i.reverse_scored,
                }
                for i in self.items
            ],
            "scoring": {
                "method": self.scoring.method,
                "bands": [
                    {
                        "min_total": b.min_total,
                        "max_total": b.max_total,
                        "label": b.label,
                        "normalized_severity": b.normalized_severity,
                        "interpretation": b.interpretation,
                    }
                    for b in self.scoring.bands
                ],
                "subscales": {k: sorted(v) for k, v in sorted(self.scoring.subscales.items())},
            },
            "profile": {
                "characteristic_vector": list(self.profile.characteristic_vector),
                "item_count": self.profile.item_count,
                "covered_dimensions": sorted(self.profile.covered_dimensions),
                "contraindications": sorted(self.profile.contraindications),
                "cooldown_turns": self.profile.cooldown_turns,
            },
        }


def validate_scale_definition(document: dict, expected_dimension: int | None = None) -> list[str]:
    """Validate a raw scale document; returns findings (empty = ok)."""
    findings: list[str] = []
    scale_id = document.get("scale_id")
    if not scale_id:
        findings.append("missing scale_id")
        scale_id = "<unknown>"

    items = document.get("items", [])
    if not items:
        findings.append(f"{scale_id}: no items")
    item_ids = [i.get("item_id") for i in items]
    if len(set(item_ids)) != len(item_ids):
        findings.append(f"{scale_id}: duplicate item ids")
    lows, highs = [], []
    for item in items:
        options = item.get("options", [])
        values = [o.get("value") for o in options]
        if len(options) < 2:
            findings.append(f"{scale_id}/{item.get('item_id')}: fewer than 2 options")
            continue
        if len(set(values)) != len(values):
            findings.append(f"{scale_id}/{item.get('item_id')}: option values not distinct")
        lows.append(min(values))
        highs.append(max(values))

    scoring = document.get("scoring", {})
    method = scoring.get("method")
    if method not in ("sum", "mean"):
        findings.append(f"{scale_id}: scoring.method must be sum or mean")
    for subscale, members in scoring.get("subscales", {}).items():
        for member in members:
            if member not in item_ids:
                findings.append(f"{scale_id}: subscale {subscale} references missing item {member}")

    bands = scoring.get("bands", [])
    if not bands:
        findings.append(f"{scale_id}: no bands")
    elif lows and highs:
        if method == "mean":
            min_total, max_total = sum(lows) / len(lows), sum(highs) / len(highs)
        else:
            min_total, max_total = sum(lows), sum(highs)
        if bands[0].get("min_total") > min_total:
            findings.append(f"{scale_id}: first band starts above minimum total {min_total}")
        if bands[-1].get("max_total") < max_total:
            findings.append(f"{scale_id}: last band ends below maximum total {max_total}")
        for band in bands:
            severity = band.get("normalized_severity", -1)
            if not (0 <= severity <= 1):
                findings.append(f"{scale_id}: band {band.get('label')} severity out of [0,1]")
            if band.get("min_total") > band.get("max_total"):
                findings.append(f"{scale_id}: band {band.get('label')} min above max")
        for prev, nxt in zip(bands, bands[1:]):
            step = 1 if method == "sum" else 0
            expected = prev.get("max_total") + step
            if nxt.get("min_total") > expected:
                findings.append(f"{scale_id}: band gap at {expected}")
            elif nxt.get("min_total") < expected:
                findings.append(f"{scale_id}: band overlap at {nxt.get('min_total')}")

    profile = document.get("profile", {})
    vector = profile.get("characteristic_vector", [])
    if expected_dimension is not None and len(vector) != expected_dimension:
        findings.append(f"{scale_id}: characteristic_vector dimension {len(vector)} != {expected_dimension}")
    declared = profile.get("item_count", len(items))
    if declared != len(items):
        findings.append(f"{scale_id}: item_count {declared} != {len(items)} items")
    if profile.get("cooldown_turns", 0) < 0:
        findings.append(f"{scale_id}: cooldown_turns negative")
    return findings


@dataclass(frozen=True)
class AssessmentSession:
    scale_id: str
    responses: dict[str, int] = field(default_factory=dict)
    cursor: int = 0
    started_at: int = 0
    completed_at: int | None = None

    def completed(self, definition: ScaleDefinition) -> bool:
        return len(self.responses) == len(definition.items)


@dataclass(frozen=True)
class ScaleResult:
    scale_id: str
    total_score: float
    subscale_scores: dict[str, float]
    band_label: str
    normalized_severity: float
    completed_at: int

    def to_payload(self) -> dict:
        return {
            "scale_id": self.scale_id,
            "total_score": self.total_score,
            "subscale_scores": dict(sorted(self.subscale_scores.items())),
            "band_label": self.band_label,
            "normalized_severity": self.normalized_severity,
            "completed_at": self.completed_at,
        }


def next_item(session: AssessmentSession, definition: ScaleDefinition) -> ScaleItem | None:
    """Item at the cursor, or None when every item is answered."""
    if session.cursor >= len(definition.items):
        return None
    return definition.items[session.cursor]


def submit_response(
    session: AssessmentSession,
    item_id: str,
    value: int,
    definition: ScaleDefinition,
    submitted_at: int = 0,
) -> AssessmentSession:
    """Record an answer to the cursor item and advance."""
    current = next_item(session, definition)
    if current is None:
        raise InvalidResponse(f"{session.scale_id}: assessment already complete")
    if item_id != current.item_id:
        raise InvalidResponse(f"{session.scale_id}: expected item {current.item_id}, got {item_id}")
    if value not in current.values():
        raise InvalidResponse(f"{session.scale_id}/{item_id}: value {value} not among options")
    responses = dict(session.responses)
    responses[item_id] = value
    cursor = session.cursor + 1
    done = cursor >= len(definition.items)
    return AssessmentSession(
        scale_id=session.scale_id,
        responses=responses,
        cursor=cursor,
        started_at=session.started_at,
        completed_at=submitted_at if done else None,
    )


def _band_for(total: float, bands: tuple[ScoreBand, ...]) -> ScoreBand:
    for band in bands:
        if band.min_total <= total <= band.max_total:
            return band
    raise ValueError(f"total {total} not covered by any band")


def _aggregate(values: list[int], method: str) -> float:
    if method == "mean":
        return sum(values) / len(values)
    return sum(values)


def score_scale(
    definition: ScaleDefinition, responses: dict[str, int], completed_at: int = 0
) -> ScaleResult:
    """Score a complete response set against the definition."""
    missing = [i.item_id for i in definition.items if i.item_id not in responses]
    if missing:
        raise IncompleteResponses(f"{definition.scale_id}: missing responses for {missing}")
    effective: dict[str, int] = {}
    for item in definition.items:
        value = responses[item.item_id]
        if value not in item.values():
            raise InvalidResponse(f"{definition.scale_id}/{item.item_id}: value {value} not among options")
        effective[item.item_id] = item.reverse_map(value) if item.reverse_scored else value

    total = _aggregate([effective[i.item_id] for i in definition.items], definition.scoring.method)
    subscales = {
        name: _aggregate([effective[i] for i in sorted(members)], definition.scoring.method)
        for name, members in definition.scoring.subscales.items()
    }
    band = _band_for(total, definition.scoring.bands)
    return ScaleResult(
        scale_id=definition.scale_id,
        total_score=total,
        subscale_scores=subscales,
        band_label=band.label,
        normalized_severity=band.normalized_severity,
        completed_at=completed_at,
    )


def load_catalog(directory: str) -> dict[str, ScaleDefinition]:
    """Load every *.json scale file in a directory, keyed by scale_id."""
    catalog: dict[str, ScaleDefinition] = {}
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(directory, name), encoding="utf-8") as fh:
            definition = ScaleDefinition.from_dict(json.load(fh))
        if definition.scale_id in catalog:
            raise ValueError(f"duplicate scale_id {definition.scale_id} in catalog")
        catalog[definition.scale_id] = definition
    return catalog


def validate_catalog(directory: str, expected_dimension: int | None = None) -> list[str]:
    """Validate every scale file in a directory; findings prefixed by filename."""
    findings: list[str] = []
    seen_ids: set[str] = set()
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".json"):
            continue
        path = os.path.join(directory, name)
        try:
            with open(path, encoding="utf-8") as fh:
                document = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            findings.append(f"{name}: unreadable ({exc})")
            continue
        for finding in validate_scale_definition(document, expected_dimension):
            findings.append(f"{name}: {finding}")
        scale_id = document.get("scale_id")
        if scale_id in seen_ids:
            findings.append(f"{name}: duplicate scale_id {scale_id}")
        if scale_id:
            seen_ids.add(scale_id)
    return findings


def catalog_fingerprint(catalog: dict[str, ScaleDefinition]) -> str:
    return canonical.digest({scale_id: d.to_dict() for scale_id, d in sorted(catalog.items())})
