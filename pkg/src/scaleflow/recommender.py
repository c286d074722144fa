"""Candidate scale scoring, re-ranking and constraint filtering.

Each scale gets a weighted score combining adaptability (cosine between
the live context vector and the scale's characteristic vector) and a
priority term favoring shorter scales and unassessed dimensions. Safety
filters run before any pluggable reranker, and the reranker may only
permute or truncate — never introduce scales the filters removed.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .belief import BeliefState
from .context import ContextState
from .errors import DimensionMismatch, EmptyCatalog, NoEligibleScale

DEFAULT_W_ADAPT = 0.7
DEFAULT_W_PRIORITY = 0.3
DEFAULT_W_LEN = 0.5
DEFAULT_W_COMP = 0.5
DEFAULT_MAX_JOINT = 3


@dataclass(frozen=True)
class ScoringWeights:
    w_adapt: float = DEFAULT_W_ADAPT
    w_priority: float = DEFAULT_W_PRIORITY
    w_len: float = DEFAULT_W_LEN
    w_comp: float = DEFAULT_W_COMP

    def __post_init__(self) -> None:
        if self.w_adapt < 0 or self.w_priority < 0:
            raise ValueError("w_adapt and w_priority must be non-negative")
        if self.w_adapt + self.w_priority <= 0:
            raise ValueError("w_adapt + w_priority must be positive")
        if abs(self.w_len + self.w_comp - 1.0) > 1e-9:
            raise ValueError("w_len + w_comp must equal 1")


@dataclass(frozen=True)
class ScaleProfile:
    scale_id: str
    characteristic_vector: tuple[float, ...]
    item_count: int
    covered_dimensions: frozenset[str]
    contraindications: frozenset[str] = frozenset()
    cooldown_turns: int = 0


@dataclass(frozen=True)
class ScoredCandidate:
    scale_id: str
    score: float
    adaptability: float
    priority: float
    profile: ScaleProfile

    def to_payload(self) -> dict:
        return {
            "scale_id": self.scale_id,
            "score": self.score,
            "adaptability": self.adaptability,
            "priority": self.priority,
        }


@dataclass(frozen=True)
class Recommendation:
    scales: tuple[ScoredCandidate, ...]
    mode: str  # "single" | "joint-multi"
    rationale: tuple[str, ...]

    def scale_ids(self) -> tuple[str, ...]:
        return tuple(c.scale_id for c in self.scales)

    def to_payload(self) -> dict:
        return {
            "mode": self.mode,
            "scales": [c.to_payload() for c in self.scales],
            "rationale": list(self.rationale),
        }


def adaptability_score(ctx: np.ndarray, profile: ScaleProfile) -> float:
    """Cosine similarity; zero-norm operands score 0."""
    characteristic = np.asarray(profile.characteristic_vector, dtype=float)
    if ctx.shape != characteristic.shape:
        raise DimensionMismatch(
            f"context dim {ctx.shape} vs profile {profile.scale_id} dim {characteristic.shape}"
        )
    norm_ctx = float(np.linalg.norm(ctx))
    norm_chr = float(np.linalg.norm(characteristic))
    if norm_ctx == 0.0 or norm_chr == 0.0:
        return 0.0
    return float(np.dot(ctx, characteristic) / (norm_ctx * norm_chr))


def assessed_dimensions(state: ContextState, catalog: Sequence[ScaleProfile]) -> frozenset[str]:
    """Union of dimensions covered by scales already completed this session."""
    by_id = {p.scale_id: p for p in catalog}
    dims: set[str] = set()
    for ref in state.history.results:
        profile = by_id.get(ref.scale_id)
        if profile is not None:
            dims.update(profile.covered_dimensions)
    return frozenset(dims)


def priority_score(
    profile: ScaleProfile,
    weights: ScoringWeights,
    catalog_max_items: int,
    assessed: frozenset[str],
) -> float:
    """Burden/novelty heuristic in [0,1].

    Length term rewards short scales; novelty is the fraction of the
    scale's dimensions not yet assessed (1 with no history, 0 for an
    empty dimension set).
    """
    if catalog_max_items < profile.item_count:
        raise ValueError(
            f"catalog_max_items {catalog_max_items} < item_count {profile.item_count} for {profile.scale_id}"
        )
    length_term = 1.0 - profile.item_count / catalog_max_items
    if profile.covered_dimensions:
        novel = len(profile.covered_dimensions - assessed) / len(profile.covered_dimensions)
    else:
        novel = 0.0
    return weights.w_len * length_term + weights.w_comp * novel


def score_candidates(
    ctx: np.ndarray,
    catalog: Sequence[ScaleProfile],
    weights: ScoringWeights,
    state: ContextState,
) -> list[ScoredCandidate]:
    """Score every scale and sort by score descending, ties by scale_id."""
    if not catalog:
        raise EmptyCatalog("cannot score an empty catalog")
    max_items = max(p.item_count for p in catalog)
    assessed = assessed_dimensions(state, catalog)
    candidates = []
    for profile in catalog:
        adapt = adaptability_score(ctx, profile)
        priority = priority_score(profile, weights, max_items, assessed)
        score = weights.w_adapt * adapt + weights.w_priority * priority
        candidates.append(
            ScoredCandidate(
                scale_id=profile.scale_id,
                score=score,
                adaptability=adapt,
                priority=priority,
                profile=profile,
            )
        )
    candidates.sort(key=lambda c: (-c.score, c.scale_id))
    return candidates


class Reranker(Protocol):
    def rerank(self, candidates: Sequence[ScoredCandidate], suspected: str, turn: int) -> list[str]:
        """Return an ordering (possibly truncated) of candidate scale ids."""
        ...


class IdentityReranker:
    def rerank(self, candidates: Sequence[ScoredCandidate], suspected: str, turn: int) -> list[str]:
        return [c.scale_id for c in candidates]


class EndpointReranker:
    """Delegates ordering to an external service; falls back to identity.

    The reply may only permute or truncate the request ids; anything else
    (unknown ids, transport errors, malformed JSON) falls back.
    """

    def __init__(self, url: str, timeout_ms: int = 2000, on_fallback: Callable[[str], None] | None = None):
        self.url = url
        self.timeout_ms = timeout_ms
        self._on_fallback = on_fallback

    def rerank(self, candidates: Sequence[ScoredCandidate], suspected: str, turn: int) -> list[str]:
        identity = [c.scale_id for c in candidates]
        request = {
            "candidates": [c.to_payload() for c in candidates],
            "belief_argmax": suspected,
            "turn": turn,
        }
        try:
            data = json.dumps(request).encode("utf-8")
            req = urllib.request.Request(self.url, data=data, headers={"Content-Type": "application/json"})
            with urllib.request.urlopen(req, timeout=self.timeout_ms / 1000.0) as response:
                reply = json.loads(response.read().decode("utf-8"))
            ordered = [str(s) for s in reply["ordered_scale_ids"]]
        except (urllib.error.URLError, OSError, ValueError, KeyError, TypeError) as exc:
            if self._on_fallback is not None:
                self._on_fallback(f"reranker endpoint fallback: {exc.__class__.__name__}: {exc}")
            return identity
        if len(set(ordered)) != len(ordered) or not set(ordered) <= set(identity):
            if self._on_fallback is not None:
                self._on_fallback("reranker endpoint fallback: reply ids not a subset of request ids")
            return identity
        return ordered


def _greedy_joint(survivors: list[ScoredCandidate], k: int) -> list[ScoredCandidate]:
    """Greedy set-cover over covered_dimensions.

    Each step takes the candidate adding the most uncovered dimensions;
    ties prefer the higher score, then the smaller scale_id.
    """
    chosen: list[ScoredCandidate] = []
    covered: set[str] = set()
    remaining = list(survivors)
    while remaining and len(chosen) < k:
        best = min(
            remaining,
            key=lambda c: (-len(c.profile.covered_dimensions - covered), -c.score, c.scale_id),
        )
        chosen.append(best)
        covered.update(best.profile.covered_dimensions)
        remaining.remove(best)
    return chosen


@dataclass(frozen=True)
class FinalizeConfig:
    mode: str = "single"  # "single" | "joint-multi"
    max_joint: int = DEFAULT_MAX_JOINT


def finalize_recommendation(
    ranked: Sequence[ScoredCandidate],
    belief: BeliefState,
    state: ContextState,
    reranker: Reranker | None = None,
    config: FinalizeConfig | None = None,
) -> Recommendation:
    """Constraint filtering, optional re-ranking, then final selection.

    Filters drop contraindicated scales (vs the argmax condition) and
    scales still inside their cooldown window. Raises NoEligibleScale when
    nothing survives, which sends the orchestrator back to refinement.
    """
    if not ranked:
        raise EmptyCatalog("finalize requires a non-empty ranked list")
    config = config or FinalizeConfig()
    suspected = belief.argmax()
    rationale: list[str] = []

    last_turn_by_scale: dict[str, int] = {}
    for ref in state.history.results:
        last_turn_by_scale[ref.scale_id] = max(ref.turn, last_turn_by_scale.get(ref.scale_id, -1))

    survivors: list[ScoredCandidate] = []
    for candidate in ranked:
        if suspected in candidate.profile.contraindications:
            rationale.append(f"dropped {candidate.scale_id}: contraindicated for {suspected}")
            continue
        administered = last_turn_by_scale.get(candidate.scale_id)
        if administered is not None and state.turn - administered < candidate.profile.cooldown_turns:
            rationale.append(f"dropped {candidate.scale_id}: within cooldown ({candidate.profile.cooldown_turns} turns)")
            continue
        survivors.append(candidate)

    if not survivors:
        raise NoEligibleScale(f"no eligible scale for suspected condition {suspected}")

    if reranker is not None and not isinstance(reranker, IdentityReranker):
        ordered_ids = reranker.rerank(survivors, suspected, state.turn)
        by_id = {c.scale_id: c for c in survivors}
        reranked = [by_id[s] for s in ordered_ids if s in by_id]
        if reranked:
            if [c.scale_id for c in reranked] != [c.scale_id for c in survivors]:
                rationale.append("order adjusted by reranker")
            survivors = reranked

    if config.mode == "joint-multi":
        chosen = _greedy_joint(survivors, config.max_joint)
        mode = "joint-multi"
        rationale.append(
            "joint coverage: " + ", ".join(sorted(set().union(*(c.profile.covered_dimensions for c in chosen))))
        )
    else:
        chosen = [survivors[0]]
        mode = "single"

    for candidate in chosen:
        rationale.append(
            f"{candidate.scale_id}: adaptability {candidate.adaptability:.4f}, "
            f"priority {candidate.priority:.4f}, score {candidate.score:.4f}"
        )
    ordered = tuple(sorted(chosen, key=lambda c: (-c.score, c.scale_id)))
    return Recommendation(scales=ordered, mode=mode, rationale=tuple(rationale))
