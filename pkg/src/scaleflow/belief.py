"""Condition belief tracking and information-gain question selection.

The belief is a distribution over candidate conditions, updated by Bayes
rule from binary attribute outcomes. Confidence measures how much of the
suspected condition's required attribute set has been observed, and the
refinement selector picks the unobserved attribute with maximal expected
entropy reduction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from . import canonical
from .context import ContextState
from .errors import UnknownAttribute

# Evidence thresholding: bridges continuous evidence to binary outcomes.
PRESENT_THRESHOLD = 0.25
ABSENT_THRESHOLD = -0.25

MIN_INFO_GAIN = 1e-9

DEFAULT_TAU_MIN = 0.2
DEFAULT_TAU_MAX = 0.8


class Phase(str, Enum):
    EXPLORE = "Explore"
    REFINE = "Refine"
    RECOMMEND = "Recommend"


@dataclass(frozen=True)
class PhaseThresholds:
    tau_min: float = DEFAULT_TAU_MIN
    tau_max: float = DEFAULT_TAU_MAX

    def __post_init__(self) -> None:
        if not (0.0 < self.tau_min < self.tau_max < 1.0):
            raise ValueError(f"thresholds must satisfy 0 < tau_min < tau_max < 1, got {self}")


@dataclass(frozen=True)
class KnowledgeBase:
    """Condition/attribute vocabulary with likelihood tables and priors.

    likelihood[(condition, attribute)] = P(attribute present | condition),
    strictly inside (0, 1) so posteriors never degenerate.
    """

    conditions: tuple[str, ...]
    attribute_vocabulary: tuple[str, ...]
    required_attributes: dict[str, frozenset[str]]
    likelihood: dict[tuple[str, str], float]
    prior: dict[str, float]
    question_templates: dict[str, str]

    @classmethod
    def from_dict(cls, document: dict) -> "KnowledgeBase":
        conditions = tuple(document["conditions"])
        vocabulary = tuple(document["attribute_vocabulary"])
        likelihood = {
            (cond, attr): float(p)
            for cond, table in document["likelihood"].items()
            for attr, p in table.items()
        }
        return cls(
            conditions=conditions,
            attribute_vocabulary=vocabulary,
            required_attributes={
                cond: frozenset(attrs) for cond, attrs in document["required_attributes"].items()
            },
            likelihood=likelihood,
            prior={cond: float(p) for cond, p in document["prior"].items()},
            question_templates=dict(document.get("question_templates", {})),
        )

    def to_dict(self) -> dict:
        tables: dict[str, dict[str, float]] = {}
        for (cond, attr), p in self.likelihood.items():
            tables.setdefault(cond, {})[attr] = p
        return {
            "conditions": list(self.conditions),
            "attribute_vocabulary": list(self.attribute_vocabulary),
            "required_attributes": {c: sorted(a) for c, a in sorted(self.required_attributes.items())},
            "likelihood": {c: dict(sorted(t.items())) for c, t in sorted(tables.items())},
            "prior": dict(sorted(self.prior.items())),
            "question_templates": dict(sorted(self.question_templates.items())),
        }

    def fingerprint(self) -> str:
        return canonical.digest(self.to_dict())

    @property
    def dimension(self) -> int:
        return len(self.attribute_vocabulary) + 3

    def question_for(self, attribute_id: str) -> str:
        return self.question_templates.get(
            attribute_id, f"Could you tell me more about {attribute_id.replace('_', ' ')}?"
        )


def load_knowledge_base(path: str) -> KnowledgeBase:
    with open(path, encoding="utf-8") as fh:
        return KnowledgeBase.from_dict(json.load(fh))


def validate_knowledge_base(document: dict) -> list[str]:
    """Validate a raw knowledge-base document; returns findings (empty = ok)."""
    findings: list[str] = []
    conditions = list(document.get("conditions", []))
    vocabulary = list(document.get("attribute_vocabulary", []))
    if not conditions:
        findings.append("conditions: empty")
    if len(set(conditions)) != len(conditions):
        findings.append("conditions: duplicates")
    if len(set(vocabulary)) != len(vocabulary):
        findings.append("attribute_vocabulary: duplicates")

    prior = document.get("prior", {})
    total = sum(prior.get(c, 0.0) for c in conditions)
    if abs(total - 1.0) > 1e-9:
        findings.append(f"prior: sums to {total}, expected 1")
    for cond, p in prior.items():
        if not (0 < p < 1):
            findings.append(f"prior[{cond}]: must be strictly inside (0,1), got {p}")

    for cond, attrs in document.get("required_attributes", {}).items():
        if cond not in conditions:
            findings.append(f"required_attributes: unknown condition {cond}")
        for attr in attrs:
            if attr not in vocabulary:
                findings.append(f"required_attributes[{cond}]: {attr} not in vocabulary")

    likelihood = document.get("likelihood", {})
    for cond in conditions:
        table = likelihood.get(cond)
        if table is None:
            findings.append(f"likelihood: missing table for {cond}")
            continue
        for attr in vocabulary:
            p = table.get(attr)
            if p is None:
                findings.append(f"likelihood[{cond}]: missing {attr}")
            elif not (0 < p < 1):
                findings.append(f"likelihood[{cond}][{attr}]: must be strictly inside (0,1), got {p}")
    return findings


@dataclass(frozen=True)
class BeliefState:
    probabilities: dict[str, float]

    def to_payload(self) -> dict:
        return {c: self.probabilities[c] for c in sorted(self.probabilities)}

    def argmax(self) -> str:
        """Most probable condition; ties break lexicographically."""
        return max(sorted(self.probabilities), key=lambda c: self.probabilities[c])


def initial_belief(kb: KnowledgeBase) -> BeliefState:
    return BeliefState(probabilities=dict(kb.prior))


def update_belief(
    belief: BeliefState, attribute_id: str, observed_present: bool, kb: KnowledgeBase
) -> BeliefState:
    """Bayes update from one binary attribute outcome, renormalized."""
    if attribute_id not in kb.attribute_vocabulary:
        raise UnknownAttribute(attribute_id)
    unnormalized = {}
    for cond, p in belief.probabilities.items():
        like = kb.likelihood[(cond, attribute_id)]
        unnormalized[cond] = p * (like if observed_present else 1.0 - like)
    total = sum(unnormalized.values())
    return BeliefState(probabilities={c: v / total for c, v in unnormalized.items()})


def entropy(belief: BeliefState) -> float:
    """Shannon entropy in bits; 0·log0 = 0."""
    return -sum(p * math.log2(p) for p in belief.probabilities.values() if p > 0.0)


def evidence_outcome(value: float | None) -> bool | None:
    """Map continuous evidence to a binary outcome, or None if inside the dead band."""
    if value is None:
        return None
    if value >= PRESENT_THRESHOLD:
        return True
    if value <= ABSENT_THRESHOLD:
        return False
    return None


def compute_confidence(state: ContextState, belief: BeliefState, kb: KnowledgeBase) -> float:
    """Fraction of the suspected condition's required attributes observed.

    An attribute counts as observed iff it has any evidence entry, whatever
    the value. Empty required set means nothing is missing: confidence 1.
    """
    suspected = belief.argmax()
    required = kb.required_attributes.get(suspected, frozenset())
    if not required:
        return 1.0
    missing = sum(1 for attr in required if attr not in state.attributes)
    return 1.0 - missing / len(required)


def expected_info_gain(belief: BeliefState, attribute_id: str, kb: KnowledgeBase) -> float:
    """Prior entropy minus expected posterior entropy for asking one attribute."""
    if attribute_id not in kb.attribute_vocabulary:
        raise UnknownAttribute(attribute_id)
    prior_entropy = entropy(belief)
    p_present = sum(p * kb.likelihood[(c, attribute_id)] for c, p in belief.probabilities.items())
    expected = 0.0
    for outcome, p_outcome in ((True, p_present), (False, 1.0 - p_present)):
        if p_outcome <= 0.0:
            continue
        expected += p_outcome * entropy(update_belief(belief, attribute_id, outcome, kb))
    return prior_entropy - expected


def select_refinement_attribute(
    belief: BeliefState, state: ContextState, kb: KnowledgeBase
) -> str | None:
    """Argmax expected info gain over attributes not yet observed.

    Returns None when everything is observed or no question can move the
    belief by more than MIN_INFO_GAIN bits. Ties break lexicographically.
    """
    best: str | None = None
    best_gain = -math.inf
    for attr in sorted(kb.attribute_vocabulary):
        if attr in state.attributes:
            continue
        gain = expected_info_gain(belief, attr, kb)
        if gain > best_gain:
            best, best_gain = attr, gain
    if best is None or best_gain < MIN_INFO_GAIN:
        return None
    return best


def decide_phase(conf: float, thresholds: PhaseThresholds) -> Phase:
    """Gate on confidence: boundaries close downward at tau_min, upward at tau_max."""
    if conf <= thresholds.tau_min:
        return Phase.EXPLORE
    if conf >= thresholds.tau_max:
        return Phase.RECOMMEND
    return Phase.REFINE
