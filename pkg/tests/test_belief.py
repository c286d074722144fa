from __future__ import annotations

import math
import random

import pytest

from scaleflow.belief import (
    BeliefState,
    KnowledgeBase,
    Phase,
    PhaseThresholds,
    compute_confidence,
    decide_phase,
    entropy,
    evidence_outcome,
    expected_info_gain,
    initial_belief,
    select_refinement_attribute,
    update_belief,
    validate_knowledge_base,
)
from scaleflow.context import AttributeEvidence, new_session_state
from scaleflow.errors import UnknownAttribute

# ---------------------------------------------------------------------------
# Independent oracles. IG uses the mutual-information identity over the
# joint (condition, outcome) table rather than the engine's
# H(prior) - E[H(posterior)] path.
# ---------------------------------------------------------------------------


def oracle_entropy(probabilities):
    return -sum(p * math.log2(p) for p in probabilities.values() if p > 0)


def oracle_info_gain(belief, attribute_id, kb):
    joint = {}
    for cond, p in belief.probabilities.items():
        like = kb.likelihood[(cond, attribute_id)]
        joint[(cond, True)] = p * like
        joint[(cond, False)] = p * (1 - like)
    p_outcome = {
        True: sum(v for (c, o), v in joint.items() if o),
        False: sum(v for (c, o), v in joint.items() if not o),
    }
    gain = 0.0
    for (cond, outcome), p_joint in joint.items():
        if p_joint > 0:
            marginal = belief.probabilities[cond] * p_outcome[outcome]
            gain += p_joint * math.log2(p_joint / marginal)
    return gain


def oracle_select(belief, observed, kb):
    best, best_gain = None, -math.inf
    for attr in sorted(kb.attribute_vocabulary):
        if attr in observed:
            continue
        gain = oracle_info_gain(belief, attr, kb)
        if gain > best_gain:
            best, best_gain = attr, gain
    if best is None or best_gain < 1e-9:
        return None
    return best


def two_condition_kb(like_a=0.9, like_b=0.1, second_attr=None):
    likelihood = {("dep", "a"): like_a, ("anx", "a"): like_b}
    vocabulary = ["a"]
    if second_attr is not None:
        vocabulary.append(second_attr)
        likelihood[("dep", second_attr)] = like_a
        likelihood[("anx", second_attr)] = like_b
    return KnowledgeBase(
        conditions=("anx", "dep"),
        attribute_vocabulary=tuple(vocabulary),
        required_attributes={"dep": frozenset(vocabulary), "anx": frozenset(vocabulary)},
        likelihood=likelihood,
        prior={"dep": 0.5, "anx": 0.5},
        question_templates={},
    )


def random_kb(rng):
    n_cond = rng.randint(2, 5)
    n_attr = rng.randint(1, 8)
    conditions = tuple(f"c{i}" for i in range(n_cond))
    attributes = tuple(f"a{i}" for i in range(n_attr))
    likelihood = {(c, a): rng.uniform(0.02, 0.98) for c in conditions for a in attributes}
    raw = [rng.uniform(0.1, 1.0) for _ in conditions]
    total = sum(raw)
    prior = {c: w / total for c, w in zip(conditions, raw)}
    return KnowledgeBase(
        conditions=conditions,
        attribute_vocabulary=attributes,
        required_attributes={c: frozenset(attributes) for c in conditions},
        likelihood=likelihood,
        prior=prior,
        question_templates={},
    )


# -- update_belief -----------------------------------------------------------


def test_bayes_update_present_by_hand():
    # 0.5 * 0.9 / (0.5 * 0.9 + 0.5 * 0.1) = 0.9
    kb = two_condition_kb()
    posterior = update_belief(BeliefState({"dep": 0.5, "anx": 0.5}), "a", True, kb)
    assert posterior.probabilities["dep"] == pytest.approx(0.9, abs=1e-12)
    assert posterior.probabilities["anx"] == pytest.approx(0.1, abs=1e-12)


def test_bayes_update_symmetric_likelihood_is_noop():
    kb = two_condition_kb(like_a=0.5, like_b=0.5)
    posterior = update_belief(BeliefState({"dep": 0.5, "anx": 0.5}), "a", True, kb)
    assert posterior.probabilities == pytest.approx({"dep": 0.5, "anx": 0.5})


def test_bayes_update_absent_uses_complement():
    kb = two_condition_kb()
    posterior = update_belief(BeliefState({"dep": 0.5, "anx": 0.5}), "a", False, kb)
    assert posterior.probabilities["dep"] == pytest.approx(0.1, abs=1e-12)
    assert posterior.probabilities["anx"] == pytest.approx(0.9, abs=1e-12)


def test_update_belief_rejects_unknown_attribute():
    kb = two_condition_kb()
    with pytest.raises(UnknownAttribute):
        update_belief(BeliefState({"dep": 0.5, "anx": 0.5}), "nope", True, kb)


def test_posterior_normalization_property():
    rng = random.Random(3)
    for _ in range(200):
        kb = random_kb(rng)
        belief = initial_belief(kb)
        for _ in range(rng.randint(1, 5)):
            attr = rng.choice(kb.attribute_vocabulary)
            belief = update_belief(belief, attr, rng.random() < 0.5, kb)
            assert sum(belief.probabilities.values()) == pytest.approx(1.0, abs=1e-9)


# -- entropy -----------------------------------------------------------------


def test_entropy_uniform_four_conditions_is_two_bits():
    assert entropy(BeliefState({c: 0.25 for c in "abcd"})) == pytest.approx(2.0, abs=1e-12)


def test_entropy_point_mass_is_zero():
    assert entropy(BeliefState({"a": 1.0, "b": 0.0})) == 0.0


def test_entropy_09_01():
    # -0.9 log2 0.9 - 0.1 log2 0.1 = 0.4690 (oracle evaluated)
    value = entropy(BeliefState({"a": 0.9, "b": 0.1}))
    assert value == pytest.approx(0.4690, abs=1e-4)
    assert value == pytest.approx(oracle_entropy({"a": 0.9, "b": 0.1}), abs=1e-12)


# -- compute_confidence -------------------------------------------------------


def _state_with(attrs, session="s"):
    state = new_session_state(session, created_at=0)
    evidence = {
        a: AttributeEvidence(attribute_id=a, value=v, last_observed_turn=1, observation_count=1)
        for a, v in attrs.items()
    }
    from dataclasses import replace

    return replace(state, attributes=evidence)


def test_confidence_three_of_five_required(kb):
    # depressive requires 5 attributes; observe 3 of them -> 1 - 2/5 = 0.6
    belief = BeliefState({"anxiety": 0.1, "depressive": 0.7, "sleep_disorder": 0.1, "trauma": 0.1})
    state = _state_with({"low_mood": 0.8, "fatigue": 0.5, "sleep_disturbance": -0.4})
    assert compute_confidence(state, belief, kb) == pytest.approx(0.6)


def test_confidence_all_required_observed(kb):
    belief = BeliefState({"anxiety": 0.1, "depressive": 0.7, "sleep_disorder": 0.1, "trauma": 0.1})
    state = _state_with({a: 0.5 for a in kb.required_attributes["depressive"]})
    assert compute_confidence(state, belief, kb) == 1.0


def test_confidence_none_observed(kb):
    belief = BeliefState({"anxiety": 0.1, "depressive": 0.7, "sleep_disorder": 0.1, "trauma": 0.1})
    assert compute_confidence(_state_with({}), belief, kb) == 0.0


def test_confidence_empty_required_set_is_one():
    kb = two_condition_kb()
    kb = KnowledgeBase(
        conditions=kb.conditions,
        attribute_vocabulary=kb.attribute_vocabulary,
        required_attributes={"dep": frozenset(), "anx": frozenset({"a"})},
        likelihood=kb.likelihood,
        prior=kb.prior,
        question_templates={},
    )
    belief = BeliefState({"dep": 0.9, "anx": 0.1})
    assert compute_confidence(_state_with({}), belief, kb) == 1.0


def test_confidence_ties_break_lexicographically(kb):
    # Uniform belief: argmax must be the lexicographically smallest condition.
    belief = initial_belief(kb)
    assert belief.argmax() == "anxiety"


def test_confidence_counts_denied_attributes_as_observed(kb):
    # One of depressive's five required attributes observed, value -1.0:
    # denial still counts as observed, so conf = 1 - 4/5.
    belief = BeliefState({"anxiety": 0.1, "depressive": 0.7, "sleep_disorder": 0.1, "trauma": 0.1})
    state = _state_with({"low_mood": -1.0})
    assert compute_confidence(state, belief, kb) == pytest.approx(0.2)


def test_confidence_monotone_in_observed_required_attributes(kb):
    rng = random.Random(5)
    belief = BeliefState({"anxiety": 0.05, "depressive": 0.85, "sleep_disorder": 0.05, "trauma": 0.05})
    required = sorted(kb.required_attributes["depressive"])
    for _ in range(200):
        observed = {a: rng.uniform(-1, 1) for a in rng.sample(required, rng.randint(0, len(required) - 1))}
        base = compute_confidence(_state_with(observed), belief, kb)
        unobserved = [a for a in required if a not in observed]
        extra = dict(observed)
        extra[rng.choice(unobserved)] = rng.uniform(-1, 1)
        assert compute_confidence(_state_with(extra), belief, kb) >= base


# -- expected_info_gain --------------------------------------------------------


def test_info_gain_uniform_high_contrast():
    # Brute-force oracle over both outcomes: 0.5310 bits.
    kb = two_condition_kb()
    belief = BeliefState({"dep": 0.5, "anx": 0.5})
    gain = expected_info_gain(belief, "a", kb)
    assert gain == pytest.approx(0.5310, abs=1e-4)
    assert gain == pytest.approx(oracle_info_gain(belief, "a", kb), abs=1e-9)


def test_info_gain_symmetric_likelihood_is_zero():
    kb = two_condition_kb(like_a=0.5, like_b=0.5)
    gain = expected_info_gain(BeliefState({"dep": 0.5, "anx": 0.5}), "a", kb)
    assert gain == pytest.approx(0.0, abs=1e-12)


def test_info_gain_point_mass_belief_is_zero():
    kb = two_condition_kb()
    gain = expected_info_gain(BeliefState({"dep": 1.0, "anx": 0.0}), "a", kb)
    assert abs(gain) <= 1e-12


def test_info_gain_rejects_unknown_attribute():
    kb = two_condition_kb()
    with pytest.raises(UnknownAttribute):
        expected_info_gain(BeliefState({"dep": 0.5, "anx": 0.5}), "zz", kb)


def test_info_gain_non_negative_1000_random_draws():
    rng = random.Random(17)
    for _ in range(1000):
        kb = random_kb(rng)
        belief = initial_belief(kb)
        attr = rng.choice(kb.attribute_vocabulary)
        assert expected_info_gain(belief, attr, kb) >= -1e-12


# -- select_refinement_attribute ------------------------------------------------


def test_select_matches_oracle_on_fixture_kb(kb):
    belief = initial_belief(kb)
    state = _state_with({"low_mood": 0.7, "fatigue": 0.6})
    expected = oracle_select(belief, set(state.attributes), kb)
    assert select_refinement_attribute(belief, state, kb) == expected
    assert expected == "intrusive_memories"


def test_select_returns_none_when_all_observed(kb):
    belief = initial_belief(kb)
    state = _state_with({a: 0.5 for a in kb.attribute_vocabulary})
    assert select_refinement_attribute(belief, state, kb) is None


def test_select_tie_breaks_lexicographically():
    kb = two_condition_kb(second_attr="b")  # identical likelihood columns
    belief = BeliefState({"dep": 0.5, "anx": 0.5})
    assert select_refinement_attribute(belief, _state_with({}), kb) == "a"


def test_select_none_when_no_gain_possible():
    kb = two_condition_kb()
    belief = BeliefState({"dep": 1.0, "anx": 0.0})
    assert select_refinement_attribute(belief, _state_with({}), kb) is None


# -- evidence thresholding --------------------------------------------------------


def test_evidence_outcome_thresholds():
    assert evidence_outcome(0.25) is True
    assert evidence_outcome(-0.25) is False
    assert evidence_outcome(0.2) is None
    assert evidence_outcome(-0.2) is None
    assert evidence_outcome(None) is None


# -- decide_phase ------------------------------------------------------------------


def test_decide_phase_boundaries():
    thresholds = PhaseThresholds()
    assert decide_phase(0.1, thresholds) is Phase.EXPLORE
    assert decide_phase(0.2, thresholds) is Phase.EXPLORE  # boundary closes downward
    assert decide_phase(0.5, thresholds) is Phase.REFINE
    assert decide_phase(0.8, thresholds) is Phase.RECOMMEND  # boundary closes upward
    assert decide_phase(1.0, thresholds) is Phase.RECOMMEND


def test_phase_partition_property():
    rng = random.Random(23)
    thresholds = PhaseThresholds()
    for _ in range(500):
        conf = rng.random()
        phases = [decide_phase(conf, thresholds)]
        assert len(set(phases)) == 1 and phases[0] in (Phase.EXPLORE, Phase.REFINE, Phase.RECOMMEND)


def test_thresholds_must_be_ordered():
    with pytest.raises(ValueError):
        PhaseThresholds(tau_min=0.8, tau_max=0.2)


# -- validator ----------------------------------------------------------------------


def test_validate_fixture_kb_ok(kb):
    assert validate_knowledge_base(kb.to_dict()) == []


def test_validate_prior_sum():
    document = two_condition_kb().to_dict()
    document["prior"] = {"dep": 0.7, "anx": 0.7}
    assert any("prior" in f for f in validate_knowledge_base(document))


def test_validate_likelihood_strictly_inside_unit_interval():
    document = two_condition_kb().to_dict()
    document["likelihood"]["dep"]["a"] = 1.0
    assert any("strictly inside" in f for f in validate_knowledge_base(document))


def test_validate_required_attribute_in_vocabulary():
    document = two_condition_kb().to_dict()
    document["required_attributes"]["dep"] = ["ghost"]
    assert any("not in vocabulary" in f for f in validate_knowledge_base(document))
