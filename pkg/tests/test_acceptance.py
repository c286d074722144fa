"""Acceptance gate: one test per shipping criterion, each printing a
PASS/FAIL line and enforcing its runtime budget. Everything here runs
offline against the bundled assets with external endpoints unconfigured.
"""

from __future__ import annotations

import json
import math
import os
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest

from scaleflow import fixtures
from scaleflow.audit import log_path, read_log, verify_events, verify_file
from scaleflow.belief import (
    BeliefState,
    KnowledgeBase,
    Phase,
    PhaseThresholds,
    decide_phase,
    expected_info_gain,
    initial_belief,
    select_refinement_attribute,
)
from scaleflow.config import EngineConfig
from scaleflow.context import new_session_state
from scaleflow.engine import Engine, SessionPhase
from scaleflow.recommender import ScaleProfile, ScoringWeights, adaptability_score, score_candidates
from scaleflow.replay import replay_session
from scaleflow.risk import RiskConfig, RiskLevel, RiskSignals, risk_index, sigmoid
from scaleflow.scales import score_scale
from scaleflow.simulate import run_script

from test_belief import oracle_info_gain, oracle_select
from test_recommender import oracle_cosine, oracle_ranking
from test_scales import oracle_band, oracle_total

EPOCH = 1_700_000_000_000
RISK_TEXT = "I just want to end my life."


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"FAIL {name}")
        raise
    elapsed = time.monotonic() - start
    if elapsed >= budget_s:
        print(f"FAIL {name} (runtime {elapsed:.2f}s over budget {budget_s}s)")
        raise AssertionError(f"{name}: runtime {elapsed:.2f}s exceeds budget {budget_s}s")
    print(f"PASS {name} ({elapsed:.2f}s)")


@pytest.fixture(autouse=True, scope="module")
def offline_guard():
    # The whole gate must run with external endpoints unconfigured.
    for variable in ("SCALEFLOW_EXTRACTOR_URL", "SCALEFLOW_RERANKER_URL", "SCALEFLOW_WEBHOOK_URL"):
        assert not os.environ.get(variable), f"{variable} must be unset for the acceptance run"
    config = EngineConfig()
    assert config.endpoints.extractor_url is None
    assert config.endpoints.reranker_url is None
    assert config.endpoints.webhook_url is None
    yield


def fresh_engine(config: EngineConfig | None = None, audit_dir: str | None = None) -> Engine:
    return Engine(
        kb=fixtures.default_kb(),
        lexicon=fixtures.default_lexicon(),
        catalog=fixtures.default_catalog(),
        config=config or EngineConfig(),
        audit_dir=audit_dir,
    )


def test_threshold_fidelity():
    with criterion("threshold-fidelity", budget_s=1.0):
        thresholds = PhaseThresholds()
        assert thresholds.tau_min == 0.2
        assert thresholds.tau_max == 0.8
        table = {
            0.0: Phase.EXPLORE,
            0.1: Phase.EXPLORE,
            0.2: Phase.EXPLORE,
            0.21: Phase.REFINE,
            0.5: Phase.REFINE,
            0.79: Phase.REFINE,
            0.8: Phase.RECOMMEND,
            1.0: Phase.RECOMMEND,
        }
        for conf, expected in table.items():
            assert decide_phase(conf, thresholds) is expected, f"conf={conf}"


def test_risk_constant_fidelity():
    with criterion("risk-constant-fidelity", budget_s=5.0):
        config = RiskConfig()
        assert config.r_high == 0.85
        assert sigmoid(0.0) == 0.5

        # Boundary: weighted sum = logit(0.85) = ln(17/3) lands exactly on
        # 0.85 in float64; the strict > rule must not trigger there.
        boundary = RiskConfig(alpha=math.log(17.0 / 3.0), beta=0.0, gamma=0.0, delta=0.0)
        at_boundary = risk_index(
            RiskSignals(emotional_volatility=1.0, keyword_score=0, linguistic_anomaly=0, historical_severity=0),
            boundary,
        )
        assert at_boundary == 0.85
        assert not at_boundary > boundary.r_high

        engine = fresh_engine()
        sid = engine.create_session("boundary-probe", now=EPOCH)
        response = engine.handle_turn(sid, RISK_TEXT, now=EPOCH + 30_000)
        verdict = [e for e in engine.audit_events(sid) if e.kind == "risk_verdict"][-1]
        assert verdict.payload["r"] > 0.85
        assert response.risk_level is RiskLevel.OVERRIDE

        rng = random.Random(1009)
        for _ in range(1000):
            cfg = RiskConfig(
                alpha=rng.uniform(0, 4),
                beta=rng.uniform(0, 4),
                gamma=rng.uniform(0, 4),
                delta=rng.uniform(0, 4),
            )
            base = [rng.random() for _ in range(4)]
            which = rng.randrange(4)
            bumped = list(base)
            bumped[which] = min(1.0, bumped[which] + rng.random() * (1.0 - bumped[which]))
            assert risk_index(RiskSignals(*bumped), cfg) >= risk_index(RiskSignals(*base), cfg)


def _random_kb(rng: random.Random) -> KnowledgeBase:
    n_cond = rng.randint(2, 5)
    n_attr = rng.randint(1, 8)
    conditions = tuple(f"c{i}" for i in range(n_cond))
    attributes = tuple(f"a{i}" for i in range(n_attr))
    raw = [rng.uniform(0.1, 1.0) for _ in conditions]
    total = sum(raw)
    return KnowledgeBase(
        conditions=conditions,
        attribute_vocabulary=attributes,
        required_attributes={c: frozenset(attributes) for c in conditions},
        likelihood={(c, a): rng.uniform(0.02, 0.98) for c in conditions for a in attributes},
        prior={c: w / total for c, w in zip(conditions, raw)},
        question_templates={},
    )


def test_information_gain_oracle_equivalence():
    with criterion("info-gain-oracle-equivalence", budget_s=30.0):
        rng = random.Random(2027)
        fixture_kb = fixtures.default_kb()
        assert len(fixture_kb.conditions) == 4
        assert len(fixture_kb.attribute_vocabulary) == 10
        kbs = [fixture_kb] + [_random_kb(rng) for _ in range(200)]
        for kb in kbs:
            belief = initial_belief(kb)
            # Random walk the belief a little so not every case is the prior.
            for _ in range(rng.randint(0, 3)):
                from scaleflow.belief import update_belief

                belief = update_belief(belief, rng.choice(kb.attribute_vocabulary), rng.random() < 0.5, kb)
            observed = set(rng.sample(kb.attribute_vocabulary, rng.randint(0, len(kb.attribute_vocabulary))))
            state = new_session_state("oracle", created_at=0)
            from dataclasses import replace

            from scaleflow.context import AttributeEvidence

            state = replace(
                state,
                attributes={
                    a: AttributeEvidence(attribute_id=a, value=0.5, last_observed_turn=1, observation_count=1)
                    for a in observed
                },
            )
            for attribute in kb.attribute_vocabulary:
                gain = expected_info_gain(belief, attribute, kb)
                assert gain >= -1e-12
                assert gain == pytest.approx(oracle_info_gain(belief, attribute, kb), abs=1e-9)
            assert select_refinement_attribute(belief, state, kb) == oracle_select(belief, observed, kb)


def test_scoring_oracle_equivalence():
    with criterion("scoring-oracle-equivalence", budget_s=10.0):
        rng = random.Random(3044)
        state = new_session_state("score-oracle", created_at=0)
        for _ in range(100):
            dim = rng.randint(2, 16)
            catalog = [
                ScaleProfile(
                    scale_id=f"s{i}",
                    characteristic_vector=tuple(rng.uniform(-1, 1) for _ in range(dim)),
                    item_count=rng.randint(1, 30),
                    covered_dimensions=frozenset(rng.sample([f"d{k}" for k in range(6)], rng.randint(0, 4))),
                )
                for i in range(rng.randint(1, 10))
            ]
            weights = ScoringWeights(
                w_adapt=rng.uniform(0, 2), w_priority=rng.uniform(0.01, 2), w_len=0.5, w_comp=0.5
            )
            ctx = np.array([rng.uniform(-1, 1) for _ in range(dim)])
            ranked = [c.scale_id for c in score_candidates(ctx, catalog, weights, state)]
            assert ranked == oracle_ranking(ctx, catalog, weights, frozenset())

            nonzero = ctx if np.linalg.norm(ctx) > 0 else np.ones(dim)
            self_profile = ScaleProfile(
                scale_id="self",
                characteristic_vector=tuple(float(x) for x in nonzero),
                item_count=1,
                covered_dimensions=frozenset(),
            )
            assert adaptability_score(nonzero, self_profile) == pytest.approx(1.0, abs=1e-9)

            adapt_only = ScoringWeights(w_adapt=1.0, w_priority=0.0, w_len=0.5, w_comp=0.5)
            base_rank = [c.scale_id for c in score_candidates(nonzero, catalog, adapt_only, state)]
            for scale in (0.013, 7.3, 900.0):
                scaled_rank = [c.scale_id for c in score_candidates(nonzero * scale, catalog, adapt_only, state)]
                assert scaled_rank == base_rank


SCRIPT = fixtures.load_script("gradual_disclosure")


def test_override_dominance_end_to_end():
    with criterion("override-dominance-end-to-end", budget_s=10.0):
        base_turns = [t["text"] for t in SCRIPT["turns"]]
        for inject_at in range(1, 7):
            engine = fresh_engine()
            sid = engine.create_session(f"override-{inject_at}", now=EPOCH)
            for turn_index, text in enumerate(base_turns, start=1):
                if turn_index == inject_at:
                    text = f"{text} {RISK_TEXT}"
                response = engine.handle_turn(sid, text, latency_ms=1500, now=EPOCH + turn_index * 30_000)
                if turn_index == inject_at:
                    assert response.phase is SessionPhase.INTERVENTION, f"turn {turn_index}"
                    assert response.risk_level is RiskLevel.OVERRIDE
                    assert response.recommendation is None
                    assert response.scale_item is None
            events = engine.audit_events(sid)
            override_turns = {e.turn for e in events if e.kind == "override"}
            assert inject_at in override_turns
            for event in events:
                if event.turn >= inject_at and event.kind in ("recommendation", "scores", "scale_started"):
                    raise AssertionError(f"{event.kind} audited at turn {event.turn} >= override turn {inject_at}")

        # Assessment in progress is suspended by an override.
        engine = fresh_engine()
        sid = engine.create_session("override-assessment", now=EPOCH)
        for turn_index, text in enumerate(base_turns[:4], start=1):
            engine.handle_turn(sid, text, latency_ms=1500, now=EPOCH + turn_index * 30_000)
        engine.accept_recommendation(sid, "mdi9", now=EPOCH + 200_000)
        engine.submit_assessment_response(sid, "m1", 1, now=EPOCH + 210_000)
        response = engine.handle_turn(sid, RISK_TEXT, now=EPOCH + 220_000)
        assert response.phase is SessionPhase.INTERVENTION
        session = engine._session(sid)
        assert session.active_assessment is None
        assert session.suspended_assessment is not None


def test_refinement_loop_end_to_end():
    with criterion("refinement-loop-end-to-end", budget_s=5.0):
        engine = fresh_engine()
        outcome = run_script(engine, SCRIPT, session_id="refinement-e2e", epoch_ms=EPOCH)
        phases = [t.phase for t in outcome.turns]

        # Ordered progression through the three dialogue phases.
        first_explore = phases.index("Exploration")
        first_refine = phases.index("Refinement")
        first_recommend = phases.index("Recommendation")
        assert first_explore < first_refine < first_recommend

        # Recommendation fires on the first turn confidence reached 0.8.
        confidences = [t.confidence for t in outcome.turns]
        first_confident = next(i for i, c in enumerate(confidences) if c is not None and c >= 0.8)
        assert first_confident == first_recommend
        assert all(c < 0.8 for c in confidences[:first_confident] if c is not None)

        # Every refinement question equals the independent oracle argmax,
        # reconstructed from audited belief and extraction history alone.
        events = engine.audit_events(outcome.session_id)
        kb = engine.kb
        observed: set[str] = set()
        belief_by_turn: dict[int, BeliefState] = {}
        asked_by_turn: dict[int, str] = {}
        observed_before_selection: dict[int, set[str]] = {}
        for event in events:
            if event.kind == "extraction":
                observed.update(event.payload["attribute_observations"])
            elif event.kind == "confidence":
                belief_by_turn[event.turn] = BeliefState(dict(event.payload["belief"]))
                observed_before_selection[event.turn] = set(observed)
            elif event.kind == "refinement_selected":
                asked_by_turn[event.turn] = event.payload["attribute"]
        assert asked_by_turn, "script must exercise the refinement loop"
        for turn, asked in asked_by_turn.items():
            expected = oracle_select(belief_by_turn[turn], observed_before_selection[turn], kb)
            assert asked == expected, f"turn {turn}: asked {asked}, oracle {expected}"


def test_scale_scoring_fidelity():
    with criterion("scale-scoring-fidelity", budget_s=5.0):
        catalog = fixtures.default_catalog()
        nine_item = catalog["mdi9"]
        assert len(nine_item.items) == 9

        floor = score_scale(nine_item, {i.item_id: 0 for i in nine_item.items})
        assert floor.total_score == 0
        assert floor.band_label == "minimal"

        ceiling = score_scale(nine_item, {i.item_id: 3 for i in nine_item.items})
        assert ceiling.total_score == 27
        assert ceiling.band_label == "severe"

        rng = random.Random(5081)
        definitions = [catalog[k] for k in sorted(catalog)]
        for _ in range(50):
            definition = rng.choice(definitions)
            responses = {
                item.item_id: rng.choice([o.value for o in item.options]) for item in definition.items
            }
            result = score_scale(definition, responses)
            assert result.total_score == oracle_total(definition, responses)
            assert result.band_label == oracle_band(definition, result.total_score)


def test_audit_replay_determinism(tmp_path):
    with criterion("audit-replay-determinism", budget_s=10.0):
        audit_dir = str(tmp_path / "logs")
        recorded = {}
        for script_name in ("gradual_disclosure", "full_session"):
            engine = fresh_engine(audit_dir=audit_dir)
            outcome = run_script(
                engine, fixtures.load_script(script_name), session_id=f"acc-{script_name}", epoch_ms=EPOCH
            )
            path = log_path(audit_dir, outcome.session_id)
            assert verify_file(path) is None
            events = read_log(path)
            report = replay_session(
                events,
                fixtures.default_kb(),
                fixtures.default_lexicon(),
                fixtures.default_catalog(),
                engine.config,
            )
            assert report.ok, (script_name, report.divergent_seq, report.detail)
            recorded[script_name] = path

        # Tamper evidence: flip single payload bytes in the recorded file.
        path = recorded["gradual_disclosure"]
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()

        def detected(mutated_lines) -> bool:
            mutated_path = str(tmp_path / "tampered.jsonl")
            with open(mutated_path, "w", encoding="utf-8") as fh:
                fh.write("\n".join(mutated_lines) + "\n")
            try:
                return verify_file(mutated_path) is not None
            except (json.JSONDecodeError, UnicodeDecodeError, KeyError, ValueError):
                return True  # unparseable is detected too

        # Every payload byte of one mid-log event...
        probe_line = len(lines) // 2
        payload_start = lines[probe_line].index('"payload":') + len('"payload":')
        payload_end = lines[probe_line].index(',"prev_hash"')
        for position in range(payload_start, payload_end):
            mutated = list(lines)
            flipped = chr(ord(mutated[probe_line][position]) ^ 0x01)
            mutated[probe_line] = (
                mutated[probe_line][:position] + flipped + mutated[probe_line][position + 1 :]
            )
            assert detected(mutated), f"flip at line {probe_line} byte {position} undetected"
        # ...and first/middle/last payload bytes of every event.
        for line_index, line in enumerate(lines):
            start = line.index('"payload":') + len('"payload":')
            end = line.index(',"prev_hash"')
            for position in (start, (start + end) // 2, end - 1):
                mutated = list(lines)
                flipped = chr(ord(line[position]) ^ 0x01)
                mutated[line_index] = line[:position] + flipped + line[position + 1 :]
                assert detected(mutated), f"flip at line {line_index} byte {position} undetected"


def test_suite_runs_offline_without_ui():
    with criterion("offline-no-ui", budget_s=5.0):
        # No engine module references the browser companion; the package
        # imports and serves with endpoints unconfigured (offline defaults).
        import scaleflow

        engine = fresh_engine()
        assert engine.config.endpoints.extractor_url is None
        assert engine.config.endpoints.reranker_url is None
        assert engine.config.endpoints.webhook_url is None
        sid = engine.create_session("offline", now=EPOCH)
        response = engine.handle_turn(sid, "hello", now=EPOCH + 1_000)
        assert response.context_version == 1
        assert not any("frontend" in name for name in dir(scaleflow))
