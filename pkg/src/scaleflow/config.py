"""Engine configuration: thresholds, weights, risk tuning, endpoints.

All tunables load from a JSON document; endpoint URLs and server ports
can additionally be overridden through SCALEFLOW_* environment
variables.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

from . import canonical
from .belief import PhaseThresholds
from .recommender import DEFAULT_MAX_JOINT, ScoringWeights
from .risk import RiskConfig

DEFAULT_EWMA_LAMBDA = 0.6
DEFAULT_VALENCE_WINDOW = 5
DEFAULT_WORDS_REF = 20

ENV_EXTRACTOR_URL = "SCALEFLOW_EXTRACTOR_URL"
ENV_RERANKER_URL = "SCALEFLOW_RERANKER_URL"
ENV_WEBHOOK_URL = "SCALEFLOW_WEBHOOK_URL"
ENV_HOST = "SCALEFLOW_HOST"
ENV_PORT = "SCALEFLOW_PORT"


@dataclass(frozen=True)
class Timeouts:
    extractor_ms: int = 2000
    reranker_ms: int = 2000
    webhook_ms: int = 2000


@dataclass(frozen=True)
class Endpoints:
    extractor_url: str | None = None
    reranker_url: str | None = None
    webhook_url: str | None = None


@dataclass(frozen=True)
class EngineConfig:
    thresholds: PhaseThresholds = field(default_factory=PhaseThresholds)
    weights: ScoringWeights = field(default_factory=ScoringWeights)
    risk: RiskConfig = field(default_factory=RiskConfig)
    ewma_lambda: float = DEFAULT_EWMA_LAMBDA
    valence_window: int = DEFAULT_VALENCE_WINDOW
    words_ref: int = DEFAULT_WORDS_REF
    max_joint: int = DEFAULT_MAX_JOINT
    recommendation_mode: str = "single"
    timeouts: Timeouts = field(default_factory=Timeouts)
    endpoints: Endpoints = field(default_factory=Endpoints)

    def __post_init__(self) -> None:
        if not (0.0 < self.ewma_lambda <= 1.0):
            raise ValueError(f"ewma_lambda must be in (0,1], got {self.ewma_lambda}")
        if self.valence_window < 1:
            raise ValueError("valence_window must be >= 1")
        if self.recommendation_mode not in ("single", "joint-multi"):
            raise ValueError("recommendation_mode must be single or joint-multi")
        if self.max_joint < 1:
            raise ValueError("max_joint must be >= 1")

    def to_dict(self) -> dict:
        return {
            "thresholds": {"tau_min": self.thresholds.tau_min, "tau_max": self.thresholds.tau_max},
            "weights": {
                "w_adapt": self.weights.w_adapt,
                "w_priority": self.weights.w_priority,
                "w_len": self.weights.w_len,
                "w_comp": self.weights.w_comp,
            },
            "risk": {
                "alpha": self.risk.alpha,
                "beta": self.risk.beta,
                "gamma": self.risk.gamma,
                "delta": self.risk.delta,
                "r_high": self.risk.r_high,
                "window": self.risk.window,
                "hysteresis_turns": self.risk.hysteresis_turns,
            },
            "ewma_lambda": self.ewma_lambda,
            "valence_window": self.valence_window,
            "words_ref": self.words_ref,
            "max_joint": self.max_joint,
            "recommendation_mode": self.recommendation_mode,
            "timeouts": {
                "extractor_ms": self.timeouts.extractor_ms,
                "reranker_ms": self.timeouts.reranker_ms,
                "webhook_ms": self.timeouts.webhook_ms,
            },
            "endpoints": {
                "extractor_url": self.endpoints.extractor_url,
                "reranker_url": self.endpoints.reranker_url,
                "webhook_url": self.endpoints.webhook_url,
            },
        }

    def fingerprint(self) -> str:
        return canonical.digest(self.to_dict())

    @classmethod
    def from_dict(cls, document: dict) -> "EngineConfig":
        thresholds = document.get("thresholds", {})
        weights = document.get("weights", {})
        risk = document.get("risk", {})
        timeouts = document.get("timeouts", {})
        endpoints = document.get("endpoints", {})
        return cls(
            thresholds=PhaseThresholds(
                tau_min=thresholds.get("tau_min", PhaseThresholds.tau_min),
                tau_max=thresholds.get("tau_max", PhaseThresholds.tau_max),
            ),
            weights=ScoringWeights(
                w_adapt=weights.get("w_adapt", ScoringWeights.w_adapt),
                w_priority=weights.get("w_priority", ScoringWeights.w_priority),
                w_len=weights.get("w_len", ScoringWeights.w_len),
                w_comp=weights.get("w_comp", ScoringWeights.w_comp),
            ),
            risk=RiskConfig(
                alpha=risk.get("alpha", RiskConfig.alpha),
                beta=risk.get("beta", RiskConfig.beta),
                gamma=risk.get("gamma", RiskConfig.gamma),
                delta=risk.get("delta", RiskConfig.delta),
                r_high=risk.get("r_high", RiskConfig.r_high),
                window=risk.get("window", RiskConfig.window),
                hysteresis_turns=risk.get("hysteresis_turns", RiskConfig.hysteresis_turns),
            ),
            ewma_lambda=document.get("ewma_lambda", DEFAULT_EWMA_LAMBDA),
            valence_window=document.get("valence_window", DEFAULT_VALENCE_WINDOW),
            words_ref=document.get("words_ref", DEFAULT_WORDS_REF),
            max_joint=document.get("max_joint", DEFAULT_MAX_JOINT),
            recommendation_mode=document.get("recommendation_mode", "single"),
            timeouts=Timeouts(
                extractor_ms=timeouts.get("extractor_ms", Timeouts.extractor_ms),
                reranker_ms=timeouts.get("reranker_ms", Timeouts.reranker_ms),
                webhook_ms=timeouts.get("webhook_ms", Timeouts.webhook_ms),
            ),
            endpoints=Endpoints(
                extractor_url=endpoints.get("extractor_url"),
                reranker_url=endpoints.get("reranker_url"),
                webhook_url=endpoints.get("webhook_url"),
            ),
        )


def apply_env_overrides(config: EngineConfig, env: dict[str, str] | None = None) -> EngineConfig:
    """Endpoint URLs may be overridden from the environment."""
    env = env if env is not None else dict(os.environ)
    endpoints = Endpoints(
        extractor_url=env.get(ENV_EXTRACTOR_URL, config.endpoints.extractor_url) or None,
        reranker_url=env.get(ENV_RERANKER_URL, config.endpoints.reranker_url) or None,
        webhook_url=env.get(ENV_WEBHOOK_URL, config.endpoints.webhook_url) or None,
    )
    return replace(config, endpoints=endpoints)


def load_config(path: str | None) -> EngineConfig:
    if path is None:
        return apply_env_overrides(EngineConfig())
    with open(path, encoding="utf-8") as fh:
        return apply_env_overrides(EngineConfig.from_dict(json.load(fh)))
