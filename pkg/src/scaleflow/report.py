"""Simulation report: delimited per-turn trace plus trajectory figures."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .config import EngineConfig
from .simulate import SimulationOutcome

TRACE_COLUMNS = [
    "turn",
    "phase",
    "confidence",
    "suspected",
    "belief_entropy",
    "risk_index",
    "risk_level",
    "asked_attribute",
    "context_version",
]


def write_report(outcome: SimulationOutcome, out_dir: str, config: EngineConfig) -> list[str]:
    """Write trace.csv and trajectory PNGs; returns the created paths."""
    os.makedirs(out_dir, exist_ok=True)
    created: list[str] = []

    trace_path = os.path.join(out_dir, "trace.csv")
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        writer.writeheader()
        for trace in outcome.turns:
            writer.writerow(
                {
                    "turn": trace.turn,
                    "phase": trace.phase,
                    "confidence": "" if trace.confidence is None else f"{trace.confidence:.6f}",
                    "suspected": trace.suspected or "",
                    "belief_entropy": "" if trace.belief_entropy is None else f"{trace.belief_entropy:.6f}",
                    "risk_index": f"{trace.risk_index:.6f}",
                    "risk_level": trace.risk_level,
                    "asked_attribute": trace.asked_attribute or "",
                    "context_version": trace.context_version,
                }
            )
    created.append(trace_path)

    turns = [t.turn for t in outcome.turns]
    if not turns:
        return created

    conf_points = [(t.turn, t.confidence) for t in outcome.turns if t.confidence is not None]
    fig, ax = plt.subplots(figsize=(7, 4))
    if conf_points:
        ax.plot([p[0] for p in conf_points], [p[1] for p in conf_points], marker="o", label="confidence")
    ax.axhline(config.thresholds.tau_min, color="grey", linestyle="--", label="tau_min")
    ax.axhline(config.thresholds.tau_max, color="black", linestyle="--", label="tau_max")
    ax.set_xlabel("turn")
    ax.set_ylabel("confidence")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(f"Confidence trajectory ({outcome.session_id})")
    ax.legend(loc="best")
    confidence_path = os.path.join(out_dir, "confidence.png")
    fig.savefig(confidence_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    created.append(confidence_path)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(turns, [t.risk_index for t in outcome.turns], marker="o", color="firebrick", label="risk index")
    ax.axhline(config.risk.r_high, color="black", linestyle="--", label="r_high")
    ax.set_xlabel("turn")
    ax.set_ylabel("risk index")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(f"Risk trajectory ({outcome.session_id})")
    ax.legend(loc="best")
    risk_path = os.path.join(out_dir, "risk.png")
    fig.savefig(risk_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    created.append(risk_path)

    entropy_points = [(t.turn, t.belief_entropy) for t in outcome.turns if t.belief_entropy is not None]
    if entropy_points:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(
            [p[0] for p in entropy_points],
            [p[1] for p in entropy_points],
            marker="o",
            color="seagreen",
            label="belief entropy (bits)",
        )
        ax.set_xlabel("turn")
        ax.set_ylabel("entropy (bits)")
        ax.set_title(f"Belief entropy ({outcome.session_id})")
        ax.legend(loc="best")
        entropy_path = os.path.join(out_dir, "entropy.png")
        fig.savefig(entropy_path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        created.append(entropy_path)

    return created
