"""Command-line surface: serve, simulate, replay, verify, validate-catalog."""

from __future__ import annotations

import json
import os
import sys

import click

from . import fixtures
from .audit import read_log, verify_file
from .belief import load_knowledge_base, validate_knowledge_base
from .config import ENV_HOST, ENV_PORT, load_config
from .engine import Engine
from .errors import ReplayRejected
from .extraction import load_lexicon, validate_lexicon
from .replay import replay_session
from .report import write_report
from .scales import load_catalog, validate_catalog
from .simulate import run_script


def _build_engine(config_path, kb_path, lexicon_path, catalog_path, audit_dir):
    config = load_config(config_path)
    kb = load_knowledge_base(kb_path or fixtures.kb_path())
    lexicon = load_lexicon(lexicon_path or fixtures.lexicon_path())
    catalog = load_catalog(catalog_path or fixtures.catalog_dir())
    return Engine(kb=kb, lexicon=lexicon, catalog=catalog, config=config, audit_dir=audit_dir)


asset_options = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="Engine config JSON."),
    click.option("--kb", "kb_path", type=click.Path(exists=True), default=None, help="Knowledge base JSON."),
    click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None, help="Lexicon JSON."),
    click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None, help="Scale catalog directory."),
]


def with_asset_options(command):
    for option in reversed(asset_options):
        command = option(command)
    return command


@click.group()
def main():
    """Adaptive psychometric intake engine."""


@main.command()
@with_asset_options
@click.option("--audit-dir", default="logs", show_default=True, help="Directory for session audit logs.")
@click.option("--host", default=None, help="Bind host (or SCALEFLOW_HOST).")
@click.option("--port", default=None, type=int, help="Bind port (or SCALEFLOW_PORT).")
def serve(config_path, kb_path, lexicon_path, catalog_path, audit_dir, host, port):
    """Run the HTTP + event-stream API."""
    import uvicorn

    from .risk import RiskMonitorLoop
    from .server import create_app

    engine = _build_engine(config_path, kb_path, lexicon_path, catalog_path, audit_dir)
    app = create_app(engine)
    monitor = RiskMonitorLoop(
        engine.risk_snapshots, engine.lexicon, engine.config.risk, engine.publish_risk
    )
    monitor.start()
    host = host or os.environ.get(ENV_HOST, "127.0.0.1")
    port = port or int(os.environ.get(ENV_PORT, "8787"))
    try:
        uvicorn.run(app, host=host, port=port)
    finally:
        monitor.stop()


@main.command()
@with_asset_options
@click.option("--script", "script_ref", required=True, help="Script JSON path or bundled script name.")
@click.option("--audit-dir", default=None, help="Directory for the session audit log.")
@click.option("--report-dir", default=None, help="Write trace.csv and figures here.")
@click.option("--session-id", default=None, help="Session id override (defaults to sim-<script name>).")
@click.option("--epoch-ms", default=None, type=int, help="Fixed start timestamp for reproducible runs.")
def simulate(config_path, kb_path, lexicon_path, catalog_path, script_ref, audit_dir, report_dir, session_id, epoch_ms):
    """Run a scripted persona session and print the turn-by-turn trace."""
    engine = _build_engine(config_path, kb_path, lexicon_path, catalog_path, audit_dir)
    script = fixtures.load_script(script_ref)
    outcome = run_script(engine, script, session_id=session_id, epoch_ms=epoch_ms)

    for trace in outcome.turns:
        conf = "-" if trace.confidence is None else f"{trace.confidence:.2f}"
        asked = trace.asked_attribute or "-"
        click.echo(
            f"turn {trace.turn:>2} [{trace.phase:<14}] conf={conf:<4} "
            f"r={trace.risk_index:.3f} {trace.risk_level:<8} asked={asked:<24} | {trace.reply[:72]}"
        )
    click.echo(f"final phase: {outcome.final_phase}")
    if outcome.recommendation:
        ids = ", ".join(s["scale_id"] for s in outcome.recommendation["scales"])
        click.echo(f"recommendation ({outcome.recommendation['mode']}): {ids}")
    if outcome.accepted_scale:
        click.echo(f"accepted: {outcome.accepted_scale}")
    if outcome.result:
        click.echo(
            f"result: {outcome.result['scale_id']} total={outcome.result['total_score']} "
            f"band={outcome.result['band_label']} severity={outcome.result['normalized_severity']}"
        )
    click.echo(f"audit: {outcome.audit_event_count} events, verify={'ok' if outcome.verify_ok else 'BROKEN'}")

    if report_dir:
        created = write_report(outcome, report_dir, engine.config)
        for path in created:
            click.echo(f"wrote {path}")
    if not outcome.verify_ok:
        sys.exit(1)


@main.command()
@with_asset_options
@click.option("--log", "log_file", required=True, type=click.Path(exists=True), help="Session audit log (JSONL).")
def replay(config_path, kb_path, lexicon_path, catalog_path, log_file):
    """Re-execute a recorded session and compare every decision payload."""
    config = load_config(config_path)
    kb = load_knowledge_base(kb_path or fixtures.kb_path())
    lexicon = load_lexicon(lexicon_path or fixtures.lexicon_path())
    catalog = load_catalog(catalog_path or fixtures.catalog_dir())
    events = read_log(log_file)
    try:
        report = replay_session(events, kb, lexicon, catalog, config)
    except ReplayRejected as exc:
        click.echo(f"replay rejected: {exc}")
        sys.exit(2)
    for note in report.notes:
        click.echo(f"note: {note}")
    if report.ok:
        click.echo(f"replay ok: {report.recomputed_events} events reproduced bit-exactly")
    else:
        click.echo(f"replay DIVERGED at seq {report.divergent_seq}: {report.detail}")
        sys.exit(1)


@main.command()
@click.option("--log", "log_file", required=True, type=click.Path(exists=True), help="Session audit log (JSONL).")
def verify(log_file):
    """Check the hash chain of a session log."""
    broken = verify_file(log_file)
    if broken is None:
        click.echo("verify ok")
    else:
        click.echo(f"chain broken at seq {broken}")
        sys.exit(1)


@main.command("validate-catalog")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--kb", "kb_path", type=click.Path(exists=True), default=None, help="Knowledge base for dimension checks.")
def validate_catalog_cmd(directory, kb_path):
    """Validate every scale file in DIRECTORY; one finding per line."""
    kb = load_knowledge_base(kb_path or fixtures.kb_path())
    findings = validate_catalog(directory, expected_dimension=kb.dimension)
    for finding in findings:
        click.echo(finding)
    if findings:
        sys.exit(1)
    click.echo("catalog ok")


@main.command("validate-assets")
@click.option("--kb", "kb_path", type=click.Path(exists=True), default=None)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
def validate_assets(kb_path, lexicon_path):
    """Validate the knowledge base and lexicon documents."""
    with open(kb_path or fixtures.kb_path(), encoding="utf-8") as fh:
        kb_findings = validate_knowledge_base(json.load(fh))
    with open(lexicon_path or fixtures.lexicon_path(), encoding="utf-8") as fh:
        lexicon_findings = validate_lexicon(json.load(fh))
    for finding in kb_findings:
        click.echo(f"kb: {finding}")
    for finding in lexicon_findings:
        click.echo(f"lexicon: {finding}")
    if kb_findings or lexicon_findings:
        sys.exit(1)
    click.echo("assets ok")


if __name__ == "__main__":
    main()
