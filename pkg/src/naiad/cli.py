"""Command-line interface: query, serve, ingest, tools, eval, preview."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import EngineConfig
from .engine import Engine, data_path
from .errors import NaiadError
from .evaluation import load_gold, run_suite
from .knowledge import Document


def _engine(config_path: str | None, provider: str) -> Engine:
    config = EngineConfig.load(config_path)
    return Engine.from_config(config, provider=provider)


def _emit(data: dict, output: str, text_renderer=None) -> None:
    if output == "json":
        click.echo(json.dumps(data, indent=2, sort_keys=True, default=str))
    else:
        click.echo(text_renderer(data) if text_renderer else json.dumps(data, default=str))


@click.group()
def main() -> None:
    """Inland-water quality monitoring workflows from natural-language queries."""


def _common(f):
    f = click.option("--config", "config_path", default=None,
                     help="Path to a JSON config file (or NAIAD_CONFIG).")(f)
    f = click.option("--provider", default="scripted",
                     type=click.Choice(["endpoint", "scripted"]),
                     help="Language-model provider backing the run.")(f)
    f = click.option("--output", default="text", type=click.Choice(["json", "text"]))(f)
    return f


@main.command()
@click.argument("prompt")
@_common
@click.option("--dry-run", is_flag=True, help="Preview the plan without executing tools.")
@click.option("--expertise", default=None,
              type=click.Choice(["novice", "practitioner", "expert"]))
def query(prompt: str, config_path, provider, output, dry_run, expertise) -> None:
    """Run (or preview) a monitoring workflow for PROMPT."""
    try:
        engine = _engine(config_path, provider)
        result = engine.run(prompt, expertise=expertise, dry_run=dry_run)
        if dry_run:
            _emit(result.preview, output,
                  lambda p: "plan preview (no tools executed)\n"
                  + "\n".join(f"  {i + 1}. {s['id']} -> {s['tool']} [{s['status']}]"
                              for i, s in enumerate(p["steps"])))
        else:
            data = {
                "run_id": result.trace.run_id,
                "status": result.trace.status,
                "report": result.report.to_dict(),
            }
            _emit(data, output, lambda d: _report_text(result))
    except NaiadError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


def _report_text(result) -> str:
    return result.report.to_text()


@main.command()
@_common
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8400, type=int)
def serve(config_path, provider, output, host, port) -> None:
    """Start the HTTP gateway."""
    from .gateway import serve as _serve

    try:
        engine = _engine(config_path, provider)
        _serve(engine, host=host, port=port)
    except NaiadError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--tank", required=True, help="Content tank receiving the documents.")
@_common
def ingest(path, tank, config_path, provider, output) -> None:
    """Ingest a JSON array of documents into a content tank."""
    try:
        engine = _engine(config_path, provider)
        docs = json.loads(Path(path).read_text(encoding="utf-8"))
        ingested = []
        for d in docs:
            doc = Document(id=d["id"], tank=tank, title=d.get("title", ""),
                           body=d.get("body", ""), origin=d.get("origin", ""),
                           date=d.get("date", ""))
            ingested.append(engine.store.ingest(doc))
        tank_path = engine.data_dir / "tanks" / f"{tank}.json"
        tank_path.parent.mkdir(parents=True, exist_ok=True)
        engine.store.save_tank(tank, tank_path)
        _emit({"tank": tank, "ingested": ingested}, output,
              lambda d: f"ingested {len(d['ingested'])} document(s) into tank '{d['tank']}'")
    except (NaiadError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


@main.command()
@_common
def tools(config_path, provider, output) -> None:
    """List the registered tool catalog."""
    try:
        engine = _engine(config_path, provider)
        if output == "json":
            click.echo(engine.registry.render_catalog())
        else:
            click.echo(engine.registry.render_catalog_prose())
    except NaiadError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


@main.command("eval")
@click.option("--gold", "gold_path", default=None,
              help="Gold task JSONL file (defaults to the packaged seed suite).")
@click.option("--out", "out_dir", default=None, help="Directory for score cards.")
@_common
def eval_cmd(gold_path, out_dir, config_path, provider, output) -> None:
    """Score the engine against a gold task suite."""
    try:
        engine = _engine(config_path, provider)
        tasks = load_gold(gold_path or data_path("gold_seed.jsonl"))
        summary = run_suite(tasks, engine, out_dir=out_dir)
        if output == "json":
            click.echo(summary.to_json())
        else:
            click.echo(summary.render_table())
    except NaiadError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.argument("prompt")
@_common
@click.option("--expertise", default=None,
              type=click.Choice(["novice", "practitioner", "expert"]))
def preview(prompt: str, config_path, provider, output, expertise) -> None:
    """Show the validated plan for PROMPT without executing anything."""
    try:
        engine = _engine(config_path, provider)
        result = engine.run(prompt, expertise=expertise, dry_run=True)
        _emit(result.preview, output,
              lambda p: f"run {p['run_id']}: " + " -> ".join(p["order"]))
    except NaiadError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
