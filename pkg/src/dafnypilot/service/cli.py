"""Command-line front door mirroring the HTTP API.

    dafnypilot serve  --config cfg.yaml --llm-mode replay --cassette demo.jsonl
    dafnypilot chat   --llm-mode replay --cassette demo.jsonl
    dafnypilot run    --prompt-file task.txt --auto-accept --out solution/
    dafnypilot bench run --tasks suite.jsonl --llm-mode replay \
        --cassette-dir cassettes/ --native-rate 0.86 --out results/
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .. import bench as bench_mod
from ..engine import Engine, build_engine
from .config import AppConfig, load_config
from .sessions import EventStore, SessionManager, SessionState


def _config_from(ctx_params: dict) -> AppConfig:
    return load_config(
        path=ctx_params.get("config"),
        llm_mode=ctx_params.get("llm_mode"),
        cassette=ctx_params.get("cassette"),
        dafny_bin=ctx_params.get("dafny_bin"),
        keep_artifacts=ctx_params.get("keep_artifacts") or None,
        data_dir=ctx_params.get("data_dir"),
    )


def _engine(cfg: AppConfig, cassette: str | None = None) -> Engine:
    return build_engine(
        llm_mode=cfg.llm_mode,
        cassette_path=cassette or cfg.cassette,
        toolchain=cfg.toolchain(),
        assets_path=cfg.assets_path,
        spec_budget=cfg.spec_budget,
        synth_budget=cfg.synth_budget(),
        postprocess=cfg.postprocess,
        attach_shim=cfg.attach_shim,
    )


def _common_options(fn):
    fn = click.option("--config", type=click.Path(exists=True), default=None, help="YAML config file")(fn)
    fn = click.option("--llm-mode", type=click.Choice(["live", "replay", "record"]), default=None)(fn)
    fn = click.option("--cassette", type=click.Path(), default=None, help="cassette file for replay/record")(fn)
    fn = click.option("--dafny-bin", type=click.Path(), default=None, help="toolchain executable")(fn)
    fn = click.option("--keep-artifacts", is_flag=True, default=False)(fn)
    fn = click.option("--data-dir", type=click.Path(), default=None)(fn)
    return fn


@click.group()
def main() -> None:
    """Natural-language tasks to checked target-language code."""


@main.command()
@_common_options
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8008, type=int)
def serve(host: str, port: int, **params) -> None:
    """Run the HTTP session service."""
    import uvicorn

    from .api import create_app

    cfg = _config_from(params)
    manager = SessionManager(_engine(cfg), EventStore(cfg.data_dir), inline_jobs=cfg.inline_jobs)
    ui_dir = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    app = create_app(manager, ui_dir=ui_dir if ui_dir.is_dir() else None)
    uvicorn.run(app, host=host, port=port)


@main.command()
@_common_options
def chat(**params) -> None:
    """Interactive REPL session; /accept agrees, /quit exits."""
    cfg = _config_from(params)
    manager = SessionManager(_engine(cfg), EventStore(cfg.data_dir), inline_jobs=True)
    session = manager.create_session()
    click.echo(f"session {session.id} — describe the function you need (or /quit)")
    shown = 0
    while True:
        try:
            line = click.prompt("you", prompt_suffix="> ")
        except (EOFError, click.Abort):
            break
        if line.strip() == "/quit":
            break
        if line.strip() == "/accept":
            manager.accept_spec(session.id)
        elif line.strip():
            manager.post_message(session.id, line)
        view = manager.view(session.id)
        for turn in view["turns"][shown:]:
            if turn["role"] == "assistant":
                click.echo(f"assistant> {turn['content']}")
        shown = len(view["turns"])
        if view["state"] == SessionState.DELIVERED.value:
            target = Path(cfg.data_dir) / "deliverables" / session.id
            click.echo(f"delivered: {target}")
            break
        if view["state"] == SessionState.FAILED.value:
            break


@main.command()
@_common_options
@click.option("--prompt-file", type=click.Path(exists=True), required=True)
@click.option("--auto-accept", is_flag=True, default=False)
@click.option("--out", type=click.Path(), required=True)
@click.option("--postprocess", is_flag=True, default=False)
def run(prompt_file: str, auto_accept: bool, out: str, postprocess: bool, **params) -> None:
    """One-shot pipeline run from a prompt file to a deliverable directory."""
    cfg = _config_from(params)
    engine = _engine(cfg)
    task = Path(prompt_file).read_text(encoding="utf-8")
    draft = engine.draft(task)
    click.echo(draft.nl_summary)
    if draft.differences_note:
        click.echo(draft.differences_note)
    if not auto_accept:
        click.confirm("Accept this specification?", abort=True)
    prog = engine.synthesize(draft)
    deliverable = engine.deliver(prog, postprocess=postprocess)
    target = deliverable.write_to(out)
    click.echo(f"wrote {len(deliverable.files)} files to {target}")


@main.group()
def bench() -> None:
    """Benchmark harness commands."""


@bench.command(name="run")
@_common_options
@click.option("--tasks", "tasks_path", type=click.Path(exists=True), required=True)
@click.option("--cassette-dir", type=click.Path(), default=None)
@click.option("--native-rate", type=float, default=0.86, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--workers", type=int, default=bench_mod.DEFAULT_WORKERS, show_default=True)
@click.option("--time-cap", type=float, default=bench_mod.DEFAULT_TASK_TIME_CAP, show_default=True)
def bench_run(
    tasks_path: str,
    cassette_dir: str | None,
    native_rate: float,
    out_dir: str,
    workers: int,
    time_cap: float,
    **params,
) -> None:
    """Run a task suite and write results.jsonl + report.json."""
    cfg = _config_from(params)
    tasks = bench_mod.load_tasks(tasks_path)

    def engine_factory(task: bench_mod.BenchTask) -> Engine:
        cassette = None
        if cassette_dir is not None:
            cassette = str(Path(cassette_dir) / f"{task.task_id.replace('/', '_')}.jsonl")
        return _engine(cfg, cassette=cassette)

    results = bench_mod.run_benchmark(
        tasks, engine_factory, out_dir=out_dir, workers=workers, time_cap=time_cap
    )
    snapshot = {
        "llm_mode": cfg.llm_mode,
        "spec_budget": cfg.spec_budget,
        "synth_max_attempts": cfg.synth_max_attempts,
        "synth_restart_after": cfg.synth_restart_after,
        "dafny_version": cfg.toolchain().dafny_version,
        "coverage_mode": cfg.toolchain().coverage_mode.value,
        "length_limit": cfg.toolchain().length_limit,
        "native_rate": native_rate,
        "workers": workers,
    }
    report = bench_mod.score(results, native_rate, config_snapshot=snapshot)
    bench_mod.write_report(report, out_dir)
    for result in results:
        status = "pass" if result.passed else (result.failure_class.value if result.failure_class else "fail")
        click.echo(f"{result.task_id}: {status}")
    click.echo(json.dumps(report.to_dict(), indent=2))


if __name__ == "__main__":
    sys.exit(main())
