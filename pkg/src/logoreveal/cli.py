"""The `lm` command line: ingest, animate, verify, repair, render, eval, serve."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click

from .config import RunConfig, load_config
from .document import ingest_directory, load_project
from .evalrun import CorpusSpec, run_corpus
from .fixtures import load_desk_corpus
from .interp import selector_env
from .render import RenderOptions, render_sequence, write_sequence
from .repair import RepairSettings, repair as run_repair
from .timeline_lang import parse as parse_timeline, serialize
from .verify import attach_crops, verify as run_verify, write_bugs
from .workspace import Workspace


def _config(config_path: Optional[str]) -> RunConfig:
    return load_config(Path(config_path) if config_path else None)


def _variant_context(variant_dir: Path):
    """(doc, program, env) for an out/<variant>/ directory written by animate."""
    program = parse_timeline((variant_dir / "program.src").read_text(encoding="utf-8"), strict=True)
    meta = json.loads((variant_dir / "variant.json").read_text(encoding="utf-8"))
    project_dir = variant_dir.parent.parent
    doc = load_project(project_dir / "project.json")
    roles = json.loads((variant_dir / "roles.json").read_text(encoding="utf-8"))
    groups = json.loads((variant_dir / "groups.json").read_text(encoding="utf-8"))
    env = selector_env(doc, roles=roles, groups=groups)
    return doc, program, env, meta


@click.group()
def main():
    """Content-aware animated logo synthesis, verification, and repair."""


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("-o", "--output", type=click.Path(path_type=Path), default=Path("project.json"))
def ingest(directory: Path, output: Path):
    """Build a project manifest from a directory of layer PNGs."""
    manifest = ingest_directory(directory)
    output.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"wrote {output} with {len(manifest['layers'])} layers")


@main.command()
@click.argument("project", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--variants", default=None, type=int, help="number of variants (default from config)")
@click.option("--provider", type=click.Choice(["live", "stub"]), default=None)
@click.option("--scenario", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--seed", default=None, type=int)
@click.option("-o", "--out", "out_dir", type=click.Path(path_type=Path), default=Path("out"))
@click.option("--config", "config_path", type=click.Path(), default=None)
def animate(project: Path, variants, provider, scenario, seed, out_dir: Path, config_path):
    """Run the full pipeline on a project and write out/<variant>/ artifacts."""
    config = _config(config_path)
    if provider:
        config = replace(config, provider=provider)
    if scenario:
        config = replace(config, scenario_path=scenario)
    if seed is not None:
        config = replace(config, seed=seed)
    n = variants if variants is not None else config.variants

    # the workspace stores variants next to the project manifest; mirror the
    # project into out_dir so `lm animate` leaves sources untouched
    out_dir.mkdir(parents=True, exist_ok=True)
    project_id = project.parent.name or "project"
    staged = out_dir / project_id
    staged.mkdir(parents=True, exist_ok=True)
    manifest = json.loads(project.read_text(encoding="utf-8"))
    (staged / "project.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    for layer in manifest.get("layers", []):
        src = project.parent / layer["image"]
        dst = staged / layer["image"]
        dst.parent.mkdir(parents=True, exist_ok=True)
        dst.write_bytes(src.read_bytes())
    template_scenario = project.parent / "scenario.json"
    if config.provider == "stub" and config.scenario_path is None and template_scenario.exists():
        (staged / "scenario.json").write_text(template_scenario.read_text(encoding="utf-8"), encoding="utf-8")

    workspace = Workspace(out_dir, config)
    created, errors = workspace.generate(project_id, n)
    for variant in created:
        click.echo(f"variant {variant.id}: solved={variant.run_solved} open_bugs={variant.open_bugs}")
    for error in errors:
        click.echo(f"variant error: {error['error']}", err=True)
    if not created and errors:
        sys.exit(1)


@main.command()
@click.argument("variant_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--config", "config_path", type=click.Path(), default=None)
def verify(variant_dir: Path, config_path):
    """Re-verify a variant's program and write bugs.json."""
    config = _config(config_path)
    doc, program, env, _ = _variant_context(variant_dir)
    bugs = run_verify(program, doc, config.tolerances, env)
    bugs = attach_crops(bugs, doc, program, env)
    write_bugs(bugs, variant_dir)
    click.echo(f"{len(bugs)} bug(s); wrote {variant_dir / 'bugs.json'}")
    sys.exit(0 if not bugs else 2)


@main.command(name="repair")
@click.argument("variant_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--k", default=4, type=int)
@click.option("--images/--no-images", "with_images", default=True)
@click.option("--merge", "merge_mode", type=click.Choice(["ast", "llm"]), default="ast")
@click.option("--scenario", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
def repair_cmd(variant_dir: Path, k, with_images, merge_mode, scenario, config_path):
    """Run the layer-wise repair loop on a variant; rewrites program and page."""
    config = _config(config_path)
    if scenario:
        config = replace(config, scenario_path=scenario, provider="stub")
    doc, program, env, meta = _variant_context(variant_dir)
    workspace = Workspace(variant_dir.parent.parent.parent, config)
    gateway = workspace._gateway_for_project(meta["project_id"], variant_dir / "transcript.jsonl")
    settings = RepairSettings(k=k, with_images=with_images, merge_mode=merge_mode, tolerances=config.tolerances)
    outcome = run_repair(program, doc, settings, gateway, env, config.stage_config())
    (variant_dir / "repair.json").write_text(
        json.dumps(outcome.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    final = outcome.final_program or program
    (variant_dir / "program.src").write_text(serialize(final), encoding="utf-8")
    from .canvas_html import emit_animation_page, parse_html
    from .pipeline import program_to_json
    from .stages import apply_captions

    captions = json.loads((variant_dir / "captions.json").read_text(encoding="utf-8"))
    canvas = parse_html((variant_dir / "canvas.html").read_text(encoding="utf-8"))
    (variant_dir / "program.json").write_text(
        json.dumps(program_to_json(final), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (variant_dir / "page.html").write_text(
        emit_animation_page(canvas, final, apply_captions(doc, captions)), encoding="utf-8"
    )
    click.echo(
        f"run_solved={outcome.run_solved} elements={len(outcome.elements)} "
        f"remaining_bugs={len(outcome.final_bugs)}"
    )


@main.command()
@click.argument("variant_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--fps", default=30, type=int)
def render(variant_dir: Path, fps):
    """Render the variant's animation to frames/NNNN.png."""
    doc, program, env, _ = _variant_context(variant_dir)
    frames = render_sequence(doc, program, fps, RenderOptions(), env)
    paths = write_sequence(frames, variant_dir / "frames")
    click.echo(f"wrote {len(paths)} frames to {variant_dir / 'frames'}")


@main.command(name="eval")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--variants", default=4, type=int)
@click.option("--k", default=4, type=int)
@click.option("--arm", type=click.Choice(["imgs", "noimgs", "both"]), default="both")
@click.option("--seed", default=0, type=int)
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None)
@click.option("-o", "--out", "out_dir", type=click.Path(path_type=Path), default=Path("eval_out"))
def eval_cmd(corpus_dir: Path, variants, k, arm, seed, report_path, out_dir: Path):
    """Batch-run the corpus and emit report.md + rows.csv (+ timings.csv sidecar)."""
    templates = tuple(load_desk_corpus(corpus_dir))
    arms = []
    if arm in ("imgs", "both"):
        arms.append(RepairSettings(k=k, with_images=True))
    if arm in ("noimgs", "both"):
        arms.append(RepairSettings(k=k, with_images=False))
    spec = CorpusSpec(templates=templates, variants_per_template=variants, arms=tuple(arms), seed=seed)
    report = run_corpus(spec, out_dir)
    if report_path:
        report_path.write_text(report.to_markdown(), encoding="utf-8")
    click.echo(report.to_markdown())


@main.command()
@click.option("--port", default=8787, type=int)
@click.option("--root", "root_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--frontend", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
def serve(port, root_dir: Path, frontend, config_path):
    """Serve the HTTP API (and the frontend build, when present)."""
    import uvicorn

    from .service import create_app

    app = create_app(root_dir, _config(config_path), frontend_dir=frontend)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
