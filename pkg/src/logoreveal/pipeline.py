"""End-to-end variant pipeline: captions -> hierarchy -> entrance -> grouping ->
augmented canvas -> design concept -> timeline synthesis -> verify -> repair ->
emitted page. Stage artifacts persist per variant so runs are auditable and
replayable."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .canvas_html import CanvasHtml, GroupingPlan, RoleAssignment, augment_html, build_html, emit_animation_page
from .document import LayeredDocument
from .gateway import Gateway
from .interp import selector_env
from .render import RenderOptions, static_composite
from .repair import RepairOutcome, RepairSettings, repair
from .stages import (
    DesignConcept,
    EntranceDescription,
    StageConfig,
    apply_captions,
    caption_layers,
    classify_hierarchy,
    derive_entrance,
    group_secondary,
    suggest_design_concept,
    synthesize_code,
)
from .timeline_lang import SelectorEnv, TimelineProgram, serialize
from .verify import LayerBug, Tolerances, attach_crops, verify, write_bugs


@dataclass
class VariantResult:
    sample_index: int
    captions: dict[str, str]
    roles: RoleAssignment
    groups: GroupingPlan
    entrance: EntranceDescription
    concept: DesignConcept
    program: TimelineProgram
    bugs_before_repair: list[LayerBug]
    repair_outcome: Optional[RepairOutcome]
    final_program: TimelineProgram
    page_html: str
    canvas: CanvasHtml
    env: SelectorEnv
    errors: list[str] = field(default_factory=list)


def run_variant(
    doc: LayeredDocument,
    gateway: Gateway,
    sample_index: int = 0,
    stage_config: StageConfig = StageConfig(),
    repair_settings: Optional[RepairSettings] = RepairSettings(),
    tolerances: Tolerances = Tolerances(),
    render_opts: RenderOptions = RenderOptions(),
) -> VariantResult:
    logo_image = static_composite(doc, render_opts)

    captions = caption_layers(doc, gateway, stage_config)
    doc = apply_captions(doc, captions)
    canvas = build_html(doc)

    roles = classify_hierarchy(canvas, logo_image, doc, gateway, stage_config)
    primary = doc.layer(roles.primary_id())
    entrance = derive_entrance(primary, gateway, stage_config)
    groups = group_secondary(canvas, roles, gateway, stage_config)
    augmented = augment_html(canvas, roles, groups)
    env = selector_env(doc, roles=roles.roles, groups=groups.as_dict())

    concept = suggest_design_concept(
        augmented,
        logo_image,
        entrance,
        primary.id,
        primary.alt_text,
        gateway,
        stage_config,
        sample_index=sample_index,
    )
    program = synthesize_code(augmented, concept, logo_image, gateway, stage_config, sample_index=sample_index)

    bugs = verify(program, doc, tolerances, env)
    outcome = None
    final_program = program
    if bugs and repair_settings is not None:
        outcome = repair(
            program, doc, repair_settings, gateway, env, stage_config, render_opts=render_opts
        )
        final_program = outcome.final_program or program

    page = emit_animation_page(augmented, final_program, doc)
    return VariantResult(
        sample_index=sample_index,
        captions=captions,
        roles=roles,
        groups=groups,
        entrance=entrance,
        concept=concept,
        program=program,
        bugs_before_repair=bugs,
        repair_outcome=outcome,
        final_program=final_program,
        page_html=page,
        canvas=augmented,
        env=env,
    )


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_variant(result: VariantResult, out_dir: Path, doc: LayeredDocument) -> None:
    """Persist per-variant artifacts: captions.json, roles.json, groups.json,
    concept.txt, program.src / program.json, page.html, bugs.json, repair.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(out_dir / "captions.json", result.captions)
    _dump_json(out_dir / "roles.json", result.roles.roles)
    _dump_json(out_dir / "groups.json", result.groups.as_dict())
    _dump_json(
        out_dir / "entrance.json", {"mode": result.entrance.mode, "text": result.entrance.text}
    )
    (out_dir / "concept.txt").write_text(result.concept.text + "\n", encoding="utf-8")
    (out_dir / "program.src").write_text(serialize(result.final_program), encoding="utf-8")
    _dump_json(out_dir / "program.json", program_to_json(result.final_program))
    (out_dir / "canvas.html").write_text(result.canvas.text, encoding="utf-8")
    (out_dir / "page.html").write_text(result.page_html, encoding="utf-8")
    bugs_with_crops = attach_crops(result.bugs_before_repair, doc, result.program, result.env)
    write_bugs(bugs_with_crops, out_dir)
    if result.repair_outcome is not None:
        _dump_json(out_dir / "repair.json", result.repair_outcome.to_dict())


def program_to_json(program: TimelineProgram) -> dict:
    """AST dump mirroring program.src; diagnostics included for auditability."""
    entries = []
    for entry in program.entries:
        props = {}
        for name, spec in entry.properties.items():
            props[name] = {"from": spec.from_value, "to": spec.to, "unit": spec.unit.value}
        delay = (
            {"stagger": entry.delay.step} if hasattr(entry.delay, "step") else entry.delay
        )
        entries.append(
            {
                "targets": entry.targets,
                "properties": props,
                "duration": entry.duration,
                "delay": delay,
                "easing": entry.easing,
                "loop": entry.loop,
                "direction": entry.direction,
                "offset": {"kind": entry.offset.kind, "value": entry.offset.value},
            }
        )
    return {
        "entries": entries,
        "diagnostics": [
            {"severity": d.severity.value, "code": d.code, "message": d.message}
            for d in program.diagnostics
        ],
    }
