"""Layer-wise, budgeted repair of bugged animation code (pass@k per element).

Elements are fixed bottom-up in z order. Each attempt builds a prompt carrying the
element id, the full program, and the numeric bbox deltas - plus the TARGET/FINAL
crop pair when image context is on - then parses the reply snippet, merges it, and
re-checks that element. A merge is kept only if it actually fixes the element;
failed parses, failed merges, and gateway errors all consume an attempt and never
abort the run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .document import LayeredDocument
from .gateway import ChatMessage, ChatRequest, Gateway, ImagePart, TextPart
from .interp import CompiledProgram, final_frame, layout_frame
from .render import RenderOptions, make_diff_crops
from .stages import StageConfig, extract_code_block, load_template, render_template
from .timeline_lang import (
    SelectorEnv,
    TimelineProgram,
    merge_patch,
    parse as parse_timeline,
    serialize,
)
from .verify import LayerBug, Tolerances, frame_bugs, verify

log = logging.getLogger(__name__)


class MergeFailed(Exception):
    pass


class InconsistentBudget(Exception):
    pass


@dataclass(frozen=True)
class RepairSettings:
    k: int = 4
    with_images: bool = True
    merge_mode: str = "ast"  # 'ast' | 'llm'
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if not 1 <= self.k <= 16:
            raise ValueError(f"k must be in [1, 16], got {self.k}")
        if self.merge_mode not in ("ast", "llm"):
            raise ValueError(f"merge_mode must be 'ast' or 'llm', got {self.merge_mode}")


@dataclass
class ElementRepair:
    element_id: str
    attempts_used: int = 0
    solved: bool = False
    solved_at: Optional[int] = None
    bug_history: list[list[LayerBug]] = field(default_factory=list)
    events: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "attempts_used": self.attempts_used,
            "solved": self.solved,
            "solved_at": self.solved_at,
            "bug_history": [[b.to_dict() for b in bugs] for bugs in self.bug_history],
            "events": self.events,
        }


@dataclass
class RepairOutcome:
    settings: RepairSettings
    elements: list[ElementRepair] = field(default_factory=list)
    run_solved: bool = True
    final_program: Optional[TimelineProgram] = None
    initial_bugs: list[LayerBug] = field(default_factory=list)
    final_bugs: list[LayerBug] = field(default_factory=list)
    canvas_checks: list[dict] = field(default_factory=list)
    gateway_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "settings": {
                "k": self.settings.k,
                "with_images": self.settings.with_images,
                "merge_mode": self.settings.merge_mode,
                "tolerances": {
                    "position": self.settings.tolerances.eps_pos,
                    "size": self.settings.tolerances.eps_size,
                    "opacity": self.settings.tolerances.eps_opacity,
                },
            },
            "elements": [e.to_dict() for e in self.elements],
            "run_solved": self.run_solved,
            "initial_bugs": [b.to_dict() for b in self.initial_bugs],
            "final_bugs": [b.to_dict() for b in self.final_bugs],
            "canvas_checks": self.canvas_checks,
            "gateway_calls": self.gateway_calls,
        }


def build_repair_prompt(
    element_id: str,
    alt_text: str,
    bugs: list[LayerBug],
    program: TimelineProgram,
    with_images: bool,
    doc: Optional[LayeredDocument] = None,
    env: Optional[SelectorEnv] = None,
    config: StageConfig = StageConfig(),
    attempt: Optional[int] = None,
    render_opts: RenderOptions = RenderOptions(),
) -> ChatRequest:
    """Repair request: delta text always, TARGET then FINAL crops iff with_images."""
    description = "\n".join(b.describe() for b in bugs)
    image_note = (
        "Two images are attached: first the element at its TARGET layout, then where it "
        "actually ended in the FINAL frame.\n"
        if with_images
        else ""
    )
    text = render_template(
        load_template("repair"),
        element_id=element_id,
        alt_text=alt_text,
        bug_description=description,
        program=serialize(program),
        image_note=image_note,
    )
    parts: list = [TextPart(text)]
    if with_images:
        if doc is None:
            raise ValueError("with_images needs the document to render crops")
        pair = make_diff_crops(
            doc, layout_frame(doc), final_frame(program, doc, env), element_id, opts=render_opts
        )
        parts.append(ImagePart(pair.target_crop))
        parts.append(ImagePart(pair.final_crop))
    return ChatRequest(
        model=config.model,
        messages=(ChatMessage.user(*parts),),
        tag="repair",
        temperature=config.deterministic_temperature,
        max_tokens=config.max_tokens,
        element_id=element_id,
        attempt=attempt,
    )


def _states_match(a, b, tol: float = 1e-6) -> bool:
    return (
        abs(a.left - b.left) <= tol
        and abs(a.top - b.top) <= tol
        and abs(a.width - b.width) <= tol
        and abs(a.height - b.height) <= tol
        and abs(a.translate_x - b.translate_x) <= tol
        and abs(a.translate_y - b.translate_y) <= tol
        and abs(a.scale_x - b.scale_x) <= tol
        and abs(a.scale_y - b.scale_y) <= tol
        and abs(a.rotate - b.rotate) <= tol
        and abs(a.opacity - b.opacity) <= tol
    )


def _locality_holds(
    original: TimelineProgram,
    candidate: TimelineProgram,
    doc: LayeredDocument,
    element_id: str,
    env: Optional[SelectorEnv],
    probes: int = 17,
) -> bool:
    """Every element other than element_id keeps identical sampled motion."""
    before = CompiledProgram(original, doc, env)
    after = CompiledProgram(candidate, doc, env)
    horizon = max(before.t_end(), after.t_end(), 1.0)
    times = [horizon * i / (probes - 1) for i in range(probes)]
    for t in times:
        state_a = before.state_at(t)
        state_b = after.state_at(t)
        for layer in doc.layers:
            if layer.id == element_id:
                continue
            if not _states_match(state_a.elements[layer.id], state_b.elements[layer.id]):
                return False
    return True


def merge(
    program: TimelineProgram,
    element_id: str,
    snippet_text: str,
    merge_mode: str,
    gateway: Optional[Gateway] = None,
    doc: Optional[LayeredDocument] = None,
    env: Optional[SelectorEnv] = None,
    config: StageConfig = StageConfig(),
    events: Optional[list[str]] = None,
) -> TimelineProgram:
    """Snippet into program. ast mode is deterministic merge_patch; llm mode asks
    the model for the merged timeline, validates the locality property, and falls
    back to ast when the reply perturbs anyone else."""
    snippet = parse_timeline(snippet_text)
    if snippet.errors:
        raise MergeFailed("snippet does not parse: " + "; ".join(d.format() for d in snippet.errors))

    if merge_mode == "llm":
        if gateway is None:
            raise ValueError("llm merge mode needs a gateway")
        prompt = render_template(
            load_template("merge"),
            element_id=element_id,
            program=serialize(program),
            snippet=serialize(snippet),
        )
        reply = gateway.chat(
            ChatRequest(
                model=config.model,
                messages=(ChatMessage.user(TextPart(prompt)),),
                tag="merge",
                temperature=config.deterministic_temperature,
                max_tokens=config.max_tokens,
                element_id=element_id,
            )
        ).text
        block = extract_code_block(reply)
        if block is None:
            raise MergeFailed("llm merge reply has no fenced code block")
        candidate = parse_timeline(block)
        if candidate.errors:
            raise MergeFailed(
                "llm merge reply does not parse: " + "; ".join(d.format() for d in candidate.errors)
            )
        if doc is not None and not _locality_holds(program, candidate, doc, element_id, env):
            if events is not None:
                events.append("llm merge violated locality; fell back to ast merge")
            log.warning("llm merge for %s violated locality; using ast merge", element_id)
            return merge_patch(program, element_id, snippet, env)
        return candidate

    try:
        return merge_patch(program, element_id, snippet, env)
    except Exception as exc:
        raise MergeFailed(str(exc)) from exc


def repair(
    program: TimelineProgram,
    doc: LayeredDocument,
    settings: RepairSettings,
    gateway: Gateway,
    env: Optional[SelectorEnv] = None,
    config: StageConfig = StageConfig(),
    render_opts: RenderOptions = RenderOptions(),
) -> RepairOutcome:
    """Fix bugged elements bottom-up in z order, up to k attempts each."""
    tol = settings.tolerances
    outcome = RepairOutcome(settings=settings, final_program=program)
    outcome.initial_bugs = verify(program, doc, tol, env)
    if not outcome.initial_bugs:
        outcome.final_bugs = []
        return outcome

    bugged_ids = []
    for layer in doc.layers:  # z order, bottom first
        if any(b.element_id == layer.id for b in outcome.initial_bugs) and layer.id not in bugged_ids:
            bugged_ids.append(layer.id)

    current = program
    calls_before = gateway.provider_calls
    for element_id in bugged_ids:
        layer = doc.layer(element_id)
        record = ElementRepair(element_id=element_id)
        outcome.elements.append(record)
        for attempt in range(1, settings.k + 1):
            element_bugs = [
                b for b in frame_bugs(final_frame(current, doc, env), doc, tol) if b.element_id == element_id
            ]
            record.bug_history.append(element_bugs)
            if not element_bugs:
                # a previous element's fix cleared this one
                record.solved = True
                record.solved_at = record.attempts_used
                break
            record.attempts_used = attempt
            try:
                request = build_repair_prompt(
                    element_id,
                    layer.alt_text,
                    element_bugs,
                    current,
                    settings.with_images,
                    doc=doc,
                    env=env,
                    config=config,
                    attempt=attempt,
                    render_opts=render_opts,
                )
                reply = gateway.chat(request).text
            except Exception as exc:
                record.events.append(f"attempt {attempt}: gateway error {type(exc).__name__}: {exc}")
                continue
            snippet_text = extract_code_block(reply)
            if snippet_text is None:
                snippet_text = reply if reply.lstrip().startswith("timeline") else None
            if not snippet_text:
                record.events.append(f"attempt {attempt}: reply had no code snippet")
                continue
            if not snippet_text.lstrip().startswith("timeline"):
                snippet_text = "timeline\n" + snippet_text
            try:
                candidate = merge(
                    current,
                    element_id,
                    snippet_text,
                    settings.merge_mode,
                    gateway=gateway,
                    doc=doc,
                    env=env,
                    config=config,
                    events=record.events,
                )
            except MergeFailed as exc:
                record.events.append(f"attempt {attempt}: {exc}")
                continue
            still_bugged = [
                b
                for b in frame_bugs(final_frame(candidate, doc, env), doc, tol)
                if b.element_id == element_id
            ]
            if still_bugged:
                record.events.append(
                    f"attempt {attempt}: merge applied but element still fails "
                    f"({', '.join(b.kind for b in still_bugged)}); change discarded"
                )
                continue
            current = candidate  # kept only because it fixes the element
            record.solved = True
            record.solved_at = attempt
            break
        remaining = verify(current, doc, tol, env)
        outcome.canvas_checks.append(
            {"after_element": element_id, "remaining_bugs": len(remaining)}
        )

    outcome.final_program = current
    outcome.final_bugs = verify(current, doc, tol, env)
    outcome.run_solved = all(e.solved for e in outcome.elements)
    outcome.gateway_calls = gateway.provider_calls - calls_before
    return outcome


def solve_rate(outcomes: list[RepairOutcome], k: int) -> float:
    """Fraction of runs whose every bugged element was solved within its first k
    attempts. Runs with no bugs count as solved at every k."""
    if not outcomes:
        return 0.0
    solved = 0
    for outcome in outcomes:
        if outcome.settings.k < k:
            raise InconsistentBudget(
                f"outcome recorded with k={outcome.settings.k}, cannot truncate to k={k}"
            )
        if all(e.solved_at is not None and e.solved_at <= k for e in outcome.elements):
            solved += 1
    return solved / len(outcomes)
