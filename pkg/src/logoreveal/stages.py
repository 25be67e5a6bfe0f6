"""The staged LLM pipeline: layer captions, visual hierarchy, entrance, grouping,
design concept, and timeline code synthesis.

Hierarchy and grouping ask for small JSON replies and are validated hard: whatever
the model says, the returned RoleAssignment has exactly one primary (corrective
re-ask, then a deterministic heuristic fallback) and groups are disjoint subsets of
the secondary ids. Concept and synthesis are the creative, temperature-sampled
stages; everything else runs at temperature 0.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .canvas_html import CanvasHtml, GroupingPlan, RoleAssignment
from .document import LayeredDocument, Layer, magnified_view, to_png_bytes
from .gateway import ChatMessage, ChatRequest, Gateway, ImagePart, TextPart
from .timeline_lang import TimelineProgram, parse as parse_timeline

log = logging.getLogger(__name__)

_PROMPT_DIR = Path(__file__).parent / "prompts"
_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")


class CaptionFailed(Exception):
    def __init__(self, layer_id: str):
        self.layer_id = layer_id
        super().__init__(f"captioning failed for layer {layer_id!r}")


class HierarchyFailed(Exception):
    pass


class SynthesisFailed(Exception):
    pass


@dataclass(frozen=True)
class StageConfig:
    model: str = "gpt-4-vision"
    creative_temperature: float = 0.7
    deterministic_temperature: float = 0.0
    max_tokens: int = 2000


@dataclass(frozen=True)
class EntranceDescription:
    text: str
    mode: str  # 'path-entrance' | 'in-place'


_DIRECTION_WORDS = ("left", "right", "top", "bottom", "above", "below", "side", "edge", "corner", "offscreen", "off-screen")


def make_entrance(text: str, mode: str) -> EntranceDescription:
    """Factory keeping mode consistent with the sentence: a path entrance must
    actually name a direction, otherwise it degrades to in-place."""
    text = text.strip() or "enter from in place"
    if mode not in ("path-entrance", "in-place"):
        mode = "in-place"
    if mode == "path-entrance" and not any(w in text.lower() for w in _DIRECTION_WORDS):
        mode = "in-place"
    return EntranceDescription(text=text, mode=mode)


@dataclass(frozen=True)
class DesignConcept:
    text: str
    primary_motion: str
    stage_notes: dict[str, str]


def load_template(name: str) -> str:
    return (_PROMPT_DIR / f"{name}.txt").read_text(encoding="utf-8")


def render_template(template: str, **values: str) -> str:
    """Substitute {name} placeholders for known names only; all other braces
    (code blocks, JSON examples) pass through untouched."""

    def sub(m: re.Match) -> str:
        name = m.group(1)
        return str(values[name]) if name in values else m.group(0)

    return _PLACEHOLDER_RE.sub(sub, template)


def extract_code_block(text: str) -> Optional[str]:
    """First fenced code block (``` or ''' fences, optional language tag)."""
    m = re.search(r"(```|''')(?:\s*(?:javascript|js))?\s*\n(.*?)\1", text, re.DOTALL)
    if m:
        return m.group(2).strip()
    return None


def extract_json_object(text: str) -> Optional[dict]:
    decoder = json.JSONDecoder()
    for start in range(len(text)):
        if text[start] != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text[start:])
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _png_part(image: np.ndarray) -> ImagePart:
    return ImagePart(to_png_bytes(image))


# --- captions ---------------------------------------------------------------------


def caption_layers(doc: LayeredDocument, gateway: Gateway, config: StageConfig = StageConfig()) -> dict[str, str]:
    """Caption every image layer from its magnified view; text layers keep their
    literal content and never hit the model. Empty captions retry once."""
    captions: dict[str, str] = {}
    for layer in doc.layers:
        if layer.is_text:
            captions[layer.id] = layer.alt_text
            continue
        view = magnified_view(layer)
        prompt = load_template("caption")
        text = ""
        for attempt in (1, 2):
            resp = gateway.chat(
                ChatRequest(
                    model=config.model,
                    messages=(ChatMessage.user(TextPart(prompt), _png_part(view)),),
                    tag="caption",
                    temperature=config.deterministic_temperature,
                    max_tokens=200,
                    element_id=layer.id,
                    attempt=attempt,
                )
            )
            text = resp.text.strip()
            if text:
                break
        if not text:
            raise CaptionFailed(layer.id)
        captions[layer.id] = text
    return captions


def apply_captions(doc: LayeredDocument, captions: dict[str, str]) -> LayeredDocument:
    layers = tuple(
        replace(layer, alt_text=captions.get(layer.id, layer.alt_text)) for layer in doc.layers
    )
    return replace(doc, layers=layers)


# --- hierarchy --------------------------------------------------------------------


def heuristic_roles(doc: LayeredDocument) -> RoleAssignment:
    """Deterministic fallback: near-full-canvas images are background, text layers
    are text, the largest remaining image (ties broken by higher z) is primary,
    everything else secondary."""
    if not doc.layers:
        raise HierarchyFailed("document has no layers")
    roles: dict[str, str] = {}
    canvas_area = doc.canvas_width * doc.canvas_height
    for layer in doc.layers:
        if layer.is_text:
            roles[layer.id] = "text"
        elif layer.bbox.area >= 0.9 * canvas_area:
            roles[layer.id] = "background"
    candidates = [l for l in doc.layers if not l.is_text and l.id not in roles]
    if not candidates:
        candidates = [l for l in doc.layers if roles.get(l.id) != "background"]
    if not candidates:
        candidates = list(doc.layers)
    primary = max(candidates, key=lambda l: (l.bbox.area, l.z_index))
    roles[primary.id] = "primary"
    for layer in doc.layers:
        roles.setdefault(layer.id, "secondary")
    assignment = RoleAssignment(roles={l.id: roles[l.id] for l in doc.layers})
    assignment.validate()
    return assignment


def _roles_from_reply(reply: str, doc: LayeredDocument) -> Optional[RoleAssignment]:
    obj = extract_json_object(reply)
    if obj is None:
        return None
    wanted = {layer.id for layer in doc.layers}
    roles = {k: str(v) for k, v in obj.items() if k in wanted}
    if set(roles) != wanted:
        return None
    assignment = RoleAssignment(roles={l.id: roles[l.id] for l in doc.layers})
    try:
        assignment.validate()
    except Exception:
        return None
    return assignment


def classify_hierarchy(
    canvas: CanvasHtml,
    logo_image: np.ndarray,
    doc: LayeredDocument,
    gateway: Gateway,
    config: StageConfig = StageConfig(),
) -> RoleAssignment:
    """Role per element with exactly one primary, whatever the model replies:
    invalid output earns one corrective re-ask, then the heuristic takes over."""
    prompt = render_template(load_template("hierarchy"), html=canvas.text)
    request = ChatRequest(
        model=config.model,
        messages=(ChatMessage.user(TextPart(prompt), _png_part(logo_image)),),
        tag="hierarchy",
        temperature=config.deterministic_temperature,
        max_tokens=config.max_tokens,
        attempt=1,
    )
    reply = gateway.chat(request).text
    assignment = _roles_from_reply(reply, doc)
    if assignment is not None:
        return assignment

    retry_prompt = (
        prompt
        + "\n\nYour previous reply was not a valid assignment (every element exactly once, "
        + "exactly one primary). Reply again with only the JSON object."
    )
    reply = gateway.chat(
        replace(request, messages=(ChatMessage.user(TextPart(retry_prompt), _png_part(logo_image)),), attempt=2)
    ).text
    assignment = _roles_from_reply(reply, doc)
    if assignment is not None:
        return assignment
    log.warning("hierarchy replies invalid twice; falling back to heuristic roles")
    return heuristic_roles(doc)


# --- entrance ---------------------------------------------------------------------


def derive_entrance(
    primary: Layer, gateway: Gateway, config: StageConfig = StageConfig()
) -> EntranceDescription:
    prompt = render_template(load_template("entrance"), primary_caption=primary.alt_text)
    resp = gateway.chat(
        ChatRequest(
            model=config.model,
            messages=(ChatMessage.user(TextPart(prompt), _png_part(magnified_view(primary))),),
            tag="entrance",
            temperature=config.deterministic_temperature,
            max_tokens=300,
            element_id=primary.id,
        )
    )
    obj = extract_json_object(resp.text)
    if obj is None:
        return make_entrance(resp.text.strip() or "enter from in place", "in-place")
    return make_entrance(str(obj.get("description", "")), str(obj.get("mode", "in-place")))


# --- grouping ---------------------------------------------------------------------


def group_secondary(
    canvas: CanvasHtml,
    roles: RoleAssignment,
    gateway: Gateway,
    config: StageConfig = StageConfig(),
) -> GroupingPlan:
    """Disjoint groups over secondary ids; unknown ids are dropped with a warning
    and an empty reply degrades to one singleton group per secondary element."""
    roles.validate()
    secondary = [i for i in canvas.element_index if roles.roles.get(i) == "secondary"]
    if not secondary:
        return GroupingPlan()
    prompt = render_template(
        load_template("grouping"), html=canvas.text, secondary_ids=", ".join(secondary)
    )
    resp = gateway.chat(
        ChatRequest(
            model=config.model,
            messages=(ChatMessage.user(TextPart(prompt)),),
            tag="grouping",
            temperature=config.deterministic_temperature,
            max_tokens=config.max_tokens,
        )
    )
    obj = extract_json_object(resp.text) or {}
    taken: set[str] = set()
    groups: dict[str, list[str]] = {}
    for raw in obj.get("groups", []) if isinstance(obj.get("groups"), list) else []:
        if not isinstance(raw, dict):
            continue
        gid = str(raw.get("id", "")) or f"group_{len(groups)}"
        if gid in canvas.element_index:
            gid = f"group_{gid}"
        members = []
        for member in raw.get("members", []):
            if member not in secondary:
                log.warning("grouping reply names unknown or non-secondary id %r; dropped", member)
                continue
            if member in taken:
                log.warning("grouping reply repeats %r across groups; keeping first", member)
                continue
            members.append(member)
            taken.add(member)
        if members:
            groups[gid] = members
    if not groups:
        groups = {f"{i}_group": [i] for i in secondary}
    return GroupingPlan.of(groups)


# --- design concept ---------------------------------------------------------------


def _first_sentence(text: str) -> str:
    m = re.search(r"[^.!?\n]+[.!?]?", text.strip())
    return m.group(0).strip() if m else text.strip()


def suggest_design_concept(
    canvas: CanvasHtml,
    logo_image: np.ndarray,
    entrance: EntranceDescription,
    primary_id: str,
    primary_caption: str,
    gateway: Gateway,
    config: StageConfig = StageConfig(),
    sample_index: Optional[int] = None,
) -> DesignConcept:
    prompt = render_template(
        load_template("concept"),
        html=canvas.text,
        entrance_description=entrance.text,
        primary_caption=primary_caption,
    )
    resp = gateway.chat(
        ChatRequest(
            model=config.model,
            messages=(ChatMessage.user(TextPart(prompt), _png_part(logo_image)),),
            tag="concept",
            temperature=config.creative_temperature,
            max_tokens=config.max_tokens,
            sample_index=sample_index,
        )
    )
    text = resp.text.strip()
    if not text:
        text = f"Hero moment on {primary_caption} ({primary_id}): {entrance.text}"
    if primary_id not in text and primary_caption.lower() not in text.lower():
        text += f"\nHero moment on {primary_caption} ({primary_id})."
    notes = {}
    for role in ("secondary", "text", "background"):
        lines = [s.strip() for s in re.split(r"(?<=[.!?])\s+", text) if role in s.lower()]
        if lines:
            notes[role] = " ".join(lines)
    return DesignConcept(text=text, primary_motion=_first_sentence(text), stage_notes=notes)


# --- code synthesis ---------------------------------------------------------------


def synthesize_code(
    canvas: CanvasHtml,
    concept: DesignConcept,
    logo_image: np.ndarray,
    gateway: Gateway,
    config: StageConfig = StageConfig(),
    sample_index: Optional[int] = None,
) -> TimelineProgram:
    """Extract and parse the reply's fenced code block; a reply with no block or
    with error diagnostics earns one corrective re-ask carrying the diagnostics."""
    prompt = render_template(load_template("synthesis"), html=canvas.text, design_concept=concept.text)
    request = ChatRequest(
        model=config.model,
        messages=(ChatMessage.user(TextPart(prompt), _png_part(logo_image)),),
        tag="synthesis",
        temperature=config.creative_temperature,
        max_tokens=config.max_tokens,
        sample_index=sample_index,
        attempt=1,
    )
    reply = gateway.chat(request).text
    program, problem = _program_from_reply(reply)
    if program is not None:
        return program

    retry_prompt = (
        prompt
        + "\n\nYour previous reply could not be used: "
        + problem
        + "\nReturn only the corrected code in one fenced block."
    )
    reply = gateway.chat(
        replace(
            request,
            messages=(ChatMessage.user(TextPart(retry_prompt), _png_part(logo_image)),),
            attempt=2,
        )
    ).text
    program, problem = _program_from_reply(reply)
    if program is None:
        raise SynthesisFailed(problem)
    return program


def _program_from_reply(reply: str) -> tuple[Optional[TimelineProgram], str]:
    block = extract_code_block(reply)
    if block is None:
        return None, "no fenced code block found"
    program = parse_timeline(block)
    if program.errors:
        return None, "; ".join(d.format() for d in program.errors)
    return program, ""
