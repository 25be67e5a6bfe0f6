"""File-backed variant store for the local service and CLI.

Variants are immutable once written: interactive edits always fork a child
variant (lineage is acyclic by construction since a child's parent must already
exist). Edits reuse the repair machinery, so user changes get the same verify ->
repair safety net as synthesis. Mutations are idempotent via client request ids.
"""

from __future__ import annotations

import json
import shutil
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .canvas_html import GroupingPlan, RoleAssignment, emit_animation_page, parse_html
from .config import RunConfig
from .document import LayeredDocument, load_project
from .gateway import (
    ChatMessage,
    ChatRequest,
    Gateway,
    HttpProvider,
    LogicalClock,
    ScriptedProvider,
    ScriptedScenario,
    SystemClock,
    TextPart,
)
from .interp import selector_env
from .pipeline import program_to_json, run_variant, write_variant
from .repair import repair as run_repair
from .stages import apply_captions, extract_code_block, load_template, render_template
from .timeline_lang import (
    SelectorEnv,
    TimelineProgram,
    merge_patch_multi,
    parse as parse_timeline,
    serialize,
)
from .verify import verify


class ProjectNotFound(Exception):
    pass


class VariantNotFound(Exception):
    pass


class EditFailed(Exception):
    pass


@dataclass(frozen=True)
class Variant:
    id: str
    project_id: str
    parent_variant: Optional[str]
    created_at: float
    concept_excerpt: str = ""
    run_solved: bool = True
    open_bugs: int = 0
    request_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "project_id": self.project_id,
            "parent_variant": self.parent_variant,
            "created_at": self.created_at,
            "concept_excerpt": self.concept_excerpt,
            "run_solved": self.run_solved,
            "open_bugs": self.open_bugs,
            "request_id": self.request_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Variant":
        return cls(
            id=d["id"],
            project_id=d["project_id"],
            parent_variant=d.get("parent_variant"),
            created_at=float(d.get("created_at", 0.0)),
            concept_excerpt=d.get("concept_excerpt", ""),
            run_solved=bool(d.get("run_solved", True)),
            open_bugs=int(d.get("open_bugs", 0)),
            request_id=d.get("request_id"),
        )


@dataclass(frozen=True)
class EditRequest:
    variant_id: str
    prompt: str
    request_id: Optional[str] = None

    def __post_init__(self):
        if not self.prompt.strip():
            raise ValueError("edit prompt must be non-empty")


class Workspace:
    """All projects under one root directory; per-project writes serialized."""

    def __init__(self, root: Path, config: RunConfig = RunConfig()):
        self.root = Path(root)
        self.config = config
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        # deterministic timestamps in stub mode, wall clock against live providers
        self.clock = LogicalClock() if config.provider == "stub" else SystemClock()

    # --- layout ----------------------------------------------------------------

    def project_dir(self, project_id: str) -> Path:
        return self.root / project_id

    def _variants_dir(self, project_id: str) -> Path:
        return self.project_dir(project_id) / "variants"

    def variant_dir(self, variant_id: str) -> Path:
        project_id = variant_id.split(".", 1)[0]
        return self._variants_dir(project_id) / variant_id

    def _lock(self, project_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(project_id, threading.Lock())

    # --- queries ---------------------------------------------------------------

    def list_projects(self) -> list[dict]:
        out = []
        if not self.root.exists():
            return out
        for manifest in sorted(self.root.glob("*/project.json")):
            project_id = manifest.parent.name
            data = json.loads(manifest.read_text(encoding="utf-8"))
            out.append(
                {
                    "id": project_id,
                    "title": data.get("title", project_id),
                    "n_variants": len(self.list_variants(project_id)),
                }
            )
        return out

    def load_document(self, project_id: str) -> LayeredDocument:
        manifest = self.project_dir(project_id) / "project.json"
        if not manifest.exists():
            raise ProjectNotFound(project_id)
        return load_project(manifest, id_seed=self.config.seed)

    def list_variants(self, project_id: str) -> list[Variant]:
        vdir = self._variants_dir(project_id)
        if not self.project_dir(project_id).exists():
            raise ProjectNotFound(project_id)
        variants = []
        if vdir.exists():
            for meta in sorted(vdir.glob("*/variant.json")):
                variants.append(Variant.from_dict(json.loads(meta.read_text(encoding="utf-8"))))
        return variants

    def get_variant(self, variant_id: str) -> Variant:
        meta = self.variant_dir(variant_id) / "variant.json"
        if not meta.exists():
            raise VariantNotFound(variant_id)
        return Variant.from_dict(json.loads(meta.read_text(encoding="utf-8")))

    def variant_page(self, variant_id: str) -> str:
        page = self.variant_dir(variant_id) / "page.html"
        if not page.exists():
            raise VariantNotFound(variant_id)
        return page.read_text(encoding="utf-8")

    def variant_report(self, variant_id: str) -> dict:
        vdir = self.variant_dir(variant_id)
        if not (vdir / "variant.json").exists():
            raise VariantNotFound(variant_id)
        report = {"variant": self.get_variant(variant_id).to_dict()}
        for name in ("bugs", "repair", "roles", "groups"):
            path = vdir / f"{name}.json"
            if path.exists():
                report[name] = json.loads(path.read_text(encoding="utf-8"))
        concept = vdir / "concept.txt"
        report["concept"] = concept.read_text(encoding="utf-8") if concept.exists() else ""
        return report

    # --- gateway wiring ----------------------------------------------------------

    def make_gateway(self, transcript: Optional[Path] = None) -> Gateway:
        if self.config.provider == "stub":
            if self.config.scenario_path is None:
                raise ValueError("stub provider needs a scenario file")
            provider = ScriptedProvider(ScriptedScenario.load(self.config.scenario_path))
        else:
            provider = HttpProvider(self.config.api_base, self.config.api_key)
        return Gateway(
            provider,
            cache_dir=self.config.cache_dir,
            transcript_path=transcript,
            max_calls=self.config.max_calls,
            retries=self.config.retries,
            max_concurrency=self.config.concurrency,
            clock=self.clock,
        )

    def _gateway_for_project(self, project_id: str, transcript: Optional[Path]) -> Gateway:
        if self.config.provider == "stub" and self.config.scenario_path is None:
            scenario = self.project_dir(project_id) / "scenario.json"
            if scenario.exists():
                provider = ScriptedProvider(ScriptedScenario.load(scenario))
                return Gateway(
                    provider,
                    transcript_path=transcript,
                    max_calls=self.config.max_calls,
                    retries=self.config.retries,
                    max_concurrency=self.config.concurrency,
                    clock=self.clock,
                )
        return self.make_gateway(transcript)

    # --- mutations ----------------------------------------------------------------

    def _next_variant_id(self, project_id: str) -> str:
        existing = self._variants_dir(project_id)
        count = len(list(existing.glob("*/variant.json"))) if existing.exists() else 0
        return f"{project_id}.v{count + 1:03d}"

    def _write_variant_meta(self, variant: Variant) -> None:
        vdir = self.variant_dir(variant.id)
        vdir.mkdir(parents=True, exist_ok=True)
        (vdir / "variant.json").write_text(
            json.dumps(variant.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def generate(self, project_id: str, n_variants: int) -> tuple[list[Variant], list[dict]]:
        """n independent variants through the full pipeline; partial failures
        yield fewer variants plus error rows."""
        doc = self.load_document(project_id)
        variants: list[Variant] = []
        errors: list[dict] = []
        with self._lock(project_id):
            for i in range(n_variants):
                variant_id = self._next_variant_id(project_id)
                vdir = self.variant_dir(variant_id)
                try:
                    gateway = self._gateway_for_project(project_id, vdir / "transcript.jsonl")
                    result = run_variant(
                        doc,
                        gateway,
                        sample_index=i,
                        stage_config=self.config.stage_config(),
                        repair_settings=self.config.repair_settings(),
                        tolerances=self.config.tolerances,
                    )
                    write_variant(result, vdir, doc)
                    outcome = result.repair_outcome
                    variant = Variant(
                        id=variant_id,
                        project_id=project_id,
                        parent_variant=None,
                        created_at=self.clock.now(),
                        concept_excerpt=result.concept.primary_motion,
                        run_solved=outcome.run_solved if outcome else not result.bugs_before_repair,
                        open_bugs=len(outcome.final_bugs) if outcome else len(result.bugs_before_repair),
                    )
                    self._write_variant_meta(variant)
                    variants.append(variant)
                except Exception as exc:
                    errors.append({"variant_index": i, "error": f"{type(exc).__name__}: {exc}"})
                    error_log = self.project_dir(project_id) / "errors.jsonl"
                    with error_log.open("a", encoding="utf-8") as fh:
                        fh.write(json.dumps(errors[-1], sort_keys=True) + "\n")
                    if vdir.exists() and not (vdir / "variant.json").exists():
                        shutil.rmtree(vdir)  # drop the partial dir so the id can be reused cleanly
        return variants, errors

    # --- interactive edit -----------------------------------------------------------

    def _load_variant_context(
        self, variant_id: str
    ) -> tuple[LayeredDocument, TimelineProgram, SelectorEnv, str]:
        vdir = self.variant_dir(variant_id)
        variant = self.get_variant(variant_id)
        doc = self.load_document(variant.project_id)
        program = parse_timeline((vdir / "program.src").read_text(encoding="utf-8"), strict=True)
        roles = json.loads((vdir / "roles.json").read_text(encoding="utf-8"))
        groups = json.loads((vdir / "groups.json").read_text(encoding="utf-8"))
        captions = json.loads((vdir / "captions.json").read_text(encoding="utf-8"))
        doc = apply_captions(doc, captions)
        env = selector_env(doc, roles=roles, groups=groups)
        canvas_text = (vdir / "canvas.html").read_text(encoding="utf-8")
        return doc, program, env, canvas_text

    def handle_edit(self, req: EditRequest) -> Variant:
        """Fork a child variant whose program has the requested change merged in,
        then verify + repair it. The parent is never touched; retries with the
        same request_id return the already-created child."""
        parent = self.get_variant(req.variant_id)  # VariantNotFound on bad id
        if req.request_id:
            for existing in self.list_variants(parent.project_id):
                if existing.request_id == req.request_id:
                    return existing

        doc, program, env, canvas_text = self._load_variant_context(req.variant_id)
        vdir_parent = self.variant_dir(req.variant_id)
        with self._lock(parent.project_id):
            gateway = self._gateway_for_project(parent.project_id, None)
            prompt = render_template(
                load_template("edit"),
                prompt=req.prompt,
                html=canvas_text,
                program=serialize(program),
            )
            snippet = None
            problem = "no reply"
            for attempt in (1, 2):
                try:
                    reply = gateway.chat(
                        ChatRequest(
                            model=self.config.model,
                            messages=(ChatMessage.user(TextPart(prompt)),),
                            tag="edit",
                            temperature=self.config.deterministic_temperature,
                            max_tokens=2000,
                            attempt=attempt,
                        )
                    ).text
                except Exception as exc:
                    problem = f"gateway error: {exc}"
                    continue
                block = extract_code_block(reply)
                if block is None:
                    problem = "reply had no fenced code block"
                    continue
                candidate = parse_timeline(block)
                if candidate.errors:
                    problem = "snippet does not parse: " + "; ".join(
                        d.format() for d in candidate.errors
                    )
                    continue
                snippet = candidate
                break
            if snippet is None:
                raise EditFailed(problem)

            targeted: set[str] = set()
            for entry in snippet.entries:
                targeted.update(env.resolve(entry.targets))
            if not targeted:
                raise EditFailed("snippet targets no known element")
            try:
                edited = merge_patch_multi(program, targeted, snippet, env)
            except Exception as exc:
                raise EditFailed(f"merge failed: {exc}") from exc

            bugs = verify(edited, doc, self.config.tolerances, env)
            outcome = None
            final_program = edited
            if bugs:
                outcome = run_repair(
                    edited,
                    doc,
                    self.config.repair_settings(),
                    gateway,
                    env,
                    self.config.stage_config(),
                )
                final_program = outcome.final_program or edited

            child_id = self._next_variant_id(parent.project_id)
            child_dir = self.variant_dir(child_id)
            child_dir.mkdir(parents=True, exist_ok=True)
            canvas = parse_html(canvas_text)
            page = emit_animation_page(canvas, final_program, doc)
            (child_dir / "program.src").write_text(serialize(final_program), encoding="utf-8")
            (child_dir / "program.json").write_text(
                json.dumps(program_to_json(final_program), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            (child_dir / "page.html").write_text(page, encoding="utf-8")
            (child_dir / "canvas.html").write_text(canvas_text, encoding="utf-8")
            for name in ("captions.json", "roles.json", "groups.json", "concept.txt"):
                src = vdir_parent / name
                if src.exists():
                    (child_dir / name).write_text(src.read_text(encoding="utf-8"), encoding="utf-8")
            (child_dir / "edit.json").write_text(
                json.dumps(
                    {
                        "prompt": req.prompt,
                        "parent": req.variant_id,
                        "bugs_after_merge": len(bugs),
                        "repair": outcome.to_dict() if outcome else None,
                    },
                    indent=2,
                    sort_keys=True,
                )
                + "\n",
                encoding="utf-8",
            )
            final_bugs = outcome.final_bugs if outcome else bugs
            child = Variant(
                id=child_id,
                project_id=parent.project_id,
                parent_variant=parent.id,
                created_at=self.clock.now(),
                concept_excerpt=f"edit: {req.prompt[:80]}",
                run_solved=outcome.run_solved if outcome else not bugs,
                open_bugs=len(final_bugs),
                request_id=req.request_id,
            )
            self._write_variant_meta(child)
            return child
