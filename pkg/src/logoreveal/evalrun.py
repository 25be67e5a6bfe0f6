"""Batch experiment runner: variants per template, synthesis error statistics, and
solve-rate-vs-k curves per repair arm, at desk scale.

Raw per-run rows persist before any aggregation and every aggregate is a pure
function of the rows, so reports are recomputable and reruns with the same seed
and scenarios are byte-identical. Wall-clock timings go to a separate sidecar so
they never perturb the deterministic report.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .document import LayeredDocument, load_project
from .gateway import Gateway, LogicalClock, ScriptedProvider, ScriptedScenario
from .pipeline import run_variant
from .repair import RepairOutcome, RepairSettings, repair
from .stages import StageConfig
from .timeline_lang import TimelineProgram
from .verify import Tolerances, verify


class EmptyRows(Exception):
    pass


@dataclass(frozen=True)
class CorpusSpec:
    templates: tuple[Path, ...]
    variants_per_template: int = 4
    arms: tuple[RepairSettings, ...] = (RepairSettings(with_images=True), RepairSettings(with_images=False))
    seed: int = 0

    def __post_init__(self):
        if self.variants_per_template < 1:
            raise ValueError("variants_per_template must be >= 1")


@dataclass
class RunRow:
    template: str
    variant: int
    arm: str
    k: int
    seed: int
    synthesis_error_free: bool
    n_position_bugs: int
    n_scale_bugs: int
    n_opacity_bugs: int
    n_bugged_elements: int
    run_solved: bool
    element_attempts: dict[str, Optional[int]] = field(default_factory=dict)
    error: str = ""

    CSV_FIELDS = (
        "template",
        "variant",
        "arm",
        "k",
        "seed",
        "synthesis_error_free",
        "n_position_bugs",
        "n_scale_bugs",
        "n_opacity_bugs",
        "n_bugged_elements",
        "run_solved",
        "element_attempts",
        "error",
    )

    def to_csv_dict(self) -> dict:
        d = {name: getattr(self, name) for name in self.CSV_FIELDS if name != "element_attempts"}
        d["element_attempts"] = json.dumps(self.element_attempts, sort_keys=True)
        return d

    @classmethod
    def from_csv_dict(cls, d: dict) -> "RunRow":
        return cls(
            template=d["template"],
            variant=int(d["variant"]),
            arm=d["arm"],
            k=int(d["k"]),
            seed=int(d["seed"]),
            synthesis_error_free=d["synthesis_error_free"] in ("True", "true", True),
            n_position_bugs=int(d["n_position_bugs"]),
            n_scale_bugs=int(d["n_scale_bugs"]),
            n_opacity_bugs=int(d["n_opacity_bugs"]),
            n_bugged_elements=int(d["n_bugged_elements"]),
            run_solved=d["run_solved"] in ("True", "true", True),
            element_attempts=json.loads(d["element_attempts"] or "{}"),
            error=d.get("error", ""),
        )


def _arm_name(settings: RepairSettings) -> str:
    return "imgs" if settings.with_images else "noimgs"


def _bug_counts(bugs) -> tuple[int, int, int, int]:
    position = sum(1 for b in bugs if b.kind == "position")
    scale = sum(1 for b in bugs if b.kind == "scale")
    opacity = sum(1 for b in bugs if b.kind == "opacity")
    elements = len({b.element_id for b in bugs})
    return position, scale, opacity, elements


def row_from_outcome(
    template: str,
    variant: int,
    settings: RepairSettings,
    seed: int,
    bugs,
    outcome: Optional[RepairOutcome],
) -> RunRow:
    position, scale, opacity, elements = _bug_counts(bugs)
    attempts = {}
    solved = not bugs
    if outcome is not None:
        attempts = {e.element_id: e.solved_at for e in outcome.elements}
        solved = outcome.run_solved
    return RunRow(
        template=template,
        variant=variant,
        arm=_arm_name(settings),
        k=settings.k,
        seed=seed,
        synthesis_error_free=not bugs,
        n_position_bugs=position,
        n_scale_bugs=scale,
        n_opacity_bugs=opacity,
        n_bugged_elements=elements,
        run_solved=solved,
        element_attempts=attempts,
    )


def verify_only_rows(
    doc: LayeredDocument,
    programs: list[TimelineProgram],
    tolerances: Tolerances = Tolerances(),
    template: str = "injected",
    seed: int = 0,
) -> list[RunRow]:
    """Rows for pre-built programs (e.g. an injected-fault corpus): verification
    bookkeeping only, no repair."""
    rows = []
    for i, program in enumerate(programs):
        bugs = verify(program, doc, tolerances)
        position, scale, opacity, elements = _bug_counts(bugs)
        rows.append(
            RunRow(
                template=template,
                variant=i,
                arm="synthesis",
                k=0,
                seed=seed,
                synthesis_error_free=not bugs,
                n_position_bugs=position,
                n_scale_bugs=scale,
                n_opacity_bugs=opacity,
                n_bugged_elements=elements,
                run_solved=not bugs,
                element_attempts={},
            )
        )
    return rows


# --- aggregation --------------------------------------------------------------------


def solve_rate_from_rows(rows: list[RunRow], k: int) -> float:
    if not rows:
        raise EmptyRows("no rows for solve rate")
    solved = 0
    for row in rows:
        attempts = row.element_attempts.values()
        if all(a is not None and a <= k for a in attempts):
            solved += 1
    return solved / len(rows)


@dataclass
class EvalReport:
    rows: list[RunRow]
    config: dict
    solve_tables: dict[str, list[tuple[int, float]]] = field(default_factory=dict)
    attempts_histogram: dict[str, dict[str, int]] = field(default_factory=dict)
    error_stats: dict = field(default_factory=dict)

    def to_markdown(self) -> str:
        lines = ["# Evaluation report", "", "## Configuration", ""]
        for key in sorted(self.config):
            lines.append(f"- {key}: {self.config[key]}")
        lines += ["", "## Synthesis error statistics", ""]
        stats = self.error_stats
        lines.append(f"- runs: {stats['n_runs']}")
        lines.append(f"- error-free after synthesis: {stats['n_error_free']} ({stats['pct_error_free']}%)")
        lines.append(
            f"- runs with position errors: {stats['n_runs_position']} ({stats['pct_runs_position']}%)"
        )
        lines.append(f"- runs with scale errors: {stats['n_runs_scale']} ({stats['pct_runs_scale']}%)")
        lines.append(f"- runs with opacity errors: {stats['n_runs_opacity']} ({stats['pct_runs_opacity']}%)")
        lines.append(
            f"- total bugs by kind: position={stats['total_position']}, "
            f"scale={stats['total_scale']}, opacity={stats['total_opacity']}"
        )
        for arm, table in sorted(self.solve_tables.items()):
            lines += ["", f"## Solve rate vs k ({arm})", "", "| k | solve rate |", "|---|---|"]
            for k, rate in table:
                lines.append(f"| {k} | {rate:.2f} |")
        for arm, hist in sorted(self.attempts_histogram.items()):
            lines += ["", f"## Attempts per solved error ({arm})", "", "| attempts | errors |", "|---|---|"]
            for key in sorted(hist, key=lambda s: (s == "unsolved", s)):
                lines.append(f"| {key} | {hist[key]} |")
        return "\n".join(lines) + "\n"

    def rows_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(RunRow.CSV_FIELDS), lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row.to_csv_dict())
        return buf.getvalue()


def summarize(rows: list[RunRow], config: Optional[dict] = None) -> EvalReport:
    """Aggregate persisted rows into the report tables; pure function of the rows."""
    if not rows:
        raise EmptyRows("cannot summarize zero rows")
    report = EvalReport(rows=list(rows), config=dict(config or {}))

    # synthesis stats over distinct (template, variant) pairs so multi-arm rows
    # do not double count
    seen: dict[tuple[str, int], RunRow] = {}
    for row in rows:
        seen.setdefault((row.template, row.variant), row)
    synth = list(seen.values())
    n = len(synth)
    n_error_free = sum(1 for r in synth if r.synthesis_error_free)
    n_position = sum(1 for r in synth if r.n_position_bugs > 0)
    n_scale = sum(1 for r in synth if r.n_scale_bugs > 0)
    n_opacity = sum(1 for r in synth if r.n_opacity_bugs > 0)
    report.error_stats = {
        "n_runs": n,
        "n_error_free": n_error_free,
        "pct_error_free": round(100.0 * n_error_free / n, 1),
        "n_runs_position": n_position,
        "pct_runs_position": round(100.0 * n_position / n, 1),
        "n_runs_scale": n_scale,
        "pct_runs_scale": round(100.0 * n_scale / n, 1),
        "n_runs_opacity": n_opacity,
        "pct_runs_opacity": round(100.0 * n_opacity / n, 1),
        "total_position": sum(r.n_position_bugs for r in synth),
        "total_scale": sum(r.n_scale_bugs for r in synth),
        "total_opacity": sum(r.n_opacity_bugs for r in synth),
    }

    arms = sorted({row.arm for row in rows if row.arm not in ("synthesis",)})
    for arm in arms:
        arm_rows = [r for r in rows if r.arm == arm]
        max_k = max(r.k for r in arm_rows)
        table = [(k, solve_rate_from_rows(arm_rows, k)) for k in range(1, max_k + 1)]
        rates = [rate for _, rate in table]
        if any(b < a - 1e-12 for a, b in zip(rates, rates[1:])):
            raise AssertionError(f"solve rate not monotone in k for arm {arm}: {rates}")
        report.solve_tables[arm] = table

        hist: dict[str, int] = {}
        for row in arm_rows:
            for solved_at in row.element_attempts.values():
                key = "unsolved" if solved_at is None else str(max(solved_at, 1))
                hist[key] = hist.get(key, 0) + 1
        report.attempts_histogram[arm] = hist
    return report


# --- corpus runner --------------------------------------------------------------------


def run_corpus(
    spec: CorpusSpec,
    out_dir: Path,
    stage_config: StageConfig = StageConfig(),
    tolerances: Tolerances = Tolerances(),
    max_calls: int = 200,
) -> EvalReport:
    """Full pipeline per (template, variant) against each template's scripted
    scenario, then every repair arm on the same synthesized program. Per-run
    failures become error rows; the batch never aborts."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[RunRow] = []
    rows_path = out_dir / "rows.csv"
    timings_path = out_dir / "timings.csv"
    with rows_path.open("w", encoding="utf-8", newline="") as rows_fh, timings_path.open(
        "w", encoding="utf-8", newline=""
    ) as timing_fh:
        row_writer = csv.DictWriter(rows_fh, fieldnames=list(RunRow.CSV_FIELDS), lineterminator="\n")
        row_writer.writeheader()
        timing_writer = csv.DictWriter(
            timing_fh, fieldnames=["template", "variant", "arm", "seconds"], lineterminator="\n"
        )
        timing_writer.writeheader()

        def emit(row: RunRow, seconds: float) -> None:
            rows.append(row)
            row_writer.writerow(row.to_csv_dict())
            rows_fh.flush()
            timing_writer.writerow(
                {
                    "template": row.template,
                    "variant": row.variant,
                    "arm": row.arm,
                    "seconds": f"{seconds:.3f}",
                }
            )

        for manifest in spec.templates:
            name = Path(manifest).parent.name
            for variant in range(spec.variants_per_template):
                started = time.monotonic()
                try:
                    doc = load_project(manifest, id_seed=spec.seed)
                    scenario = ScriptedScenario.load(Path(manifest).parent / "scenario.json")
                    gateway = Gateway(
                        ScriptedProvider(scenario), max_calls=max_calls, clock=LogicalClock()
                    )
                    result = run_variant(
                        doc,
                        gateway,
                        sample_index=variant,
                        stage_config=stage_config,
                        repair_settings=None,  # arms handle repair below
                        tolerances=tolerances,
                    )
                except Exception as exc:
                    for settings in spec.arms:
                        emit(
                            RunRow(
                                template=name,
                                variant=variant,
                                arm=_arm_name(settings),
                                k=settings.k,
                                seed=spec.seed,
                                synthesis_error_free=False,
                                n_position_bugs=0,
                                n_scale_bugs=0,
                                n_opacity_bugs=0,
                                n_bugged_elements=0,
                                run_solved=False,
                                error=f"{type(exc).__name__}: {exc}",
                            ),
                            time.monotonic() - started,
                        )
                    continue
                for settings in spec.arms:
                    arm_started = time.monotonic()
                    outcome = None
                    if result.bugs_before_repair:
                        arm_gateway = Gateway(
                            ScriptedProvider(scenario), max_calls=max_calls, clock=LogicalClock()
                        )
                        outcome = repair(
                            result.program,
                            doc,
                            settings,
                            arm_gateway,
                            result.env,
                            stage_config,
                        )
                    emit(
                        row_from_outcome(
                            name, variant, settings, spec.seed, result.bugs_before_repair, outcome
                        ),
                        time.monotonic() - arm_started,
                    )

    config = {
        "templates": [Path(m).parent.name for m in spec.templates],
        "variants_per_template": spec.variants_per_template,
        "arms": [
            {"arm": _arm_name(s), "k": s.k, "merge_mode": s.merge_mode} for s in spec.arms
        ],
        "seed": spec.seed,
        "model": stage_config.model,
        "tolerances": {
            "position": tolerances.eps_pos,
            "size": tolerances.eps_size,
            "opacity": tolerances.eps_opacity,
        },
    }
    report = summarize(rows, config)
    (out_dir / "report.md").write_text(report.to_markdown(), encoding="utf-8")
    return report


def load_rows(path: Path) -> list[RunRow]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return [RunRow.from_csv_dict(d) for d in csv.DictReader(fh)]
