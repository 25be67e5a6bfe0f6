#!/usr/bin/env python3
"""Run both scripted repair arms (with and without image context) end to end and
print the solve-rate-vs-k table plus the attempts-per-error histogram."""

from __future__ import annotations

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from logoreveal import evalrun as ev
from logoreveal.fixtures import passk_doc, passk_pack, passk_program
from logoreveal.gateway import Gateway, ScriptedProvider
from logoreveal.repair import repair


def run_arm(arm: str) -> list[ev.RunRow]:
    doc = passk_doc()
    program = passk_program()
    rows = []
    for i, run in enumerate(passk_pack(arm)):
        gateway = Gateway(ScriptedProvider(run.scenario), max_calls=50)
        outcome = repair(program, doc, run.settings, gateway)
        rows.append(ev.row_from_outcome("passk", i, run.settings, 0, outcome.initial_bugs, outcome))
    return rows


def main() -> None:
    started = time.monotonic()
    rows = run_arm("imgs") + run_arm("noimgs")
    report = ev.summarize(rows, {"runs_per_arm": 100, "k": 4})
    print(report.to_markdown())
    print(f"(completed in {time.monotonic() - started:.1f}s)")


if __name__ == "__main__":
    main()
