#!/usr/bin/env python3
"""Verify the injected-fault corpus (125 synthesis results, 42 position and 26
scale faults) and print the error census the bookkeeping derives from it."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from logoreveal import evalrun as ev
from logoreveal.fixtures import fault_pack


def main() -> None:
    doc, programs = fault_pack()
    rows = ev.verify_only_rows(doc, programs)
    report = ev.summarize(rows, {"corpus": "injected faults", "runs": len(rows)})
    print(report.to_markdown())


if __name__ == "__main__":
    main()
