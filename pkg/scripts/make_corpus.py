#!/usr/bin/env python3
"""Regenerate the shipped desk corpus under corpus/ (5 templates: project.json,
layer PNGs, scripted scenario). Output is byte-stable; rerunning is a no-op diff."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from logoreveal.fixtures import write_desk_corpus


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "corpus"
    manifests = write_desk_corpus(out)
    for manifest in manifests:
        print(f"wrote {manifest.parent.name}: {manifest}")


if __name__ == "__main__":
    main()
