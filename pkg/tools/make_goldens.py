#!/usr/bin/env python3
"""Freeze the fixture-sweep golden files.

Runs the full committed-model sweep and writes the four report renderings
to tests/fixtures/goldens/.  Regenerate only after verifying a deliberate
behavior change; the acceptance suite compares byte for byte.
"""

from pathlib import Path

from bespoke.harness import (Evaluator, render_csv, render_json,
                             render_scatter_csv, render_table, sweep)

ROOT = Path(__file__).resolve().parent.parent
MODELS = sorted((ROOT / "tests/fixtures/models").glob("*.json"))
GOLDENS = ROOT / "tests/fixtures/goldens"


def main():
    result = sweep([str(p) for p in MODELS], evaluator=Evaluator())
    assert not result.errors, result.errors
    GOLDENS.mkdir(parents=True, exist_ok=True)
    outputs = {
        "report.csv": render_csv(result.reports),
        "report.json": render_json(result),
        "report.txt": render_table(result.reports),
        "scatter.csv": render_scatter_csv(result.reports),
    }
    for name, payload in outputs.items():
        (GOLDENS / name).write_text(payload)
        print(f"wrote {GOLDENS / name} ({len(payload)} bytes)")
    print(f"{len(result.reports)} reports frozen")


if __name__ == "__main__":
    main()
