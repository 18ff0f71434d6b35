"""Forge the full thought-action example set without any remote calls.

Builds the 42 deterministic prompt packs (7 families x 3 strategies x 2
ask variants), sends them through the offline rule backend, and shows
what lands in the content-addressed store: the prompt a backend sees and
the finished example an agent will read.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from epiplan.forge import (
    ExampleStore,
    RuleBackend,
    default_packs,
    forge_all,
    render_example,
)


def main() -> None:
    packs = default_packs()
    print(f"{len(packs)} prompt packs to forge")
    pack = next(
        p for p in packs
        if p.scenario.family == "near" and p.strategy == "L"
        and p.variant == "plus_ask"
    )
    print()
    print("=== prompt sent to the backend (near / L / plus_ask) ===")
    print(pack.text())
    print()

    store = ExampleStore(Path(tempfile.mkdtemp()) / "examples")
    report = forge_all(packs, RuleBackend(), store)
    print(f"forged {len(report.written)}, skipped {len(report.skipped)}")

    report = forge_all(packs, RuleBackend(), store)
    print(f"second pass: forged {len(report.written)}, "
          f"skipped {len(report.skipped)} (store is idempotent)")
    print()

    example = store.find(family="near", strategy="L", variant="plus_ask")[0]
    print("=== stored example, rendered for an agent prompt ===")
    print(render_example(example))


if __name__ == "__main__":
    main()
