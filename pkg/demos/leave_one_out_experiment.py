"""The whole evaluation protocol, end to end, on the desk.

Forges an offline example store, runs the leave-one-family-out
experiment with the planner oracle acting (two trials per cell), and
prints the three aggregate tables. Results land in a temp directory in
the resumable on-disk layout, so rerunning the same plan is free.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from epiplan.forge import ExampleStore, RuleBackend, default_packs, forge_all
from epiplan.harness import ExperimentPlan, aggregate, render_markdown, run_experiment


def main() -> None:
    root = Path(tempfile.mkdtemp())
    store = ExampleStore(root / "examples")
    forge_all(default_packs(), RuleBackend(), store)

    plan = ExperimentPlan(trials=2)
    result = run_experiment(plan, root / "results", store=store, jobs=4)
    print(f"{len(result.all_logs())} trial logs under "
          f"{root / 'results' / plan.plan_hash()}")
    print()

    first, steps, asks = aggregate(result)
    print(render_markdown(first))
    print(render_markdown(steps, groups=True))
    print(render_markdown(asks))


if __name__ == "__main__":
    main()
