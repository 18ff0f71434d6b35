"""Leave-one-environment-out evaluation and the three result tables.

Each plan row is an example type (strategy and ask-variant), the bare
"No Examples" baseline, or the "Planner" reference. Cells are row by
held-out family; every cell runs a fixed number of trials whose logs land
under results/<plan-hash>/<cell>/<trial>.json, so an interrupted run
resumes without repeating work.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean

from .forge import ExampleStore, MissingFamily, render_examples, select_examples
from .runtime import (
    Limits,
    PlannerOracle,
    Policy,
    RandomPolicy,
    RemoteLLM,
    ScriptedPolicy,
    TrialLog,
    greedy_script,
    load_trial,
    run_trial,
    save_trial,
)
from .scenarios import DEMAND_TAGS, DISPLAY_NAMES, FAMILIES, build_scenario
from .world import MINUS_ASK, PLUS_ASK, WorldError

# Families in the columns' printed order.
COLUMN_FAMILIES = ("persp", "far", "hidd", "not", "dist", "base", "near")

CAPTION_FIRST_TAKE = "First Take on Correct Target (%)"
CAPTION_STEPS = "Average Number of Steps"
CAPTION_ASKS = "Average Number of Ask Actions"

STRATEGY_ROW_ORDER = (
    ("G", MINUS_ASK), ("G", PLUS_ASK),
    ("E", MINUS_ASK), ("E", PLUS_ASK),
    ("L", MINUS_ASK), ("L", PLUS_ASK),
)


class IncompleteCell(WorldError):
    """Aggregation was asked to run over a cell with missing trials."""


@dataclass(frozen=True)
class PlanRow:
    label: str
    slug: str
    kind: str                         # "example", "no-examples", or "planner"
    strategy: str | None = None
    variant: str | None = None


def _row_label(strategy: str, variant: str) -> str:
    sign = "+" if variant == PLUS_ASK else "-"
    return f"{strategy}-type{sign}ask"


def _row_slug(strategy: str, variant: str) -> str:
    return f"{strategy}_{variant}"


@dataclass(frozen=True)
class ExperimentPlan:
    families: tuple[str, ...] = FAMILIES
    trials: int = 5
    seed: int = 0
    policy: str = "oracle"            # acting policy for non-planner rows
    max_steps: int = 12
    include_examples: bool = True
    include_no_examples: bool = True
    include_planner: bool = True

    def rows(self) -> tuple[PlanRow, ...]:
        out: list[PlanRow] = []
        if self.include_examples:
            for strategy, variant in STRATEGY_ROW_ORDER:
                out.append(PlanRow(
                    label=_row_label(strategy, variant),
                    slug=_row_slug(strategy, variant),
                    kind="example",
                    strategy=strategy,
                    variant=variant,
                ))
        if self.include_no_examples:
            out.append(PlanRow(label="No Examples", slug="no_examples",
                               kind="no-examples"))
        if self.include_planner:
            out.append(PlanRow(label="Planner", slug="planner", kind="planner"))
        return tuple(out)

    def cells(self) -> tuple[tuple[PlanRow, str], ...]:
        return tuple(
            (row, family) for row in self.rows() for family in self.families
        )

    def to_dict(self) -> dict:
        return {
            "families": list(self.families),
            "trials": self.trials,
            "seed": self.seed,
            "policy": self.policy,
            "max_steps": self.max_steps,
            "include_examples": self.include_examples,
            "include_no_examples": self.include_no_examples,
            "include_planner": self.include_planner,
        }

    def plan_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.blake2b(blob, digest_size=8).hexdigest()


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    logs: dict[tuple[str, str], list[TrialLog]] = field(default_factory=dict)

    def all_logs(self) -> list[TrialLog]:
        return [log for cell in self.logs.values() for log in cell]


def _trial_seed(plan: ExperimentPlan, cell_slug: str, index: int) -> int:
    blob = f"{plan.seed}:{cell_slug}:{index}".encode()
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "big")


def _make_policy(
    plan: ExperimentPlan, row: PlanRow, family: str, index: int, backend
) -> Policy:
    scenario = build_scenario(family)
    if row.kind == "planner":
        return PlannerOracle(scenario)
    if plan.policy == "oracle":
        return PlannerOracle(scenario)
    if plan.policy == "greedy":
        return ScriptedPolicy(greedy_script(scenario), label="Greedy")
    if plan.policy == "random":
        slug = f"{row.slug}__{family}"
        return RandomPolicy(seed=_trial_seed(plan, slug, index))
    if plan.policy == "remote":
        if backend is None:
            raise WorldError("remote policy needs a backend")
        return RemoteLLM(backend, label="LLM")
    raise WorldError(f"unknown policy {plan.policy!r}")


def _examples_text(row: PlanRow, family: str, store: ExampleStore | None) -> str:
    if row.kind != "example":
        return ""
    if store is None:
        raise MissingFamily("example rows need a populated example store")
    selected = select_examples(store, held_out=family,
                               strategy=row.strategy, variant=row.variant)
    return render_examples(selected)


def run_experiment(
    plan: ExperimentPlan,
    results_root: Path,
    store: ExampleStore | None = None,
    backend=None,
    jobs: int = 1,
) -> ExperimentResult:
    """Run (or resume) every cell; completed trial files are never redone."""
    root = Path(results_root) / plan.plan_hash()
    root.mkdir(parents=True, exist_ok=True)
    result = ExperimentResult(plan=plan)

    def run_cell(cell: tuple[PlanRow, str]) -> tuple[tuple[str, str], list[TrialLog]]:
        row, family = cell
        cell_dir = root / f"{row.slug}__{family}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        examples_text = _examples_text(row, family, store)
        scenario = build_scenario(family)
        logs = []
        for index in range(plan.trials):
            path = cell_dir / f"{index:02d}.json"
            if path.exists():
                logs.append(load_trial(path))
                continue
            policy = _make_policy(plan, row, family, index, backend)
            log = run_trial(
                scenario,
                policy,
                limits=Limits(max_steps=plan.max_steps),
                examples_text=examples_text,
                strategy=row.strategy,
                variant=row.variant,
            )
            save_trial(log, path)
            logs.append(log)
        return (row.label, family), logs

    cells = plan.cells()
    if jobs <= 1:
        pairs = [run_cell(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(run_cell, cells))
    result.logs = dict(pairs)
    return result


def load_experiment(plan: ExperimentPlan, results_root: Path) -> ExperimentResult:
    """Rebuild a result set from the files a previous run left behind."""
    root = Path(results_root) / plan.plan_hash()
    result = ExperimentResult(plan=plan)
    for row, family in plan.cells():
        cell_dir = root / f"{row.slug}__{family}"
        logs = []
        if cell_dir.is_dir():
            logs = [load_trial(p) for p in sorted(cell_dir.glob("*.json"))]
        result.logs[(row.label, family)] = logs
    return result


@dataclass(frozen=True)
class MetricsTable:
    caption: str
    columns: tuple[str, ...]          # display names, AVG last when present
    rows: tuple[tuple[str, tuple[float, ...]], ...]

    @property
    def has_avg(self) -> bool:
        return bool(self.columns) and self.columns[-1] == "AVG"


def _cell_values(
    result: ExperimentResult, row: PlanRow, family: str
) -> list[TrialLog]:
    logs = result.logs.get((row.label, family), [])
    if len(logs) != result.plan.trials:
        raise IncompleteCell(
            f"cell {row.label!r} / {family}: "
            f"{len(logs)} of {result.plan.trials} trials"
        )
    return logs


def _table(
    result: ExperimentResult,
    caption: str,
    metric,
    rows: tuple[PlanRow, ...],
    with_avg: bool,
) -> MetricsTable:
    columns = tuple(DISPLAY_NAMES[f] for f in COLUMN_FAMILIES)
    if with_avg:
        columns += ("AVG",)
    body = []
    for row in rows:
        values = [
            mean(metric(log) for log in _cell_values(result, row, family))
            for family in COLUMN_FAMILIES
        ]
        if with_avg:
            values.append(round(mean(values), 2))
        body.append((row.label, tuple(values)))
    return MetricsTable(caption=caption, columns=columns, rows=tuple(body))


def aggregate(result: ExperimentResult) -> tuple[MetricsTable, MetricsTable, MetricsTable]:
    """The first-take, steps, and asks tables for a completed result set.

    The first-take table carries no planner row and no AVG column; the
    other two carry both.
    """
    rows = result.plan.rows()
    non_planner = tuple(r for r in rows if r.kind != "planner")
    first = _table(
        result,
        CAPTION_FIRST_TAKE,
        lambda log: 100.0 if log.outcome == "success" else 0.0,
        non_planner,
        with_avg=False,
    )
    steps = _table(result, CAPTION_STEPS, lambda log: log.n_steps, rows,
                   with_avg=True)
    asks = _table(result, CAPTION_ASKS, lambda log: log.n_asks, rows,
                  with_avg=True)
    return first, steps, asks


def _fmt(value: float) -> str:
    return f"{round(value, 2):g}"


_GROUPS: dict[str, tuple[str, ...]] = {}
for _family, _tags in DEMAND_TAGS.items():
    for _tag in _tags:
        _GROUPS[_tag] = _GROUPS.get(_tag, ()) + (_family,)


def render_markdown(table: MetricsTable, groups: bool = False) -> str:
    lines = [f"# {table.caption}", ""]
    lines.append("| Example type | " + " | ".join(table.columns) + " |")
    lines.append("|" + " --- |" * (len(table.columns) + 1))
    for label, values in table.rows:
        lines.append(
            f"| {label} | " + " | ".join(_fmt(v) for v in values) + " |"
        )
    if groups:
        lines.extend(["", "## Demand groups", ""])
        lines.append("| Example type | " + " | ".join(sorted(_GROUPS)) + " |")
        lines.append("|" + " --- |" * (len(_GROUPS) + 1))
        for label, values in table.rows:
            by_family = dict(zip(COLUMN_FAMILIES, values))
            cells = []
            for group in sorted(_GROUPS):
                members = _GROUPS[group]
                cells.append(_fmt(mean(by_family[f] for f in members)))
            lines.append(f"| {label} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_csv(table: MetricsTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["Example type", *table.columns])
    for label, values in table.rows:
        writer.writerow([label, *[repr(float(v)) for v in values]])
    return buffer.getvalue()


def parse_csv(text: str, caption: str) -> MetricsTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    columns = tuple(header[1:])
    rows = tuple(
        (row[0], tuple(float(v) for v in row[1:])) for row in reader if row
    )
    return MetricsTable(caption=caption, columns=columns, rows=rows)


def render_report(
    tables: tuple[MetricsTable, MetricsTable, MetricsTable],
    fmt: str = "markdown",
    groups: bool = False,
) -> dict[str, str]:
    """Named documents for the three tables; stable bytes for stable inputs."""
    names = ("first_take", "steps", "asks")
    out: dict[str, str] = {}
    for name, table in zip(names, tables):
        if fmt == "markdown":
            out[f"{name}.md"] = render_markdown(table, groups=groups)
        elif fmt == "csv":
            out[f"{name}.csv"] = render_csv(table)
        else:
            raise WorldError(f"unknown report format {fmt!r}")
    return out
