"""Command-line entrypoint wiring the pipeline stages together.

Verbs: scenarios, plan, extract, forge, run, eval, report. Every verb that
writes output also drops a run_config.json recording the resolved arguments.
Exit codes: 0 success, 1 operational failure, 2 bad usage or configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .pddl.parser import PddlError
from .scenarios import FAMILIES, build_scenario, validate_scenario
from .world import (
    MINUS_ASK,
    PLUS_ASK,
    Scenario,
    WorldError,
    load_scenario,
    save_scenario,
)


class UsageError(Exception):
    """Bad arguments or unreadable configuration; maps to exit code 2."""


def _resolve_scenario(value: str) -> Scenario:
    if value in FAMILIES:
        return build_scenario(value)
    path = Path(value)
    if not path.exists():
        raise UsageError(
            f"--scenario wants a family ({', '.join(FAMILIES)}) or a JSON file; "
            f"got {value!r}"
        )
    try:
        scenario = load_scenario(path)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"unreadable scenario file {value}: {exc}") from exc
    validate_scenario(scenario)
    return scenario


def _variant(args: argparse.Namespace) -> str:
    return PLUS_ASK if args.ask else MINUS_ASK


def _stamp_config(out_dir: Path, command: str, resolved: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "config": resolved,
    }
    (out_dir / "run_config.json").write_text(json.dumps(payload, indent=2) + "\n")


def _make_backend(args: argparse.Namespace):
    from .forge import HttpBackend, RuleBackend, load_backend_config

    if args.backend == "rule":
        return RuleBackend()
    if not args.backend_config:
        raise UsageError("--backend http needs --backend-config FILE")
    try:
        config = load_backend_config(Path(args.backend_config))
    except FileNotFoundError as exc:
        raise UsageError(f"backend config not found: {args.backend_config}") from exc
    except (json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"corrupt backend config: {exc}") from exc
    return HttpBackend(config)


def cmd_scenarios(args: argparse.Namespace) -> int:
    from .pddl.emit import emit_scenario, file_names

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for family in FAMILIES:
        scenario = build_scenario(family)
        validate_scenario(scenario)
        save_scenario(scenario, out / f"{family}.scenario.json")
        count += 1
        for variant in (PLUS_ASK, MINUS_ASK):
            domain_text, problem_text = emit_scenario(scenario, variant)
            domain_name, problem_name = file_names(family, variant)
            (out / domain_name).write_text(domain_text)
            (out / problem_name).write_text(problem_text)
            count += 2
    _stamp_config(out, "scenarios", {"out": str(out)})
    print(f"wrote {count} files to {out}")
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    from .pddl.emit import grounded_task
    from .search import astar, export_tree

    scenario = _resolve_scenario(args.scenario)
    variant = _variant(args)
    plan, tree = astar(grounded_task(scenario, variant))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tree_path = out / f"{scenario.family}_{variant}.tree.json"
    tree_path.write_text(export_tree(tree))
    _stamp_config(out, "plan", {
        "scenario": args.scenario, "ask": args.ask, "out": str(out),
    })
    if plan is None:
        print("no plan")
        return 1
    for step in plan:
        print(step)
    print(f"plan length {len(plan)}; tree written to {tree_path}")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    from .extraction import (
        extract_e,
        extract_g,
        extract_l,
        save_records,
        save_trajectories,
    )
    from .pddl.emit import grounded_task
    from .search import astar

    scenario = _resolve_scenario(args.scenario)
    variant = _variant(args)
    _, tree = astar(grounded_task(scenario, variant))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = f"{scenario.family}_{variant}_{args.kind}.json"
    path = out / name
    if args.kind == "G":
        trajectories = [extract_g(tree, scenario, variant)]
        save_trajectories(trajectories, "G", scenario.family, variant, path)
        count = len(trajectories)
    elif args.kind == "E":
        trajectories = extract_e(tree, scenario, variant)
        save_trajectories(trajectories, "E", scenario.family, variant, path)
        count = len(trajectories)
    else:
        records = extract_l(tree, scenario, variant)
        save_records(records, scenario.family, variant, path)
        count = len(records)
    _stamp_config(out, "extract", {
        "scenario": args.scenario, "ask": args.ask,
        "kind": args.kind, "out": str(out),
    })
    print(f"{count} {args.kind}-type payloads written to {path}")
    return 0


def cmd_forge(args: argparse.Namespace) -> int:
    from .forge import ExampleStore, default_packs, forge_all

    backend = _make_backend(args)
    store = ExampleStore(Path(args.out))
    report = forge_all(default_packs(), backend, store, jobs=args.jobs)
    _stamp_config(Path(args.out), "forge", {
        "backend": args.backend, "backend_config": args.backend_config,
        "jobs": args.jobs, "out": args.out,
    })
    print(
        f"forged {len(report.written)} examples, "
        f"skipped {len(report.skipped)} already present, store {args.out}"
    )
    return 0


def _make_policy(args: argparse.Namespace, scenario: Scenario):
    from .runtime import (
        PlannerOracle,
        RandomPolicy,
        RemoteLLM,
        ScriptedPolicy,
        greedy_script,
    )

    if args.policy == "oracle":
        return PlannerOracle(scenario)
    if args.policy == "greedy":
        return ScriptedPolicy(greedy_script(scenario), label="Greedy")
    if args.policy == "random":
        return RandomPolicy(seed=args.seed)
    return RemoteLLM(_make_backend(args), label="LLM")


def cmd_run(args: argparse.Namespace) -> int:
    from .runtime import Limits, run_trial, save_trial

    scenario = _resolve_scenario(args.scenario)
    policy = _make_policy(args, scenario)
    log = run_trial(scenario, policy, limits=Limits(max_steps=args.max_steps))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"trial_{scenario.family}_{policy.label.lower()}.json"
    save_trial(log, path)
    _stamp_config(out, "run", {
        "scenario": args.scenario, "policy": args.policy,
        "seed": args.seed, "max_steps": args.max_steps, "out": str(out),
    })
    print(
        f"{scenario.family}: {log.outcome} "
        f"(first take {log.first_take or 'none'}, {log.n_steps} steps, "
        f"{log.n_asks} asks); log at {path}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from .forge import ExampleStore
    from .harness import ExperimentPlan, run_experiment

    families = (args.held_out,) if args.held_out else FAMILIES
    plan = ExperimentPlan(
        families=families,
        trials=args.trials,
        seed=args.seed,
        policy=args.policy,
        include_examples=not args.no_example_rows,
    )
    store = None
    if not args.no_example_rows:
        if not args.store:
            raise UsageError("eval with example rows needs --store DIR")
        store = ExampleStore(Path(args.store))
    backend = _make_backend(args) if args.policy == "remote" else None
    result = run_experiment(
        plan, Path(args.out), store=store, backend=backend, jobs=args.jobs
    )
    run_dir = Path(args.out) / plan.plan_hash()
    _stamp_config(run_dir, "eval", {
        "plan": plan.to_dict(), "store": args.store, "out": args.out,
    })
    print(
        f"{len(result.all_logs())} trial logs under {run_dir} "
        f"(plan hash {plan.plan_hash()})"
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .harness import ExperimentPlan, aggregate, load_experiment, render_report

    results_root = Path(args.results)
    config_path = None
    if (results_root / "run_config.json").exists():
        config_path = results_root / "run_config.json"
        results_root = results_root.parent
    else:
        candidates = sorted(results_root.glob("*/run_config.json"))
        if len(candidates) == 1:
            config_path = candidates[0]
        elif len(candidates) > 1:
            raise UsageError(
                f"{results_root} holds several runs; point --results at one "
                "of " + ", ".join(str(c.parent) for c in candidates)
            )
    if config_path is None:
        raise UsageError(f"no run_config.json under {args.results}")
    try:
        stamped = json.loads(config_path.read_text())
        fields = dict(stamped["config"]["plan"])
        fields["families"] = tuple(fields["families"])
        plan = ExperimentPlan(**fields)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"corrupt run config {config_path}: {exc}") from exc
    result = load_experiment(plan, results_root)
    tables = aggregate(result)
    docs = render_report(tables, fmt=args.format, groups=args.groups)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(docs.items()):
        (out / name).write_text(text)
        print(f"wrote {out / name}")
    _stamp_config(out, "report", {
        "results": args.results, "format": args.format,
        "groups": args.groups, "out": str(out),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epiplan",
        description=(
            "Director/Matcher reference tasks: scenario generation, optimal "
            "planning with reasoning trees, trajectory extraction, "
            "thought-action example forging, agent trials, and evaluation."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--scenario", required=True,
            help="family id (" + ", ".join(FAMILIES) + ") or scenario JSON path",
        )

    def ask_arg(p: argparse.ArgumentParser) -> None:
        group = p.add_mutually_exclusive_group()
        group.add_argument(
            "--ask", dest="ask", action="store_true", default=True,
            help="use the asking-enabled task variant (default)",
        )
        group.add_argument(
            "--no-ask", dest="ask", action="store_false",
            help="use the variant without the ask action",
        )

    def backend_args(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--backend", choices=("rule", "http"), default="rule",
            help="completion backend: offline rule-based or remote HTTP",
        )
        p.add_argument(
            "--backend-config", default=None,
            help="JSON config for the HTTP backend (endpoint, model, key env)",
        )

    p = sub.add_parser("scenarios", help="write the validated scenario and task files")
    p.add_argument("--out", default="out/scenarios", help="output directory")
    p.set_defaults(fn=cmd_scenarios)

    p = sub.add_parser("plan", help="solve one task and export its reasoning tree")
    scenario_arg(p)
    ask_arg(p)
    p.add_argument("--out", default="out/plan", help="output directory")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("extract", help="pull G/E/L payloads from a reasoning tree")
    scenario_arg(p)
    ask_arg(p)
    p.add_argument("--kind", choices=("G", "E", "L"), required=True,
                   help="extraction strategy")
    p.add_argument("--out", default="out/extract", help="output directory")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("forge", help="forge thought-action examples into a store")
    backend_args(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel backend requests")
    p.add_argument("--out", default="out/examples", help="example store directory")
    p.set_defaults(fn=cmd_forge)

    p = sub.add_parser("run", help="run one interactive trial")
    scenario_arg(p)
    p.add_argument("--policy", choices=("oracle", "greedy", "random", "remote"),
                   default="oracle", help="acting policy")
    p.add_argument("--seed", type=int, default=0, help="seed for random policies")
    p.add_argument("--max-steps", type=int, default=12, help="trial step budget")
    backend_args(p)
    p.add_argument("--out", default="out/trials", help="output directory")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("eval", help="run the leave-one-family-out experiment")
    p.add_argument("--policy", choices=("oracle", "greedy", "random", "remote"),
                   default="oracle", help="acting policy for non-planner rows")
    p.add_argument("--trials", type=int, default=5, help="trials per cell")
    p.add_argument("--seed", type=int, default=0, help="experiment seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel cells")
    p.add_argument("--store", default=None, help="example store directory")
    p.add_argument("--held-out", default=None, choices=FAMILIES,
                   help="evaluate only this held-out family (default: all seven)")
    p.add_argument("--no-example-rows", action="store_true",
                   help="run only the No Examples and Planner rows")
    backend_args(p)
    p.add_argument("--out", default="out/results", help="results root directory")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="aggregate results into the three tables")
    p.add_argument("--results", required=True,
                   help="results root or one run directory under it")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown",
                   help="report format")
    p.add_argument("--groups", action="store_true",
                   help="append the demand-group summary")
    p.add_argument("--out", default="out/report", help="output directory")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (WorldError, PddlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
