"""Solve one task and look inside the planner's head.

Grounds the far-distractor environment in its asking-enabled variant,
runs A* with the delete-relaxation heuristic, and prints the optimal
plan next to the reasoning tree it left behind: every evaluated state,
the expansion order, and the branches that died or got pruned.
"""

from __future__ import annotations

from collections import Counter

from epiplan.pddl.emit import grounded_task
from epiplan.scenarios import build_scenario
from epiplan.search import astar, export_tree
from epiplan.world import PLUS_ASK


def main() -> None:
    scenario = build_scenario("far")
    task = grounded_task(scenario, PLUS_ASK)
    print(f"Grounded task: {len(task.facts)} facts, {len(task.actions)} actions")
    print(f'Director says: "{scenario.director_utterance}"')
    print()

    plan, tree = astar(task)
    print("Optimal plan:")
    for label in plan:
        print(f"  {label}")
    print()

    statuses = Counter(node.status for node in tree.nodes)
    print(f"Reasoning tree: {len(tree.nodes)} nodes "
          f"({', '.join(f'{k} {v}' for k, v in sorted(statuses.items()))})")
    dead = [n for n in tree.nodes if n.dead]
    print(f"Dead branches (heuristic says unreachable goal): {len(dead)}")
    print()

    print("Path through the tree, with the scores A* saw:")
    for node_id in tree.optimal_path:
        node = tree.node(node_id)
        print(f"  node {node.id:>3}  g={node.g} h={node.h} f={node.f}  "
              f"via {node.action}")
    print()

    export = export_tree(tree)
    lines = export.count("\n")
    print(f"JSON-lines export: {lines} lines, {len(export)} bytes "
          "(nodes first, then edges; replayable without the task)")


if __name__ == "__main__":
    main()
