"""The three ways to mine a reasoning tree for agent examples.

Runs the planner on the distractor environment (the Matcher initially
sees a matching but wrong item) and prints what each extraction strategy
pulls out: the goal path (G), the paths to informative discoveries (E),
and the local decision contrasts (L).
"""

from __future__ import annotations

from epiplan.extraction import extract_e, extract_g, extract_l
from epiplan.pddl.emit import grounded_task
from epiplan.scenarios import build_scenario
from epiplan.search import astar
from epiplan.world import PLUS_ASK


def describe_delta(delta) -> str:
    bits = []
    if delta.new_items:
        bits.append("now sees " + ", ".join(delta.new_items))
    if delta.revealed_containers:
        bits.append("opened " + ", ".join(delta.revealed_containers))
    if delta.knowledge:
        bits.append("learned " + ", ".join(delta.knowledge))
    return "; ".join(bits) if bits else "no new information"


def main() -> None:
    scenario = build_scenario("dist")
    variant = PLUS_ASK
    _, tree = astar(grounded_task(scenario, variant))
    print(f'Director says: "{scenario.director_utterance}"')
    print(f"Matcher starts seeing the wrong match; target is {scenario.target_id}.")
    print()

    print("G: the optimal goal path")
    for step in extract_g(tree, scenario, variant).steps:
        print(f"  {step.label:<18} -> {describe_delta(step.delta)}")
    print()

    trajectories = extract_e(tree, scenario, variant)
    print(f"E: {len(trajectories)} maximal paths ending at an informative state")
    for trajectory in trajectories:
        labels = " , ".join(s.label for s in trajectory.steps)
        print(f"  node {trajectory.terminal_node}: {labels}")
    print()

    records = extract_l(tree, scenario, variant)
    print(f"L: {len(records)} decision points where siblings competed")
    for record in records:
        print(f"  at node {record.node} ({record.state_summary})")
        print(f"    chose {record.chosen.label} (f={record.chosen.f})")
        for alt in record.alternatives:
            score = "pruned" if alt.f is None else f"f={alt.f}"
            print(f"    over  {alt.label} ({score}, {alt.kind})")


if __name__ == "__main__":
    main()
