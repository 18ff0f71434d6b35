"""Three trajectory-extraction strategies over a reasoning tree.

G follows the optimal path to the goal. E returns root paths to informative
nodes, where a node is informative relative to its parent when the Matcher
gains sight of a never-before-seen item, a container's contents get revealed,
or a knowledge fact is added. L contrasts, for every expanded node with at
least two children, the lowest-f child against its siblings, including dead
and duplicate-pruned ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .pddl.emit import core_action_of
from .search import DUPLICATE, EXPANDED, ReasoningTree, SearchNode
from .world import (
    MATCHER,
    Action,
    Open,
    Scenario,
    WorldError,
    WorldState,
    action_from_dict,
    action_to_dict,
    apply,
    initial_state,
    is_goal,
    observation_of,
)

TRAJECTORY_SCHEMA = "epiplan.trajectory/1"
RECORDS_SCHEMA = "epiplan.decision-records/1"


class NoGoal(WorldError):
    """G-type extraction needs a tree with an optimal path."""


@dataclass(frozen=True)
class ObservationDelta:
    """What the Matcher's view gained by taking one action."""

    new_items: tuple[str, ...]        # items never visible before this step
    revealed_containers: tuple[str, ...]
    knowledge: tuple[str, ...]        # knowledge facts added (rendered)

    @property
    def empty(self) -> bool:
        return not (self.new_items or self.revealed_containers or self.knowledge)


@dataclass(frozen=True)
class TrajectoryStep:
    label: str                        # canonical action text, parseable back
    action: Action
    state_summary: str                # Matcher-view summary before the action
    delta: ObservationDelta


@dataclass(frozen=True)
class Trajectory:
    kind: str                         # "G" or "E"
    family: str
    variant: str
    steps: tuple[TrajectoryStep, ...]
    terminal: str                     # "goal" or "informative-node"
    terminal_node: int


@dataclass(frozen=True)
class Alternative:
    label: str
    action: Action
    f: float | None                   # None for duplicate-pruned siblings
    kind: str                         # "live", "dead", or "duplicate"


@dataclass(frozen=True)
class DecisionRecord:
    family: str
    variant: str
    node: int
    state_summary: str
    arrived_by: str | None            # label of the edge into this node
    chosen: Alternative
    alternatives: tuple[Alternative, ...]


def _render_action(action: Action, scenario: Scenario) -> str:
    # Local import keeps module load order simple; runtime imports extraction.
    from .runtime import render_action

    return render_action(action, scenario)


def _state_summary(state: WorldState, scenario: Scenario) -> str:
    view = observation_of(state, MATCHER, scenario)
    place = scenario.locations[state.matcher_at]
    holding = f"holding the {state.holding}" if state.holding else "hands free"
    visible = sorted({iid for iid, _ in view.surface_items}
                     | {iid for iid, _ in view.container_items})
    parts = [f"at the {place}", holding]
    parts.append("sees " + (", ".join(visible) if visible else "no items"))
    if state.knows_target:
        parts.append("knows which item was meant")
    return "; ".join(parts)


def _visible_items(state: WorldState, scenario: Scenario) -> frozenset[str]:
    view = observation_of(state, MATCHER, scenario)
    items = {iid for iid, _ in view.surface_items}
    items |= {iid for iid, _ in view.container_items}
    if state.holding is not None:
        items.add(state.holding)
    return frozenset(items)


def _delta(
    before: WorldState,
    after: WorldState,
    action: Action,
    scenario: Scenario,
    seen_before: frozenset[str],
) -> ObservationDelta:
    new_items = tuple(sorted(_visible_items(after, scenario) - seen_before))
    revealed = ()
    if isinstance(action, Open):
        view = observation_of(after, MATCHER, scenario)
        if any(cid == action.container for cid, _, _ in view.containers):
            revealed = (action.container,)
    knowledge = []
    if after.knows_target and not before.knows_target:
        knowledge.append("knows-target")
    for loc in sorted(after.revealed - before.revealed):
        knowledge.append(f"revealed:{scenario.locations[loc]}")
    return ObservationDelta(new_items, revealed, tuple(knowledge))


def _replay_path(
    path: list[SearchNode], scenario: Scenario
) -> tuple[list[TrajectoryStep], WorldState]:
    """Replay a root-anchored node path in the world, collecting steps."""
    state = initial_state(scenario)
    seen = _visible_items(state, scenario)
    steps: list[TrajectoryStep] = []
    for node in path[1:]:
        action = core_action_of(node.action, scenario)
        summary = _state_summary(state, scenario)
        after = apply(state, action, scenario)
        steps.append(TrajectoryStep(
            label=_render_action(action, scenario),
            action=action,
            state_summary=summary,
            delta=_delta(state, after, action, scenario, seen),
        ))
        state = after
        seen = seen | _visible_items(state, scenario)
    return steps, state


def extract_g(tree: ReasoningTree, scenario: Scenario, variant: str) -> Trajectory:
    """The optimal path, annotated with per-step observation deltas."""
    if tree.optimal_path is None:
        raise NoGoal("tree has no optimal path")
    path = tree.path_to(tree.optimal_path[-1]) if tree.optimal_path else [
        tree.node(tree.root)
    ]
    steps, final = _replay_path(path, scenario)
    if steps and not is_goal(final, scenario):
        raise NoGoal("optimal path replay did not reach the goal")
    return Trajectory(
        kind="G",
        family=scenario.family,
        variant=variant,
        steps=tuple(steps),
        terminal="goal",
        terminal_node=path[-1].id,
    )


def mark_informative(tree: ReasoningTree, scenario: Scenario) -> set[int]:
    """Mark retained nodes whose arrival gained the Matcher something.

    A node qualifies relative to its parent when a previously-unseen item
    became visible, a visible container's contents were revealed by an Open,
    or a knowledge fact was added. Duplicate-pruned leaves re-reach known
    states and are never marked. The result is stored on the tree.
    """
    marked: set[int] = set()
    init = initial_state(scenario)
    # Depth-first replay; seen sets accumulate along each root path.
    stack: list[tuple[int, WorldState, frozenset[str]]] = [
        (tree.root, init, _visible_items(init, scenario))
    ]
    children: dict[int, list[SearchNode]] = {}
    for node in tree.nodes:
        if node.parent is not None and node.status != DUPLICATE:
            children.setdefault(node.parent, []).append(node)
    while stack:
        node_id, state, seen = stack.pop()
        for child in children.get(node_id, ()):
            action = core_action_of(child.action, scenario)
            after = apply(state, action, scenario)
            if not _delta(state, after, action, scenario, seen).empty:
                marked.add(child.id)
            stack.append((child.id, after, seen | _visible_items(after, scenario)))
    tree.informative = marked
    return marked


def extract_e(
    tree: ReasoningTree,
    scenario: Scenario,
    variant: str,
    all_informative: bool = False,
) -> list[Trajectory]:
    """Root paths to informative nodes, ordered by node id.

    Prefix-duplicates are dropped by default: a path is emitted only for
    informative nodes without an informative strict descendant. Pass
    all_informative=True for one trajectory per informative node.
    """
    marked = tree.informative or mark_informative(tree, scenario)
    targets = sorted(marked)
    if not all_informative:
        targets = [n for n in targets if not _informative_below(tree, n, marked)]
    out = []
    for node_id in targets:
        path = tree.path_to(node_id)
        steps, _ = _replay_path(path, scenario)
        out.append(Trajectory(
            kind="E",
            family=scenario.family,
            variant=variant,
            steps=tuple(steps),
            terminal="informative-node",
            terminal_node=node_id,
        ))
    return out


def _informative_below(tree: ReasoningTree, node_id: int, marked: set[int]) -> bool:
    stack = [c.id for c in tree.retained_children(node_id)]
    while stack:
        cursor = stack.pop()
        if cursor in marked:
            return True
        stack.extend(c.id for c in tree.retained_children(cursor))
    return False


def extract_l(
    tree: ReasoningTree, scenario: Scenario, variant: str
) -> list[DecisionRecord]:
    """One decision contrast per expanded node with two or more children.

    The chosen child minimizes (f, generation order) among live siblings,
    which is exactly the child the engine would pop next from this frontier.
    Dead children appear as alternatives flagged dead, duplicate-pruned ones
    flagged duplicate (their f was never evaluated).
    """
    records: list[DecisionRecord] = []
    expanded = [n for n in tree.nodes if n.status == EXPANDED]
    expanded.sort(key=lambda n: n.expansion_order)
    for node in expanded:
        children = sorted(tree.children(node.id), key=lambda c: c.id)
        if len(children) < 2:
            continue
        live = [c for c in children if c.status != DUPLICATE and not c.dead]
        if not live:
            continue
        chosen_node = min(live, key=lambda c: (c.f, c.id))
        path = tree.path_to(node.id)
        steps, state = _replay_path(path, scenario)
        entries = []
        for child in children:
            action = core_action_of(child.action, scenario)
            if child.status == DUPLICATE:
                kind, f = "duplicate", None
            elif child.dead:
                kind, f = "dead", math.inf
            else:
                kind, f = "live", child.f
            entries.append((child, Alternative(
                label=_render_action(action, scenario),
                action=action,
                f=f,
                kind=kind,
            )))
        chosen = next(alt for child, alt in entries if child.id == chosen_node.id)
        alternatives = tuple(alt for child, alt in entries if child.id != chosen_node.id)
        records.append(DecisionRecord(
            family=scenario.family,
            variant=variant,
            node=node.id,
            state_summary=_state_summary(state, scenario),
            arrived_by=steps[-1].label if steps else None,
            chosen=chosen,
            alternatives=alternatives,
        ))
    return records


def _f_to_json(f: float | None):
    if f is None:
        return None
    return "inf" if math.isinf(f) else f


def _f_from_json(f):
    return math.inf if f == "inf" else f


def trajectory_to_dict(t: Trajectory) -> dict:
    return {
        "kind": t.kind,
        "family": t.family,
        "variant": t.variant,
        "terminal": t.terminal,
        "terminal_node": t.terminal_node,
        "steps": [
            {
                "label": s.label,
                "action": action_to_dict(s.action),
                "state_summary": s.state_summary,
                "delta": {
                    "new_items": list(s.delta.new_items),
                    "revealed_containers": list(s.delta.revealed_containers),
                    "knowledge": list(s.delta.knowledge),
                },
            }
            for s in t.steps
        ],
    }


def trajectory_from_dict(data: dict) -> Trajectory:
    return Trajectory(
        kind=data["kind"],
        family=data["family"],
        variant=data["variant"],
        terminal=data["terminal"],
        terminal_node=data["terminal_node"],
        steps=tuple(
            TrajectoryStep(
                label=s["label"],
                action=action_from_dict(s["action"]),
                state_summary=s["state_summary"],
                delta=ObservationDelta(
                    tuple(s["delta"]["new_items"]),
                    tuple(s["delta"]["revealed_containers"]),
                    tuple(s["delta"]["knowledge"]),
                ),
            )
            for s in data["steps"]
        ),
    )


def _alternative_to_dict(a: Alternative) -> dict:
    return {
        "label": a.label,
        "action": action_to_dict(a.action),
        "f": _f_to_json(a.f),
        "kind": a.kind,
    }


def _alternative_from_dict(data: dict) -> Alternative:
    return Alternative(
        label=data["label"],
        action=action_from_dict(data["action"]),
        f=_f_from_json(data["f"]),
        kind=data["kind"],
    )


def record_to_dict(r: DecisionRecord) -> dict:
    return {
        "family": r.family,
        "variant": r.variant,
        "node": r.node,
        "state_summary": r.state_summary,
        "arrived_by": r.arrived_by,
        "chosen": _alternative_to_dict(r.chosen),
        "alternatives": [_alternative_to_dict(a) for a in r.alternatives],
    }


def record_from_dict(data: dict) -> DecisionRecord:
    return DecisionRecord(
        family=data["family"],
        variant=data["variant"],
        node=data["node"],
        state_summary=data["state_summary"],
        arrived_by=data["arrived_by"],
        chosen=_alternative_from_dict(data["chosen"]),
        alternatives=tuple(_alternative_from_dict(a) for a in data["alternatives"]),
    )


def save_trajectories(trajectories: list[Trajectory], kind: str, family: str,
                      variant: str, path: Path) -> None:
    payload = {
        "schema": TRAJECTORY_SCHEMA,
        "kind": kind,
        "family": family,
        "variant": variant,
        "trajectories": [trajectory_to_dict(t) for t in trajectories],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_trajectories(path: Path) -> list[Trajectory]:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != TRAJECTORY_SCHEMA:
        raise WorldError(f"unexpected schema in {path}")
    return [trajectory_from_dict(t) for t in data["trajectories"]]


def save_records(records: list[DecisionRecord], family: str, variant: str,
                 path: Path) -> None:
    payload = {
        "schema": RECORDS_SCHEMA,
        "kind": "L",
        "family": family,
        "variant": variant,
        "records": [record_to_dict(r) for r in records],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_records(path: Path) -> list[DecisionRecord]:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != RECORDS_SCHEMA:
        raise WorldError(f"unexpected schema in {path}")
    return [record_from_dict(r) for r in data["records"]]
