"""Instrumented A* with the admissible h_max heuristic.

Every state generated during search lands in a ReasoningTree: evaluated nodes
(open), expanded nodes, dead nodes (h is infinite, recorded but never
queued), and duplicate-pruned leaves that point at the retained twin. The
open list orders by (f, -g, insertion counter), so deeper nodes win f ties
and traces are byte-for-byte reproducible.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Callable

from .pddl.grounder import GroundedTask, apply_grounded

# Node statuses. Dead nodes keep status "evaluated" with h = inf; they were
# considered, just never queued.
EVALUATED = "evaluated"
EXPANDED = "expanded"
DUPLICATE = "duplicate-pruned"

Heuristic = Callable[[frozenset[int]], float]


@dataclass
class SearchNode:
    id: int
    facts: frozenset[int]
    g: int
    h: float | None                 # None for duplicate-pruned leaves
    f: float | None
    parent: int | None              # parent node id; None at the root
    action: str | None              # edge label from the parent
    status: str
    expansion_order: int | None = None
    retained: int | None = None     # duplicate-pruned: id of the kept twin
    goal: bool = False

    @property
    def dead(self) -> bool:
        return self.h is not None and math.isinf(self.h)


@dataclass
class ReasoningTree:
    task: GroundedTask | None
    nodes: list[SearchNode]
    root: int = 0
    optimal_path: tuple[int, ...] | None = None   # child node ids, root to goal
    informative: set[int] = field(default_factory=set)

    def node(self, node_id: int) -> SearchNode:
        return self.nodes[node_id]

    def children(self, node_id: int) -> list[SearchNode]:
        return [n for n in self.nodes if n.parent == node_id]

    def retained_children(self, node_id: int) -> list[SearchNode]:
        return [n for n in self.children(node_id) if n.status != DUPLICATE]

    def path_to(self, node_id: int) -> list[SearchNode]:
        """Nodes from the root to node_id inclusive."""
        path = []
        cursor: int | None = node_id
        while cursor is not None:
            node = self.nodes[cursor]
            path.append(node)
            cursor = node.parent
        return list(reversed(path))

    def plan(self) -> list[str] | None:
        if self.optimal_path is None:
            return None
        return [self.nodes[i].action for i in self.optimal_path]


def hmax(task: GroundedTask, state: frozenset[int]) -> float:
    """Delete-relaxation fixpoint cost, maximized over goal facts.

    A fact in the state costs 0; otherwise the cheapest achiever pays its own
    cost plus the most expensive precondition. Infinite when some goal fact
    is unreachable in the relaxation.
    """
    cost: dict[int, float] = {f: 0.0 for f in state}
    changed = True
    while changed:
        changed = False
        for action in task.actions:
            worst = 0.0
            for p in action.pre:
                c = cost.get(p)
                if c is None:
                    worst = math.inf
                    break
                worst = max(worst, c)
            if math.isinf(worst):
                continue
            through = action.cost + worst
            for f in action.add:
                if through < cost.get(f, math.inf):
                    cost[f] = through
                    changed = True
    return max((cost.get(f, math.inf) for f in task.goal), default=0.0)


def astar(
    task: GroundedTask, heuristic: Heuristic | None = None
) -> tuple[list[str] | None, ReasoningTree]:
    """Cost-optimal plan plus the full reasoning tree.

    Returns (None, tree) when no plan exists. The heuristic defaults to h_max
    on the task; any admissible substitute may be injected. A consistent
    heuristic is assumed: a cheaper route to an open node reparents it (the
    superseded edge stays as a duplicate-pruned leaf), while closed nodes are
    never reopened.
    """
    h_of: Heuristic = heuristic or (lambda facts: hmax(task, facts))

    nodes: list[SearchNode] = []
    by_state: dict[frozenset[int], int] = {}
    open_heap: list[tuple[float, int, int, int]] = []   # (f, -g, stamp, node id)
    stamp = 0
    live_stamp: dict[int, int] = {}   # node id -> stamp of its valid heap entry
    expansions = 0
    goal_id: int | None = None

    def push(node: SearchNode) -> None:
        nonlocal stamp
        stamp += 1
        live_stamp[node.id] = stamp
        heapq.heappush(open_heap, (node.f, -node.g, stamp, node.id))

    h0 = h_of(task.init)
    root = SearchNode(
        id=0, facts=task.init, g=0, h=h0, f=h0, parent=None, action=None,
        status=EVALUATED,
    )
    nodes.append(root)
    by_state[task.init] = 0
    if not root.dead:
        push(root)

    while open_heap:
        _, _, entry_stamp, node_id = heapq.heappop(open_heap)
        if live_stamp.get(node_id) != entry_stamp:
            continue   # superseded by a decrease-key reinsertion
        del live_stamp[node_id]
        node = nodes[node_id]
        node.expansion_order = expansions
        expansions += 1
        if task.goal <= node.facts:
            node.goal = True
            goal_id = node_id
            break
        node.status = EXPANDED
        for action in task.actions:
            if not action.pre <= node.facts:
                continue
            succ = apply_grounded(action, node.facts)
            g2 = node.g + action.cost
            kept_id = by_state.get(succ)
            if kept_id is not None:
                kept = nodes[kept_id]
                if g2 < kept.g and kept.status == EVALUATED and not kept.dead:
                    # Better route to an open node: keep the node, retire its
                    # old incoming edge as a duplicate-pruned leaf.
                    tombstone = SearchNode(
                        id=len(nodes), facts=kept.facts, g=kept.g, h=None, f=None,
                        parent=kept.parent, action=kept.action, status=DUPLICATE,
                        retained=kept_id,
                    )
                    nodes.append(tombstone)
                    kept.parent = node_id
                    kept.action = action.name
                    kept.g = g2
                    kept.f = g2 + kept.h
                    push(kept)
                else:
                    nodes.append(SearchNode(
                        id=len(nodes), facts=succ, g=g2, h=None, f=None,
                        parent=node_id, action=action.name, status=DUPLICATE,
                        retained=kept_id,
                    ))
                continue
            h2 = h_of(succ)
            child = SearchNode(
                id=len(nodes), facts=succ, g=g2, h=h2, f=g2 + h2,
                parent=node_id, action=action.name, status=EVALUATED,
            )
            nodes.append(child)
            by_state[succ] = child.id
            if not child.dead:
                push(child)

    tree = ReasoningTree(task=task, nodes=nodes)
    if goal_id is None:
        return None, tree
    path = [n.id for n in tree.path_to(goal_id)]
    tree.optimal_path = tuple(path[1:])   # edge per non-root node
    return tree.plan(), tree


def _sort_value(value: float | None):
    if value is None:
        return None
    if math.isinf(value):
        return "inf"
    return int(value) if float(value).is_integer() else value


def export_tree(tree: ReasoningTree) -> str:
    """JSON-lines export: one record per node, then one per edge.

    Nodes are ordered by (expansion order, generation id), edges by child id.
    Infinite h/f serialize as the string "inf". Byte-identical across runs on
    the same task.
    """
    records = []
    order = sorted(
        tree.nodes,
        key=lambda n: (
            n.expansion_order if n.expansion_order is not None else math.inf,
            n.id,
        ),
    )
    on_path = set(tree.optimal_path or ())
    for n in order:
        rec = {
            "kind": "node",
            "id": n.id,
            "g": n.g,
            "h": _sort_value(n.h),
            "f": _sort_value(n.f),
            "status": n.status,
            "expansion_order": n.expansion_order,
            "goal": n.goal,
            "on_optimal_path": n.id in on_path or (n.id == tree.root and bool(on_path)),
        }
        if n.retained is not None:
            rec["retained"] = n.retained
        if tree.task is not None:
            rec["facts"] = sorted(tree.task.facts[i] for i in n.facts)
        else:
            rec["facts"] = sorted(n.facts)
        records.append(rec)
    for n in sorted(tree.nodes, key=lambda n: n.id):
        if n.parent is None:
            continue
        records.append({
            "kind": "edge",
            "id": n.id,
            "parent": n.parent,
            "action": n.action,
        })
    return "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"


def _num(value):
    if value == "inf":
        return math.inf
    return value


def import_tree(text: str) -> ReasoningTree:
    """Rebuild a tree from its JSON-lines export.

    The task reference is gone, so node fact sets come back as fact-name
    frozensets; everything extraction needs (structure, labels, statuses,
    scores) round-trips exactly.
    """
    node_recs = {}
    edge_recs = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["kind"] == "node":
            node_recs[rec["id"]] = rec
        else:
            edge_recs[rec["id"]] = rec
    nodes = []
    goal_id = None
    for node_id in sorted(node_recs):
        rec = node_recs[node_id]
        edge = edge_recs.get(node_id)
        node = SearchNode(
            id=rec["id"],
            facts=frozenset(rec["facts"]),
            g=rec["g"],
            h=_num(rec["h"]),
            f=_num(rec["f"]),
            parent=edge["parent"] if edge else None,
            action=edge["action"] if edge else None,
            status=rec["status"],
            expansion_order=rec["expansion_order"],
            retained=rec.get("retained"),
            goal=rec["goal"],
        )
        nodes.append(node)
        if node.goal:
            goal_id = node.id
    tree = ReasoningTree(task=None, nodes=nodes)
    if goal_id is not None:
        tree.optimal_path = tuple(n.id for n in tree.path_to(goal_id))[1:]
    return tree
