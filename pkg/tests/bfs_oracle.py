"""Brute-force oracles over grounded tasks, independent of the search engine.

Everything here works directly on GroundedTask data with its own
applicability and transition code, so agreement with the planner is a real
cross-check rather than the planner agreeing with itself.
"""

from __future__ import annotations

from collections import deque

from epiplan.pddl.grounder import GroundedTask


def _applicable(task: GroundedTask, state: frozenset[int]):
    for action in task.actions:
        if all(p in state for p in action.pre):
            yield action


def _apply(state: frozenset[int], action) -> frozenset[int]:
    return (state - frozenset(action.delete)) | frozenset(action.add)


def _is_goal(task: GroundedTask, state: frozenset[int]) -> bool:
    return all(g in state for g in task.goal)


def reachable_states(task: GroundedTask) -> set[frozenset[int]]:
    """Every state reachable from the initial state."""
    start = frozenset(task.init)
    seen = {start}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for action in _applicable(task, state):
            nxt = _apply(state, action)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def bfs_cost(task: GroundedTask, start: frozenset[int] | None = None) -> float:
    """Optimal unit-cost plan length from start, inf when unsolvable."""
    state = frozenset(task.init) if start is None else start
    if _is_goal(task, state):
        return 0
    seen = {state}
    queue = deque([(state, 0)])
    while queue:
        state, depth = queue.popleft()
        for action in _applicable(task, state):
            nxt = _apply(state, action)
            if nxt in seen:
                continue
            if _is_goal(task, nxt):
                return depth + 1
            seen.add(nxt)
            queue.append((nxt, depth + 1))
    return float("inf")


def h_star_map(task: GroundedTask) -> dict[frozenset[int], float]:
    """True goal distance for every reachable state, via backward BFS.

    Forward-enumerates the reachable graph, then relaxes backward from the
    goal states over the recorded transitions.
    """
    states = reachable_states(task)
    incoming: dict[frozenset[int], list[frozenset[int]]] = {s: [] for s in states}
    for state in states:
        for action in _applicable(task, state):
            nxt = _apply(state, action)
            incoming[nxt].append(state)
    distance = {s: float("inf") for s in states}
    queue = deque()
    for state in states:
        if _is_goal(task, state):
            distance[state] = 0
            queue.append(state)
    while queue:
        state = queue.popleft()
        for prev in incoming[state]:
            if distance[prev] == float("inf"):
                distance[prev] = distance[state] + 1
                queue.append(prev)
    return distance
