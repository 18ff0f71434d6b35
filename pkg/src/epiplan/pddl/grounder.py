"""Exhaustive typed grounding of a parsed domain/problem pair.

Static predicates (those no action effect touches) are evaluated against the
initial state during grounding: actions with a false static literal are
pruned and static facts never enter the fact universe. Negative preconditions
over fluent predicates are compiled away with complementary not-* twin facts
kept in sync by every effect.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .ast import DomainAst, ProblemAst
from .parser import is_subtype

# Sentinel goal fact used when a static goal literal is false at grounding
# time: the task stays well-formed but no state can ever satisfy it.
NEVER_FACT = "(goal-unsatisfiable)"


@dataclass(frozen=True)
class GroundedAction:
    name: str
    pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]
    cost: int = 1


@dataclass(frozen=True)
class GroundedTask:
    name: str
    facts: tuple[str, ...]          # dense universe, index = position
    init: frozenset[int]
    goal: frozenset[int]
    actions: tuple[GroundedAction, ...]

    @cached_property
    def fact_index(self) -> dict[str, int]:
        return {fact: i for i, fact in enumerate(self.facts)}

    def index(self, fact: str) -> int:
        return self.fact_index[fact]


def fact_string(name: str, args: tuple[str, ...]) -> str:
    return "(" + " ".join((name,) + args) + ")"


def applicable_grounded(task: GroundedTask, state: frozenset[int]):
    """Grounded actions applicable in a state, in task declaration order."""
    return [a for a in task.actions if a.pre <= state]


def apply_grounded(action: GroundedAction, state: frozenset[int]) -> frozenset[int]:
    return (state - action.delete) | action.add


def is_goal_state(task: GroundedTask, state: frozenset[int]) -> bool:
    return task.goal <= state


def ground(domain: DomainAst, problem: ProblemAst) -> GroundedTask:
    objects_by_type = _objects_by_type(domain, problem)
    fluents = {lit.name for a in domain.actions for lit in a.add + a.delete}

    # Fluent predicates needing a not-* twin: negated in a dynamic
    # precondition or in the goal.
    twins = set()
    for lits in [problem.goal] + [a.precondition for a in domain.actions]:
        for lit in lits:
            if not lit.positive and lit.name in fluents:
                twins.add(lit.name)

    init_atoms = {fact_string(l.name, l.args) for l in problem.init}

    universe: list[str] = []
    for pred in domain.predicates:
        if pred.name not in fluents:
            continue
        for args in _typed_tuples(pred.params, objects_by_type, domain):
            universe.append(fact_string(pred.name, args))
            if pred.name in twins:
                universe.append(fact_string("not-" + pred.name, args))
    universe.sort()
    index = {fact: i for i, fact in enumerate(universe)}

    init = set()
    for lit in problem.init:
        if lit.name in fluents:
            init.add(index[fact_string(lit.name, lit.args)])
    for pred in domain.predicates:
        if pred.name in twins:
            for args in _typed_tuples(pred.params, objects_by_type, domain):
                if fact_string(pred.name, args) not in init_atoms:
                    init.add(index[fact_string("not-" + pred.name, args)])

    goal, never_needed = _ground_goal(problem, fluents, init_atoms, index)
    if never_needed:
        universe.append(NEVER_FACT)
        index[NEVER_FACT] = len(universe) - 1
        goal.add(index[NEVER_FACT])

    actions: list[GroundedAction] = []
    for schema in domain.actions:
        candidates = [
            _candidates(kind, objects_by_type, domain) for _, kind in schema.params
        ]
        for binding in itertools.product(*candidates):
            env = {var: obj for (var, _), obj in zip(schema.params, binding)}
            grounded = _ground_action(schema, env, fluents, init_atoms, index)
            if grounded is not None:
                actions.append(grounded)

    return GroundedTask(
        name=f"{domain.name}/{problem.name}",
        facts=tuple(universe),
        init=frozenset(init),
        goal=frozenset(goal),
        actions=tuple(actions),
    )


def _ground_goal(problem, fluents, init_atoms, index):
    goal: set[int] = set()
    never = False
    for lit in problem.goal:
        atom = fact_string(lit.name, lit.args)
        if lit.name in fluents:
            goal.add(index[atom] if lit.positive
                     else index[fact_string("not-" + lit.name, lit.args)])
        else:
            holds = atom in init_atoms
            if holds != lit.positive:
                never = True
    return goal, never


def _ground_action(schema, env, fluents, init_atoms, index):
    name = fact_string(schema.name, tuple(env[v] for v, _ in schema.params))
    pre: set[int] = set()
    for lit in schema.precondition:
        args = tuple(env[a] for a in lit.args)
        atom = fact_string(lit.name, args)
        if lit.name in fluents:
            pre.add(index[atom] if lit.positive
                    else index[fact_string("not-" + lit.name, args)])
        else:
            if (atom in init_atoms) != lit.positive:
                return None   # statically false, prune the instance
    add: set[int] = set()
    delete: set[int] = set()
    for lit in schema.add:
        args = tuple(env[a] for a in lit.args)
        add.add(index[fact_string(lit.name, args)])
        twin = fact_string("not-" + lit.name, args)
        if twin in index:
            delete.add(index[twin])
    for lit in schema.delete:
        args = tuple(env[a] for a in lit.args)
        delete.add(index[fact_string(lit.name, args)])
        twin = fact_string("not-" + lit.name, args)
        if twin in index:
            add.add(index[twin])
    return GroundedAction(
        name=name, pre=frozenset(pre), add=frozenset(add), delete=frozenset(delete)
    )


def _objects_by_type(domain: DomainAst, problem: ProblemAst) -> dict[str, list[str]]:
    """Objects per declared type, in problem declaration order."""
    out: dict[str, list[str]] = {}
    for obj, kind in problem.objects:
        out.setdefault(kind, []).append(obj)
    return out


def _candidates(kind: str, objects_by_type, domain: DomainAst) -> list[str]:
    out = []
    for declared, objs in objects_by_type.items():
        if is_subtype(domain, declared, kind):
            out.extend(objs)
    return out


def _typed_tuples(params, objects_by_type, domain: DomainAst):
    """All typed argument tuples, hierarchy-aware, in declaration order."""
    pools = [_candidates(kind, objects_by_type, domain) for _, kind in params]
    return itertools.product(*pools)
