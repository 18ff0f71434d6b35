"""AST types for the supported PDDL subset and their canonical renderer.

The subset is :strips + :typing + negative preconditions. ASTs are plain
frozen dataclasses with structural equality, and render_domain/render_problem
produce a canonical pretty-print, so parse-render round trips are exact.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Literal:
    name: str
    args: tuple[str, ...]
    positive: bool = True

    def negate(self) -> Literal:
        return Literal(self.name, self.args, not self.positive)

    def render(self) -> str:
        atom = "(" + " ".join((self.name,) + self.args) + ")"
        return atom if self.positive else f"(not {atom})"


@dataclass(frozen=True)
class Predicate:
    name: str
    params: tuple[tuple[str, str], ...]   # (variable, type)

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    precondition: tuple[Literal, ...]
    add: tuple[Literal, ...]
    delete: tuple[Literal, ...]


@dataclass(frozen=True)
class DomainAst:
    name: str
    requirements: tuple[str, ...]
    types: tuple[tuple[str, str], ...]     # (type, parent), parent defaults to object
    predicates: tuple[Predicate, ...]
    actions: tuple[ActionSchema, ...]

    def predicate(self, name: str) -> Predicate | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class ProblemAst:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]   # (object, type), declaration order
    init: tuple[Literal, ...]
    goal: tuple[Literal, ...]


def _render_typed_list(pairs: tuple[tuple[str, str], ...]) -> str:
    """Render (name, type) pairs grouping runs of equal type: a b - t c - u."""
    parts: list[str] = []
    run: list[str] = []
    run_type: str | None = None
    for name, kind in pairs:
        if run and kind != run_type:
            parts.append(" ".join(run) + " - " + run_type)
            run = []
        run.append(name)
        run_type = kind
    if run:
        parts.append(" ".join(run) + " - " + run_type)
    return " ".join(parts)


def render_domain(domain: DomainAst) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append("  (:requirements " + " ".join(domain.requirements) + ")")
    if domain.types:
        lines.append("  (:types " + _render_typed_list(domain.types) + ")")
    if domain.predicates:
        lines.append("  (:predicates")
        for pred in domain.predicates:
            if pred.params:
                body = pred.name + " " + _render_typed_list(pred.params)
            else:
                body = pred.name
            lines.append(f"    ({body})")
        lines[-1] += ")"
    for action in domain.actions:
        lines.append(f"  (:action {action.name}")
        lines.append("    :parameters (" + _render_typed_list(action.params) + ")")
        pre = " ".join(lit.render() for lit in action.precondition)
        lines.append(f"    :precondition (and {pre})" if pre else "    :precondition (and)")
        effects = [lit.render() for lit in action.add]
        effects += [lit.negate().render() for lit in action.delete]
        lines.append("    :effect (and " + " ".join(effects) + "))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def render_problem(problem: ProblemAst) -> str:
    lines = [f"(define (problem {problem.name})"]
    lines.append(f"  (:domain {problem.domain_name})")
    if problem.objects:
        lines.append("  (:objects " + _render_typed_list(problem.objects) + ")")
    lines.append("  (:init")
    for lit in problem.init:
        lines.append("    " + lit.render())
    lines[-1] += ")"
    goal = " ".join(lit.render() for lit in problem.goal)
    lines.append(f"  (:goal (and {goal})))")
    return "\n".join(lines) + "\n"
