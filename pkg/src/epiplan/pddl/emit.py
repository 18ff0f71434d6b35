"""Emit a scenario as a PDDL domain/problem pair, in both ask variants.

The plus_ask variant includes a parameterless ask action that grants
knows-target. In an ambiguous scenario every take schema is split into a
-known twin (requires knows-target) and a -clear twin (requires the scenario
not to be ambiguous); `ambiguous` is a static init fact there, so the -clear
twins ground to nothing and the knowledge gate is what remains. Unambiguous
scenarios get a single ungated take, which is the same disjunction statically
simplified. The minus_ask variant drops ask and every gate.
"""

from __future__ import annotations

from ..scenarios import validate_scenario
from ..world import (
    MINUS_ASK,
    PLUS_ASK,
    VARIANTS,
    Action,
    Ask,
    Move,
    Open,
    Scenario,
    Take,
    WorldError,
)
from .ast import ActionSchema, DomainAst, Literal, Predicate, ProblemAst, render_domain, render_problem
from .grounder import GroundedTask, ground


def _lit(name: str, *args: str, positive: bool = True) -> Literal:
    return Literal(name, tuple(args), positive)


def domain_name(scenario: Scenario, variant: str) -> str:
    return f"epiplan-{scenario.family}-{variant.replace('_', '-')}"


def file_names(family: str, variant: str) -> tuple[str, str]:
    stem = f"{family}_{variant}"
    return f"{stem}.domain.pddl", f"{stem}.problem.pddl"


def domain_ast(scenario: Scenario, variant: str) -> DomainAst:
    if variant not in VARIANTS:
        raise WorldError(f"unknown ask variant {variant!r}")
    plus = variant == PLUS_ASK
    gated = plus and scenario.ambiguous
    has_containers = bool(scenario.containers)

    requirements = [":strips", ":typing"]
    if gated:
        requirements.append(":negative-preconditions")

    types = [("location", "object"), ("item", "object")]
    predicates = [
        Predicate("at-matcher", (("?l", "location"),)),
        Predicate("adjacent", (("?a", "location"), ("?b", "location"))),
        Predicate("on-surface", (("?i", "item"), ("?l", "location"))),
        Predicate("holding", (("?i", "item"),)),
        Predicate("handsfree", ()),
    ]
    if has_containers:
        types.append(("container", "object"))
        predicates += [
            Predicate("in-container", (("?i", "item"), ("?c", "container"))),
            Predicate("container-at", (("?c", "container"), ("?l", "location"))),
            Predicate("open", (("?c", "container"),)),
            Predicate("closed", (("?c", "container"),)),
        ]
    if plus:
        predicates.append(Predicate("knows-target", ()))
    if gated:
        predicates.append(Predicate("ambiguous", ()))

    actions = [
        ActionSchema(
            "move",
            params=(("?from", "location"), ("?to", "location")),
            precondition=(_lit("at-matcher", "?from"), _lit("adjacent", "?from", "?to")),
            add=(_lit("at-matcher", "?to"),),
            delete=(_lit("at-matcher", "?from"),),
        )
    ]
    if has_containers:
        actions.append(
            ActionSchema(
                "open",
                params=(("?c", "container"), ("?l", "location")),
                precondition=(
                    _lit("at-matcher", "?l"),
                    _lit("container-at", "?c", "?l"),
                    _lit("closed", "?c"),
                ),
                add=(_lit("open", "?c"),),
                delete=(_lit("closed", "?c"),),
            )
        )

    take_pre = (
        _lit("at-matcher", "?l"),
        _lit("on-surface", "?i", "?l"),
        _lit("handsfree"),
    )
    take_eff = dict(
        add=(_lit("holding", "?i"),),
        delete=(_lit("on-surface", "?i", "?l"), _lit("handsfree")),
    )
    take_params = (("?i", "item"), ("?l", "location"))
    takeout_pre = (
        _lit("at-matcher", "?l"),
        _lit("container-at", "?c", "?l"),
        _lit("open", "?c"),
        _lit("in-container", "?i", "?c"),
        _lit("handsfree"),
    )
    takeout_eff = dict(
        add=(_lit("holding", "?i"),),
        delete=(_lit("in-container", "?i", "?c"), _lit("handsfree")),
    )
    takeout_params = (("?i", "item"), ("?c", "container"), ("?l", "location"))

    def gate_variants(name, params, pre, eff):
        if not gated:
            return [ActionSchema(name, params, pre, **eff)]
        return [
            ActionSchema(f"{name}-known", params, pre + (_lit("knows-target"),), **eff),
            ActionSchema(
                f"{name}-clear", params,
                pre + (_lit("ambiguous", positive=False),), **eff,
            ),
        ]

    actions += gate_variants("take", take_params, take_pre, take_eff)
    if has_containers:
        actions += gate_variants("take-out", takeout_params, takeout_pre, takeout_eff)
    if plus:
        actions.append(
            ActionSchema("ask", params=(), precondition=(),
                         add=(_lit("knows-target"),), delete=())
        )

    return DomainAst(
        name=domain_name(scenario, variant),
        requirements=tuple(requirements),
        types=tuple(types),
        predicates=tuple(predicates),
        actions=tuple(actions),
    )


def problem_ast(scenario: Scenario, variant: str) -> ProblemAst:
    plus = variant == PLUS_ASK
    gated = plus and scenario.ambiguous

    objects = [(loc, "location") for loc in scenario.locations]
    objects += [(i.id, "item") for i in sorted(scenario.items, key=lambda i: i.id)]
    objects += [(c.id, "container") for c in sorted(scenario.containers, key=lambda c: c.id)]

    init: list[Literal] = []
    for a in range(len(scenario.locations) - 1):
        init.append(_lit("adjacent", scenario.locations[a], scenario.locations[a + 1]))
        init.append(_lit("adjacent", scenario.locations[a + 1], scenario.locations[a]))
    init.append(_lit("at-matcher", scenario.locations[scenario.matcher_pose.facing]))
    for item in sorted(scenario.items, key=lambda i: i.id):
        if item.location is not None:
            init.append(_lit("on-surface", item.id, scenario.locations[item.location]))
        else:
            init.append(_lit("in-container", item.id, item.container))
    for c in sorted(scenario.containers, key=lambda c: c.id):
        init.append(_lit("container-at", c.id, scenario.locations[c.location]))
        init.append(_lit("open" if c.is_open else "closed", c.id))
    init.append(_lit("handsfree"))
    if gated:
        init.append(_lit("ambiguous"))

    return ProblemAst(
        name=domain_name(scenario, variant) + "-task",
        domain_name=domain_name(scenario, variant),
        objects=tuple(objects),
        init=tuple(init),
        goal=(_lit("holding", scenario.target_id),),
    )


def emit_scenario(scenario: Scenario, variant: str) -> tuple[str, str]:
    """Validated scenario to rendered (domain text, problem text)."""
    validate_scenario(scenario)
    return (
        render_domain(domain_ast(scenario, variant)),
        render_problem(problem_ast(scenario, variant)),
    )


def grounded_task(scenario: Scenario, variant: str) -> GroundedTask:
    """Ground directly from the in-memory ASTs."""
    return ground(domain_ast(scenario, variant), problem_ast(scenario, variant))


def core_action_of(label: str, scenario: Scenario) -> Action:
    """Map a grounded action label like ``(move shelf cabinet)`` to a world
    action."""
    parts = label.strip("()").split()
    head, args = parts[0], parts[1:]
    if head == "move":
        return Move(scenario.location_index(args[1]))
    if head == "open":
        return Open(args[0])
    if head.startswith("take"):
        return Take(args[0])
    if head == "ask":
        return Ask()
    raise WorldError(f"unknown grounded action {label!r}")
