"""PDDL subset: parser, grounder, and scenario emitter."""

from .ast import (
    ActionSchema,
    DomainAst,
    Literal,
    Predicate,
    ProblemAst,
    render_domain,
    render_problem,
)
from .emit import (
    core_action_of,
    domain_ast,
    emit_scenario,
    file_names,
    grounded_task,
    problem_ast,
)
from .grounder import (
    GroundedAction,
    GroundedTask,
    applicable_grounded,
    apply_grounded,
    ground,
    is_goal_state,
)
from .parser import (
    PddlError,
    PddlSyntaxError,
    SemanticError,
    UnsupportedFeature,
    parse_domain,
    parse_problem,
)

__all__ = [
    "ActionSchema",
    "DomainAst",
    "GroundedAction",
    "GroundedTask",
    "Literal",
    "PddlError",
    "PddlSyntaxError",
    "Predicate",
    "ProblemAst",
    "SemanticError",
    "UnsupportedFeature",
    "applicable_grounded",
    "apply_grounded",
    "core_action_of",
    "domain_ast",
    "emit_scenario",
    "file_names",
    "ground",
    "grounded_task",
    "is_goal_state",
    "parse_domain",
    "parse_problem",
    "problem_ast",
    "render_domain",
    "render_problem",
]
