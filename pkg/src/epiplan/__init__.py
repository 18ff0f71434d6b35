"""Director/Matcher reference tasks with an instrumented optimal planner.

The pipeline: build the seven scenario families, compile each into a STRIPS
task with or without an ask action, solve it with A* under h_max while
recording the full reasoning tree, extract G/E/L payloads from the tree,
forge them into thought-action examples, and evaluate agent policies under
a leave-one-family-out protocol.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .scenarios import (
    DEMAND_TAGS,
    DISPLAY_NAMES,
    FAMILIES,
    UnrealizableScenario,
    build_scenario,
    reference_scenarios,
    validate_scenario,
)
from .world import (
    MINUS_ASK,
    PLUS_ASK,
    Action,
    Ask,
    Container,
    Item,
    Move,
    Observation,
    Open,
    Scenario,
    Take,
    WorldError,
    WorldState,
    applicable_actions,
    apply,
    initial_state,
    is_goal,
    load_scenario,
    observation_of,
    save_scenario,
)

__all__ = [
    "__version__",
    "DEMAND_TAGS",
    "DISPLAY_NAMES",
    "FAMILIES",
    "MINUS_ASK",
    "PLUS_ASK",
    "Action",
    "Ask",
    "Container",
    "Item",
    "Move",
    "Observation",
    "Open",
    "Scenario",
    "Take",
    "UnrealizableScenario",
    "WorldError",
    "WorldState",
    "applicable_actions",
    "apply",
    "build_scenario",
    "initial_state",
    "is_goal",
    "load_scenario",
    "observation_of",
    "reference_scenarios",
    "save_scenario",
    "validate_scenario",
]
