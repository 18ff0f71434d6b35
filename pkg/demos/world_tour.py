"""What each agent sees, and what asking buys the Matcher.

Walks the negation environment: the Director says "Take the shirt," but
the only shirt in the Matcher's masked view is the wrong one; the
intended shirt sits at the location the Matcher cannot see. Watch the
two observations diverge, then watch one Ask resolve the reference.
"""

from __future__ import annotations

from epiplan.runtime import render_action, render_observation, respond
from epiplan.scenarios import build_scenario
from epiplan.world import (
    DIRECTOR,
    MATCHER,
    WHICH_ONE,
    Ask,
    Move,
    Take,
    apply,
    applicable_actions,
    initial_state,
    observation_of,
)


def show(title: str, text: str) -> None:
    print(f"--- {title} ---")
    print(text)
    print()


def main() -> None:
    scenario = build_scenario("not")
    print(f'Director says: "{scenario.director_utterance}"')
    print(f"Target: {scenario.target_id}   distractor: {scenario.distractor_id}")
    print()

    state = initial_state(scenario)
    for role in (MATCHER, DIRECTOR):
        obs = observation_of(state, role, scenario)
        show(f"{role} view", render_observation(obs, scenario))

    labels = [render_action(a, scenario) for a in applicable_actions(state, scenario)]
    show("Matcher can do", "\n".join(labels))

    ask = Ask(WHICH_ONE)
    answer = respond(ask, state, scenario)
    state = apply(state, ask, scenario)
    show("After asking which one", f'Director: "{answer.text}"')
    show(
        "Matcher view now",
        render_observation(observation_of(state, MATCHER, scenario), scenario),
    )

    state = apply(state, Move(2), scenario)
    state = apply(state, Take(scenario.target_id), scenario)
    print(f"Holding {state.holding}; goal reached: {state.holding == scenario.target_id}")


if __name__ == "__main__":
    main()
