from __future__ import annotations

import dataclasses
import json

import pytest
from hypothesis import given, strategies as st

from epiplan.scenarios import FAMILIES, build_scenario
from epiplan.world import (
    DIRECTOR,
    MATCHER,
    MINUS_ASK,
    PLUS_ASK,
    Ask,
    Container,
    InapplicableAction,
    Item,
    Move,
    Open,
    Take,
    WorldError,
    action_from_dict,
    action_to_dict,
    applicable_actions,
    apply,
    canonical_bytes,
    initial_state,
    is_applicable,
    is_goal,
    item_location,
    observation_of,
    scenario_from_dict,
    scenario_to_dict,
    sight,
    state_hash,
)


def test_sight_covers_adjacent_row_positions():
    assert sight(0, frozenset(), 3) == (0, 1)
    assert sight(1, frozenset(), 3) == (0, 1, 2)
    assert sight(2, frozenset(), 3) == (1, 2)


def test_sight_mask_hides_unless_faced():
    # A masked location stays hidden from the side but not when faced.
    assert sight(0, frozenset({1}), 3) == (0,)
    assert sight(1, frozenset({1}), 3) == (0, 1, 2)
    assert sight(2, frozenset({1}), 3) == (2,)


def test_sight_single_location_world():
    assert sight(0, frozenset(), 1) == (0,)


def test_item_requires_exactly_one_placement():
    with pytest.raises(WorldError):
        Item("x", "thing", "red")
    with pytest.raises(WorldError):
        Item("x", "thing", "red", location=0, container="drawer")


def test_item_display_name():
    assert Item("gold_shirt", "shirt", "gold", location=0).display_name == "gold shirt"


def test_initial_state_matches_layout():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    assert state.matcher_at == scenario.matcher_pose.facing
    assert state.holding is None
    assert not state.knows_target
    assert dict(state.surface) == {"gold_shirt": 2, "silver_shirt": 0, "book": 1}
    assert dict(state.inside) == {"coin": "drawer"}
    assert not state.open_containers


def test_apply_is_pure():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    moved = apply(state, Move(2), scenario)
    assert moved is not state
    assert state.matcher_at == 1 and moved.matcher_at == 2


def test_apply_rejects_inapplicable():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    with pytest.raises(InapplicableAction):
        apply(state, Move(1), scenario)          # already there
    with pytest.raises(InapplicableAction):
        apply(state, Take("gold_shirt"), scenario)  # wrong location
    with pytest.raises(InapplicableAction):
        apply(state, Open("drawer"), scenario) and apply(
            apply(state, Open("drawer"), scenario), Open("drawer"), scenario
        )


def test_move_only_one_step():
    scenario = build_scenario("dist")   # matcher starts at the end of the row
    state = initial_state(scenario)
    assert state.matcher_at == 0
    assert not is_applicable(state, Move(2), scenario)
    assert is_applicable(state, Move(1), scenario)


def test_take_from_open_container_only():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    assert not is_applicable(state, Take("coin"), scenario)
    opened = apply(state, Open("drawer"), scenario)
    assert is_applicable(opened, Take("coin"), scenario)
    held = apply(opened, Take("coin"), scenario)
    assert held.holding == "coin"
    assert item_location(held, "coin", scenario) is None


def test_take_requires_free_hands():
    scenario = build_scenario("base")
    state = apply(initial_state(scenario), Take("book"), scenario)
    assert state.holding == "book"
    moved = apply(state, Move(2), scenario)
    assert not is_applicable(moved, Take("gold_shirt"), scenario)


def test_ask_sets_knowledge_and_reveals_target_location():
    scenario = build_scenario("far")
    state = initial_state(scenario)
    after = apply(state, Ask(), scenario)
    assert after.knows_target
    assert 0 in after.revealed            # the Director sees the target's spot


def test_goal_is_holding_target():
    scenario = build_scenario("near")
    state = initial_state(scenario)
    assert not is_goal(state, scenario)
    assert is_goal(apply(state, Take("gold_shirt"), scenario), scenario)


def test_plus_ask_gates_takes_when_ambiguous():
    scenario = build_scenario("near")     # two shirts visible to the Director
    state = initial_state(scenario)
    assert scenario.ambiguous
    assert not is_applicable(state, Take("gold_shirt"), scenario, PLUS_ASK)
    asked = apply(state, Ask(), scenario, PLUS_ASK)
    assert is_applicable(asked, Take("gold_shirt"), scenario, PLUS_ASK)
    # The free-running trial mode never gates.
    assert is_applicable(state, Take("gold_shirt"), scenario, None)


def test_minus_ask_removes_ask():
    scenario = build_scenario("near")
    state = initial_state(scenario)
    actions = applicable_actions(state, scenario, MINUS_ASK)
    assert all(not isinstance(a, Ask) for a in actions)
    assert not is_applicable(state, Ask(), scenario, MINUS_ASK)


def test_ambiguous_families_are_exactly_near_far_not():
    flagged = {f for f in FAMILIES if build_scenario(f).ambiguous}
    assert flagged == {"near", "far", "not"}


def test_applicable_actions_order_moves_opens_takes_ask():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    actions = applicable_actions(state, scenario)
    kinds = [type(a).__name__ for a in actions]
    assert kinds == sorted(kinds, key=("Move", "Open", "Take", "Ask").index)
    assert actions[0] == Move(0) and actions[1] == Move(2)


def test_observation_excludes_occluded_content():
    scenario = build_scenario("dist")     # matcher blind to the shelf
    state = initial_state(scenario)
    obs = observation_of(state, MATCHER, scenario)
    assert obs.visible_locations == (0,)
    seen = {iid for iid, _ in obs.surface_items}
    assert seen == {"red_tie"}
    assert not obs.container_items        # the drawer is closed


def test_observation_hides_closed_container_contents():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    obs = observation_of(state, MATCHER, scenario)
    assert ("drawer", 1, False) in obs.containers
    assert not obs.container_items
    opened = apply(state, Open("drawer"), scenario)
    obs2 = observation_of(opened, MATCHER, scenario)
    assert ("coin", "drawer") in obs2.container_items


def test_director_observation_is_fixed_and_informed():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    moved = apply(state, Move(2), scenario)
    first = observation_of(state, DIRECTOR, scenario)
    second = observation_of(moved, DIRECTOR, scenario)
    assert first.facing == second.facing == scenario.director_pose.facing
    assert first.knows_target and second.knows_target


def test_state_hash_distinguishes_and_repeats():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    assert state_hash(state) == state_hash(initial_state(scenario))
    assert state_hash(state) != state_hash(apply(state, Move(0), scenario))


def test_canonical_bytes_order_independent():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    shuffled = dataclasses.replace(
        state,
        surface=tuple(reversed(state.surface)),
        inside=tuple(reversed(state.inside)),
    )
    assert canonical_bytes(state) == canonical_bytes(shuffled)


def test_scenario_json_round_trip(tmp_path):
    for family in FAMILIES:
        scenario = build_scenario(family)
        data = scenario_to_dict(scenario)
        again = scenario_from_dict(json.loads(json.dumps(data)))
        assert again == scenario


def test_scenario_json_key_shape():
    data = scenario_to_dict(build_scenario("base"))
    assert set(data) == {
        "family", "locations", "items", "containers", "poses",
        "occlusion_masks", "target_id", "distractor_id", "director_utterance",
    }
    assert set(data["poses"]) == {"matcher", "director"}


def test_action_dict_round_trip():
    scenario = build_scenario("base")
    state = initial_state(scenario)
    for action in applicable_actions(state, scenario):
        assert action_from_dict(action_to_dict(action)) == action


def test_utterance_reference_parsing():
    assert build_scenario("base").utterance_reference == ("shirt", "gold")
    assert build_scenario("near").utterance_reference == ("shirt", None)


@given(st.integers(min_value=0, max_value=2), st.sets(st.integers(0, 2)))
def test_sight_always_contains_faced_location(facing, mask):
    visible = sight(facing, frozenset(mask), 3)
    assert facing in visible
    assert all(abs(v - facing) <= 1 for v in visible)


@given(st.data())
def test_apply_never_duplicates_or_loses_items(data):
    scenario = build_scenario(data.draw(st.sampled_from(FAMILIES)))
    state = initial_state(scenario)
    for _ in range(data.draw(st.integers(0, 8))):
        options = applicable_actions(state, scenario)
        state = apply(state, data.draw(st.sampled_from(list(options))), scenario)
        placed = [iid for iid, _ in state.surface]
        placed += [iid for iid, _ in state.inside]
        if state.holding:
            placed.append(state.holding)
        assert sorted(placed) == sorted(i.id for i in scenario.items)


def test_container_default_closed():
    assert not Container("c", location=0).is_open
