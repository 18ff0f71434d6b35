from __future__ import annotations

import dataclasses

import pytest

from epiplan.scenarios import (
    DEMAND_TAGS,
    DISPLAY_NAMES,
    FAMILIES,
    UnrealizableScenario,
    build_scenario,
    reference_scenarios,
    validate_scenario,
)
from epiplan.world import MATCHER, DIRECTOR, initial_state, observation_of, sight


def visible_items(scenario, role):
    obs = observation_of(initial_state(scenario), role, scenario)
    return {iid for iid, _ in obs.surface_items}


def test_every_family_builds_and_validates():
    for family in FAMILIES:
        validate_scenario(build_scenario(family))


def test_reference_scenarios_cover_all_families():
    scenarios = reference_scenarios()
    assert tuple(s.family for s in scenarios) == FAMILIES


def test_display_names_and_tags_align_with_families():
    assert set(DISPLAY_NAMES) == set(FAMILIES)
    assert set(DEMAND_TAGS) == set(FAMILIES)
    assert DEMAND_TAGS["near"] == ("F1", "F3")


def test_base_both_see_everything_and_utterance_is_explicit():
    scenario = build_scenario("base")
    n = len(scenario.locations)
    for pose, mask in (
        (scenario.matcher_pose, scenario.matcher_mask),
        (scenario.director_pose, scenario.director_mask),
    ):
        assert sight(pose.facing, mask, n) == tuple(range(n))
    assert scenario.utterance_reference[1] is not None


def test_persp_director_sees_target_only_and_one_area_less():
    scenario = build_scenario("persp")
    assert visible_items(scenario, MATCHER) >= {"red_tie", "blue_tie"}
    director = visible_items(scenario, DIRECTOR)
    assert scenario.target_id in director
    assert scenario.distractor_id not in director
    n = len(scenario.locations)
    matcher_view = sight(scenario.matcher_pose.facing, scenario.matcher_mask, n)
    director_view = sight(scenario.director_pose.facing, scenario.director_mask, n)
    assert len(director_view) == len(matcher_view) - 1


def test_dist_split_views():
    scenario = build_scenario("dist")
    matcher = visible_items(scenario, MATCHER)
    director = visible_items(scenario, DIRECTOR)
    assert scenario.distractor_id in matcher
    assert scenario.target_id not in matcher
    assert scenario.target_id in director
    n = len(scenario.locations)
    matcher_view = set(sight(scenario.matcher_pose.facing, scenario.matcher_mask, n))
    director_view = set(sight(scenario.director_pose.facing, scenario.director_mask, n))
    assert matcher_view - director_view and director_view - matcher_view


def test_near_and_far_distance_pattern():
    near = build_scenario("near")
    far = build_scenario("far")
    for scenario in (near, far):
        assert visible_items(scenario, MATCHER) >= {
            scenario.target_id, scenario.distractor_id,
        }
    def dist(scenario, item_id):
        item = scenario.item_by_id(item_id)
        return abs(item.location - scenario.matcher_pose.facing)
    assert dist(near, near.target_id) < dist(near, near.distractor_id)
    assert dist(far, far.target_id) > dist(far, far.distractor_id)


def test_hidd_target_unseen_by_matcher_no_distractor():
    scenario = build_scenario("hidd")
    assert scenario.distractor_id is None
    assert scenario.target_id not in visible_items(scenario, MATCHER)
    assert scenario.target_id in visible_items(scenario, DIRECTOR)


def test_not_matcher_sees_only_the_distractor_match():
    scenario = build_scenario("not")
    matcher = visible_items(scenario, MATCHER)
    matches = {
        i.id for i in scenario.items
        if scenario.matches_utterance(i) and i.id in matcher
    }
    assert matches == {scenario.distractor_id}
    director = visible_items(scenario, DIRECTOR)
    assert {scenario.target_id, scenario.distractor_id} <= director


def test_every_family_director_sees_target():
    for family in FAMILIES:
        scenario = build_scenario(family)
        assert scenario.target_id in visible_items(scenario, DIRECTOR), family


def test_every_family_has_a_container_at_matcher_start():
    for family in FAMILIES:
        scenario = build_scenario(family)
        starts = {c.location for c in scenario.containers}
        assert scenario.matcher_pose.facing in starts, family


def test_validation_rejects_broken_base():
    scenario = build_scenario("base")
    # Hide the target from the Director: Base demands shared full view.
    broken = dataclasses.replace(scenario, director_mask=frozenset({2}))
    with pytest.raises(UnrealizableScenario):
        validate_scenario(broken)


def test_validation_rejects_broken_not():
    scenario = build_scenario("not")
    # Unmask the Matcher: it would see the target, defeating the setup.
    broken = dataclasses.replace(scenario, matcher_mask=frozenset())
    with pytest.raises(UnrealizableScenario):
        validate_scenario(broken)


def test_validation_rejects_missing_target():
    scenario = build_scenario("base")
    broken = dataclasses.replace(scenario, target_id="nonexistent")
    with pytest.raises(UnrealizableScenario):
        validate_scenario(broken)


def test_unknown_family_gets_structure_checks_only():
    scenario = dataclasses.replace(build_scenario("base"), family="custom")
    validate_scenario(scenario)
    broken = dataclasses.replace(scenario, target_id="nonexistent")
    with pytest.raises(UnrealizableScenario):
        validate_scenario(broken)


def test_unknown_family_id_raises():
    with pytest.raises(UnrealizableScenario):
        build_scenario("nope")
