"""The seven reference environment families and their validator.

Each family realizes one visibility/ambiguity configuration of the
Director/Matcher task on a three-location row (desk, shelf, cabinet). The
validator re-derives every family's defining clauses from initial
observations, so a scenario that drifts from its family contract fails loudly
instead of silently skewing results downstream.
"""

from __future__ import annotations

from .world import (
    DIRECTOR,
    MATCHER,
    AgentPose,
    Container,
    Item,
    Scenario,
    WorldError,
    initial_state,
    item_location,
    observation_of,
)

FAMILIES = ("base", "persp", "dist", "near", "far", "hidd", "not")

DISPLAY_NAMES = {
    "base": "Base",
    "persp": "Persp",
    "dist": "Dist",
    "near": "Near",
    "far": "Far",
    "hidd": "Hidd",
    "not": "Not",
}

# Cognitive-demand tags: F1 common-ground filtering, F2 exploring unseen
# perspectives, F3 resolving reference under conflicting distance cues.
DEMAND_TAGS = {
    "base": ("F1",),
    "persp": ("F1",),
    "near": ("F1", "F3"),
    "dist": ("F2",),
    "hidd": ("F2",),
    "not": ("F2",),
    "far": ("F3",),
}

ROW = ("desk", "shelf", "cabinet")


class UnrealizableScenario(WorldError):
    """A scenario violates its family's defining clauses."""


def _pose(role: str, facing: int) -> AgentPose:
    return AgentPose(role=role, facing=facing, mobile=role == MATCHER)


def _scenario(
    family: str,
    matcher_at: int,
    director_at: int,
    items: tuple[Item, ...],
    containers: tuple[Container, ...],
    target: str,
    distractor: str | None,
    utterance: str,
    matcher_mask: frozenset[int] = frozenset(),
) -> Scenario:
    return Scenario(
        family=family,
        locations=ROW,
        items=items,
        containers=containers,
        matcher_pose=_pose(MATCHER, matcher_at),
        director_pose=_pose(DIRECTOR, director_at),
        matcher_mask=matcher_mask,
        director_mask=frozenset(),
        target_id=target,
        distractor_id=distractor,
        director_utterance=utterance,
    )


def build_scenario(family: str) -> Scenario:
    """Construct and validate one reference scenario."""
    if family == "base":
        scenario = _scenario(
            family,
            matcher_at=1,
            director_at=1,
            items=(
                Item("gold_shirt", "shirt", "gold", location=2),
                Item("silver_shirt", "shirt", "silver", location=0),
                Item("book", "book", "blue", location=1),
                Item("coin", "coin", "copper", container="drawer"),
            ),
            containers=(Container("drawer", location=1),),
            target="gold_shirt",
            distractor="silver_shirt",
            utterance="Take the gold shirt.",
        )
    elif family == "persp":
        scenario = _scenario(
            family,
            matcher_at=1,
            director_at=2,
            items=(
                Item("red_tie", "tie", "red", location=1),
                Item("blue_tie", "tie", "blue", location=0),
                Item("brass_key", "key", "brass", container="drawer"),
            ),
            containers=(Container("drawer", location=1),),
            target="red_tie",
            distractor="blue_tie",
            utterance="Take the tie.",
        )
    elif family == "dist":
        scenario = _scenario(
            family,
            matcher_at=0,
            director_at=2,
            items=(
                Item("green_tie", "tie", "green", location=1),
                Item("red_tie", "tie", "red", location=0),
                Item("plant", "plant", "potted", location=2),
                Item("sponge", "sponge", "yellow", container="drawer"),
            ),
            containers=(Container("drawer", location=0),),
            target="green_tie",
            distractor="red_tie",
            utterance="Take the tie.",
            matcher_mask=frozenset({1}),
        )
    elif family == "near":
        scenario = _scenario(
            family,
            matcher_at=1,
            director_at=0,
            items=(
                Item("gold_shirt", "shirt", "gold", location=1),
                Item("silver_shirt", "shirt", "silver", location=0),
                Item("mug", "mug", "white", container="drawer"),
            ),
            containers=(Container("drawer", location=1),),
            target="gold_shirt",
            distractor="silver_shirt",
            utterance="Take the shirt.",
        )
    elif family == "far":
        scenario = _scenario(
            family,
            matcher_at=1,
            director_at=0,
            items=(
                Item("gold_shirt", "shirt", "gold", location=0),
                Item("silver_shirt", "shirt", "silver", location=1),
                Item("lamp", "lamp", "desk", container="drawer"),
            ),
            containers=(Container("drawer", location=1),),
            target="gold_shirt",
            distractor="silver_shirt",
            utterance="Take the shirt.",
        )
    elif family == "hidd":
        scenario = _scenario(
            family,
            matcher_at=0,
            director_at=2,
            items=(
                Item("gold_shirt", "shirt", "gold", location=1),
                Item("candle", "candle", "wax", container="drawer"),
            ),
            containers=(Container("drawer", location=0),),
            target="gold_shirt",
            distractor=None,
            utterance="Take the shirt.",
            matcher_mask=frozenset({1}),
        )
    elif family == "not":
        scenario = _scenario(
            family,
            matcher_at=1,
            director_at=2,
            items=(
                Item("silver_shirt", "shirt", "silver", location=2),
                Item("gold_shirt", "shirt", "gold", location=1),
                Item("box", "box", "cardboard", location=0),
                Item("ribbon", "ribbon", "silk", container="drawer"),
            ),
            containers=(Container("drawer", location=1),),
            target="silver_shirt",
            distractor="gold_shirt",
            utterance="Take the shirt.",
            matcher_mask=frozenset({2}),
        )
    else:
        raise UnrealizableScenario(f"unknown family {family!r}")

    validate_scenario(scenario)
    return scenario


def reference_scenarios() -> tuple[Scenario, ...]:
    return tuple(build_scenario(f) for f in FAMILIES)


class _Clauses:
    """Initial-state facts the per-family checks are phrased in."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        state = initial_state(scenario)
        self.matcher = observation_of(state, MATCHER, scenario)
        self.director = observation_of(state, DIRECTOR, scenario)
        self.target = scenario.target
        self.distractor = scenario.distractor

    def _sees(self, view, item: Item | None) -> bool:
        if item is None:
            return False
        seen = {iid for iid, _ in view.surface_items}
        seen |= {iid for iid, _ in view.container_items}
        return item.id in seen

    def matcher_sees(self, item: Item | None) -> bool:
        return self._sees(self.matcher, item)

    def director_sees(self, item: Item | None) -> bool:
        return self._sees(self.director, item)

    def matcher_distance(self, item: Item) -> int:
        loc = item_location(initial_state(self.scenario), item.id, self.scenario)
        assert loc is not None
        return abs(self.scenario.matcher_pose.facing - loc)

    def utterance_is_explicit(self) -> bool:
        return self.scenario.utterance_reference[1] is not None


def _require(condition: bool, family: str, clause: str) -> None:
    if not condition:
        raise UnrealizableScenario(f"{family}: {clause}")


def validate_scenario(scenario: Scenario) -> None:
    """Check structural soundness plus the family's defining clauses."""
    _validate_structure(scenario)
    checker = _FAMILY_CHECKS.get(scenario.family)
    if checker is not None:
        checker(_Clauses(scenario))


def _validate_structure(scenario: Scenario) -> None:
    n = len(scenario.locations)
    _require(n >= 1, scenario.family, "at least one location")
    _require(
        len(set(scenario.locations)) == n, scenario.family, "location names unique"
    )
    ids = [i.id for i in scenario.items] + [c.id for c in scenario.containers]
    _require(len(set(ids)) == len(ids), scenario.family, "item/container ids unique")
    for item in scenario.items:
        if item.location is not None:
            _require(
                0 <= item.location < n, scenario.family, f"{item.id} placed in range"
            )
        else:
            _require(
                any(c.id == item.container for c in scenario.containers),
                scenario.family,
                f"{item.id} placed in a known container",
            )
    for c in scenario.containers:
        _require(0 <= c.location < n, scenario.family, f"{c.id} placed in range")
    for role, mask in ((MATCHER, scenario.matcher_mask), (DIRECTOR, scenario.director_mask)):
        _require(
            all(0 <= i < n for i in mask),
            scenario.family,
            f"{role} occlusion mask within the row",
        )
    _require(
        0 <= scenario.matcher_pose.facing < n
        and 0 <= scenario.director_pose.facing < n,
        scenario.family,
        "poses within the row",
    )
    _require(
        scenario.matcher_pose.mobile and not scenario.director_pose.mobile,
        scenario.family,
        "only the Matcher is mobile",
    )
    item_ids = {i.id for i in scenario.items}
    _require(scenario.target_id in item_ids, scenario.family, "target names an item")
    if scenario.distractor_id is not None:
        _require(
            scenario.distractor_id in item_ids,
            scenario.family,
            "distractor names an item",
        )
        _require(
            scenario.distractor_id != scenario.target_id,
            scenario.family,
            "distractor differs from target",
        )
        distractor = scenario.item_by_id(scenario.distractor_id)
        _require(
            distractor.category == scenario.target.category,
            scenario.family,
            "distractor shares the target's category",
        )
    scenario.utterance_reference  # raises when the request names no known item


def _check_base(c: _Clauses) -> None:
    f = "base"
    _require(c.matcher_sees(c.target) and c.matcher_sees(c.distractor), f,
             "Matcher sees both candidates")
    _require(c.director_sees(c.target) and c.director_sees(c.distractor), f,
             "Director sees both candidates")
    _require(c.utterance_is_explicit(), f, "request names the attribute")
    _require(not c.scenario.ambiguous, f, "explicit request is unambiguous")


def _check_persp(c: _Clauses) -> None:
    f = "persp"
    _require(c.matcher_sees(c.target) and c.matcher_sees(c.distractor), f,
             "Matcher sees both candidates")
    _require(c.director_sees(c.target), f, "Director sees the target")
    _require(not c.director_sees(c.distractor), f,
             "Director cannot see the distractor")
    _require(c.matcher_distance(c.target) <= 1 and c.matcher_distance(c.distractor) <= 1,
             f, "Matcher close to both candidates")
    _require(not c.scenario.ambiguous, f,
             "common ground leaves a single candidate")


def _check_dist(c: _Clauses) -> None:
    f = "dist"
    _require(c.matcher_sees(c.distractor), f, "Matcher sees the distractor")
    _require(not c.matcher_sees(c.target), f, "Matcher cannot see the target yet")
    _require(c.director_sees(c.target), f, "Director sees the target")
    _require(not c.director_sees(c.distractor), f,
             "Director cannot see the distractor")
    _require(not c.scenario.ambiguous, f,
             "Director-visible candidates are unique")


def _check_near(c: _Clauses) -> None:
    f = "near"
    _require(c.director_sees(c.target) and c.director_sees(c.distractor), f,
             "Director sees both candidates")
    _require(c.matcher_sees(c.target), f, "Matcher sees the target")
    _require(c.matcher_distance(c.target) < c.matcher_distance(c.distractor), f,
             "Matcher close to the target, distant from the distractor")
    _require(c.scenario.ambiguous, f, "request is ambiguous")


def _check_far(c: _Clauses) -> None:
    f = "far"
    _require(c.director_sees(c.target) and c.director_sees(c.distractor), f,
             "Director sees both candidates")
    _require(c.matcher_distance(c.target) > c.matcher_distance(c.distractor), f,
             "Matcher distant from the target, close to the distractor")
    _require(c.scenario.ambiguous, f, "request is ambiguous")


def _check_hidd(c: _Clauses) -> None:
    f = "hidd"
    _require(c.director_sees(c.target), f, "Director sees the target")
    _require(not c.matcher_sees(c.target), f, "Matcher cannot see the target")
    _require(c.distractor is None, f, "no distractor in this family")
    matcher_seen = {iid for iid, _ in c.matcher.surface_items}
    category = c.scenario.utterance_reference[0]
    _require(
        all(c.scenario.item_by_id(i).category != category for i in matcher_seen),
        f,
        "no requested-category item in the Matcher's initial view",
    )
    _require(not c.scenario.ambiguous, f, "single candidate once found")


def _check_not(c: _Clauses) -> None:
    f = "not"
    _require(c.matcher_sees(c.distractor), f, "Matcher sees the distractor")
    _require(not c.matcher_sees(c.target), f, "Matcher cannot see the target")
    _require(c.director_sees(c.target) and c.director_sees(c.distractor), f,
             "Director sees both candidates")
    _require(c.scenario.ambiguous, f, "request is ambiguous")
    # The trap: the only visible category match is the wrong one.
    category = c.scenario.utterance_reference[0]
    visible_matches = [
        iid for iid, _ in c.matcher.surface_items
        if c.scenario.item_by_id(iid).category == category
    ]
    _require(visible_matches == [c.distractor.id], f,
             "only visible category match is the distractor")


_FAMILY_CHECKS = {
    "base": _check_base,
    "persp": _check_persp,
    "dist": _check_dist,
    "near": _check_near,
    "far": _check_far,
    "hidd": _check_hidd,
    "not": _check_not,
}
