"""Deterministic Director/Matcher world model.

A scenario is a row of named locations holding items and openable containers,
plus two agents: a fixed Director who issued a request, and a mobile Matcher
who must take the requested item. Each agent sees the adjacency envelope of
the location it faces, thinned by a per-agent occlusion mask. A masked
location stays hidden unless the agent faces it directly, so moving up to a
masked spot is how its contents come into view.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

MATCHER = "matcher"
DIRECTOR = "director"

# Ask question kinds. The planner only ever issues WHICH_ONE; CONTENTS_OF
# exists for free-form agents probing the Director about a location.
WHICH_ONE = "which-one"
CONTENTS_OF = "contents-of"

# Enumeration modes for applicable_actions/apply. None is trial mode: Ask is
# always available and Take is never knowledge-gated.
PLUS_ASK = "plus_ask"
MINUS_ASK = "minus_ask"
VARIANTS = (PLUS_ASK, MINUS_ASK)


class WorldError(Exception):
    """Base class for world model failures."""


class InapplicableAction(WorldError):
    """An action's precondition does not hold in the given state."""


@dataclass(frozen=True)
class Item:
    id: str
    category: str
    attribute: str
    location: int | None = None   # surface placement, exclusive with container
    container: str | None = None

    def __post_init__(self) -> None:
        if (self.location is None) == (self.container is None):
            raise WorldError(f"item {self.id!r} needs exactly one placement")

    @property
    def display_name(self) -> str:
        return f"{self.attribute} {self.category}"


@dataclass(frozen=True)
class Container:
    id: str
    location: int
    is_open: bool = False


@dataclass(frozen=True)
class AgentPose:
    role: str
    facing: int
    mobile: bool


@dataclass(frozen=True)
class Move:
    to: int

@dataclass(frozen=True)
class Open:
    container: str

@dataclass(frozen=True)
class Take:
    item: str

@dataclass(frozen=True)
class Ask:
    question: str = WHICH_ONE
    location: int | None = None   # only CONTENTS_OF carries a location


Action = Move | Open | Take | Ask


def action_to_dict(action: Action) -> dict:
    if isinstance(action, Move):
        return {"type": "move", "to": action.to}
    if isinstance(action, Open):
        return {"type": "open", "container": action.container}
    if isinstance(action, Take):
        return {"type": "take", "item": action.item}
    return {"type": "ask", "question": action.question, "location": action.location}


def action_from_dict(data: dict) -> Action:
    kind = data["type"]
    if kind == "move":
        return Move(data["to"])
    if kind == "open":
        return Open(data["container"])
    if kind == "take":
        return Take(data["item"])
    if kind == "ask":
        return Ask(data.get("question", WHICH_ONE), data.get("location"))
    raise WorldError(f"unknown action type {kind!r}")


@dataclass(frozen=True)
class Scenario:
    family: str
    locations: tuple[str, ...]
    items: tuple[Item, ...]
    containers: tuple[Container, ...]
    matcher_pose: AgentPose
    director_pose: AgentPose
    matcher_mask: frozenset[int]
    director_mask: frozenset[int]
    target_id: str
    distractor_id: str | None
    director_utterance: str

    def item_by_id(self, item_id: str) -> Item:
        for item in self.items:
            if item.id == item_id:
                return item
        raise WorldError(f"unknown item {item_id!r}")

    def container_by_id(self, container_id: str) -> Container:
        for c in self.containers:
            if c.id == container_id:
                return c
        raise WorldError(f"unknown container {container_id!r}")

    def location_index(self, name: str) -> int:
        try:
            return self.locations.index(name)
        except ValueError:
            raise WorldError(f"unknown location {name!r}") from None

    @property
    def target(self) -> Item:
        return self.item_by_id(self.target_id)

    @property
    def distractor(self) -> Item | None:
        return self.item_by_id(self.distractor_id) if self.distractor_id else None

    @property
    def utterance_reference(self) -> tuple[str, str | None]:
        """(category, attribute or None) named by the Director's request."""
        words = set(re.findall(r"[a-z_]+", self.director_utterance.lower()))
        categories = {i.category for i in self.items} & words
        attributes = {i.attribute for i in self.items} & words
        if len(categories) != 1:
            raise WorldError(
                f"utterance {self.director_utterance!r} must name exactly one "
                f"item category, found {sorted(categories)}"
            )
        (category,) = categories
        attribute = min(attributes) if attributes else None
        return category, attribute

    def matches_utterance(self, item: Item) -> bool:
        category, attribute = self.utterance_reference
        if item.category != category:
            return False
        return attribute is None or item.attribute == attribute

    @property
    def ambiguous(self) -> bool:
        """True when the request leaves two or more Director-visible candidates."""
        init = initial_state(self)
        view = observation_of(init, DIRECTOR, self)
        visible = {item_id for item_id, _ in view.surface_items}
        visible |= {item_id for item_id, _ in view.container_items}
        candidates = [
            i for i in self.items if self.matches_utterance(i) and i.id in visible
        ]
        return len(candidates) >= 2


@dataclass(frozen=True)
class WorldState:
    """Dynamic world snapshot; static structure stays in the Scenario.

    All collection fields are kept sorted so equal states compare and hash
    equal, which duplicate detection in search relies on.
    """

    matcher_at: int
    holding: str | None
    surface: tuple[tuple[str, int], ...]   # (item id, location index)
    inside: tuple[tuple[str, str], ...]    # (item id, container id)
    open_containers: frozenset[str]
    knows_target: bool
    revealed: frozenset[int]               # locations learned through Ask


@dataclass(frozen=True)
class Observation:
    """What one agent can currently see and know; never leaks occluded content."""

    role: str
    facing: int
    visible_locations: tuple[int, ...]
    surface_items: tuple[tuple[str, int], ...]
    container_items: tuple[tuple[str, str], ...]
    containers: tuple[tuple[str, int, bool], ...]   # (id, location, is_open)
    holding: str | None
    knows_target: bool
    revealed: tuple[int, ...]


def initial_state(scenario: Scenario) -> WorldState:
    surface = tuple(
        sorted((i.id, i.location) for i in scenario.items if i.location is not None)
    )
    inside = tuple(
        sorted((i.id, i.container) for i in scenario.items if i.container is not None)
    )
    opened = frozenset(c.id for c in scenario.containers if c.is_open)
    return WorldState(
        matcher_at=scenario.matcher_pose.facing,
        holding=None,
        surface=surface,
        inside=inside,
        open_containers=opened,
        knows_target=False,
        revealed=frozenset(),
    )


def sight(facing: int, mask: frozenset[int], n_locations: int) -> tuple[int, ...]:
    """Visible location indices: the +-1 envelope minus the occlusion mask.

    The faced location is always visible, which is what makes masked spots
    inspectable by walking up to them.
    """
    lo = max(facing - 1, 0)
    hi = min(facing + 1, n_locations - 1)
    return tuple(i for i in range(lo, hi + 1) if i == facing or i not in mask)


def item_location(state: WorldState, item_id: str, scenario: Scenario) -> int | None:
    """Current location of an item, or None while the Matcher holds it."""
    if state.holding == item_id:
        return None
    for iid, loc in state.surface:
        if iid == item_id:
            return loc
    for iid, cid in state.inside:
        if iid == item_id:
            return scenario.container_by_id(cid).location
    raise WorldError(f"unknown item {item_id!r}")


def observation_of(state: WorldState, role: str, scenario: Scenario) -> Observation:
    if role == MATCHER:
        facing = state.matcher_at
        mask = scenario.matcher_mask
        holding = state.holding
        knows = state.knows_target
        revealed = tuple(sorted(state.revealed))
    elif role == DIRECTOR:
        facing = scenario.director_pose.facing
        mask = scenario.director_mask
        holding = None
        knows = True   # the Director issued the request
        revealed = ()
    else:
        raise WorldError(f"unknown role {role!r}")

    visible = sight(facing, mask, len(scenario.locations))
    visible_set = set(visible)
    surface_items = tuple(
        (iid, loc) for iid, loc in state.surface if loc in visible_set
    )
    containers = tuple(
        (c.id, c.location, c.id in state.open_containers)
        for c in sorted(scenario.containers, key=lambda c: c.id)
        if c.location in visible_set
    )
    open_visible = {cid for cid, _, is_open in containers if is_open}
    container_items = tuple(
        (iid, cid) for iid, cid in state.inside if cid in open_visible
    )
    return Observation(
        role=role,
        facing=facing,
        visible_locations=visible,
        surface_items=surface_items,
        container_items=container_items,
        containers=containers,
        holding=holding,
        knows_target=knows,
        revealed=revealed,
    )


def _take_gated(state: WorldState, scenario: Scenario, variant: str | None) -> bool:
    return variant == PLUS_ASK and scenario.ambiguous and not state.knows_target


def applicable_actions(
    state: WorldState, scenario: Scenario, variant: str | None = None
) -> list[Action]:
    """Deterministically ordered action set: Move left, Move right, Opens by
    container id, surface Takes then container Takes by item id, Ask last.

    With variant PLUS_ASK, Takes in an ambiguous scenario require a prior Ask;
    with MINUS_ASK the Ask action is removed. The default (None) is trial
    mode: Ask available, Takes ungated.
    """
    actions: list[Action] = []
    at = state.matcher_at
    if at - 1 >= 0:
        actions.append(Move(at - 1))
    if at + 1 < len(scenario.locations):
        actions.append(Move(at + 1))
    for c in sorted(scenario.containers, key=lambda c: c.id):
        if c.location == at and c.id not in state.open_containers:
            actions.append(Open(c.id))
    if state.holding is None and not _take_gated(state, scenario, variant):
        for iid, loc in sorted(state.surface):
            if loc == at:
                actions.append(Take(iid))
        for iid, cid in sorted(state.inside):
            container = scenario.container_by_id(cid)
            if container.location == at and cid in state.open_containers:
                actions.append(Take(iid))
    if variant != MINUS_ASK:
        actions.append(Ask(WHICH_ONE))
    return actions


def is_applicable(
    state: WorldState,
    action: Action,
    scenario: Scenario,
    variant: str | None = None,
) -> bool:
    if isinstance(action, Move):
        return (
            0 <= action.to < len(scenario.locations)
            and abs(action.to - state.matcher_at) == 1
        )
    if isinstance(action, Open):
        try:
            c = scenario.container_by_id(action.container)
        except WorldError:
            return False
        return c.location == state.matcher_at and c.id not in state.open_containers
    if isinstance(action, Take):
        if state.holding is not None or _take_gated(state, scenario, variant):
            return False
        for iid, loc in state.surface:
            if iid == action.item:
                return loc == state.matcher_at
        for iid, cid in state.inside:
            if iid == action.item:
                container = scenario.container_by_id(cid)
                return (
                    container.location == state.matcher_at
                    and cid in state.open_containers
                )
        return False
    if isinstance(action, Ask):
        if variant == MINUS_ASK:
            return False
        if action.question not in (WHICH_ONE, CONTENTS_OF):
            return False
        if action.question == CONTENTS_OF:
            return action.location is not None and 0 <= action.location < len(
                scenario.locations
            )
        return True
    return False


def apply(
    state: WorldState,
    action: Action,
    scenario: Scenario,
    variant: str | None = None,
) -> WorldState:
    """Pure transition function; the input state is never modified."""
    if not is_applicable(state, action, scenario, variant):
        raise InapplicableAction(f"{action} is not applicable")

    if isinstance(action, Move):
        return replace(state, matcher_at=action.to)

    if isinstance(action, Open):
        opened = state.open_containers | {action.container}
        return replace(state, open_containers=opened)

    if isinstance(action, Take):
        surface = tuple(p for p in state.surface if p[0] != action.item)
        inside = tuple(p for p in state.inside if p[0] != action.item)
        return replace(state, holding=action.item, surface=surface, inside=inside)

    # Ask. The Director's spoken answer is a runtime event; the state only
    # records the knowledge gained, so asking twice is a no-op transition.
    if action.question == WHICH_ONE:
        revealed = state.revealed
        target_loc = item_location(state, scenario.target_id, scenario)
        director_sees = sight(
            scenario.director_pose.facing,
            scenario.director_mask,
            len(scenario.locations),
        )
        if target_loc is not None and target_loc in director_sees:
            revealed = revealed | {target_loc}
        return replace(state, knows_target=True, revealed=revealed)
    director_sees = sight(
        scenario.director_pose.facing,
        scenario.director_mask,
        len(scenario.locations),
    )
    if action.location in director_sees:
        return replace(state, revealed=state.revealed | {action.location})
    return state


def is_goal(state: WorldState, scenario: Scenario) -> bool:
    return state.holding == scenario.target_id


def canonical_bytes(state: WorldState) -> bytes:
    """Canonical serialization of a state.

    Byte layout (strings are UTF-8, length-prefixed with one byte; counts are
    one byte; all multi-entry sections are sorted):

        magic b"EP1"
        matcher_at            1 byte
        holding               0x00, or 0x01 + string
        surface count, then per entry: item string + location byte
        inside count, then per entry: item string + container string
        open-container count, then ids
        knows_target          1 byte
        revealed count, then location bytes
    """
    def s(text: str) -> bytes:
        raw = text.encode("utf-8")
        if len(raw) > 255:
            raise WorldError(f"identifier too long: {text!r}")
        return bytes([len(raw)]) + raw

    out = bytearray(b"EP1")
    out.append(state.matcher_at)
    if state.holding is None:
        out.append(0)
    else:
        out.append(1)
        out += s(state.holding)
    out.append(len(state.surface))
    for iid, loc in sorted(state.surface):
        out += s(iid)
        out.append(loc)
    out.append(len(state.inside))
    for iid, cid in sorted(state.inside):
        out += s(iid)
        out += s(cid)
    opened = sorted(state.open_containers)
    out.append(len(opened))
    for cid in opened:
        out += s(cid)
    out.append(1 if state.knows_target else 0)
    revealed = sorted(state.revealed)
    out.append(len(revealed))
    for loc in revealed:
        out.append(loc)
    return bytes(out)


def state_hash(state: WorldState) -> int:
    """Stable 64-bit hash of the canonical serialization."""
    digest = hashlib.blake2b(canonical_bytes(state), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def scenario_to_dict(scenario: Scenario) -> dict:
    items = []
    for i in scenario.items:
        entry: dict = {"id": i.id, "category": i.category, "attribute": i.attribute}
        if i.location is not None:
            entry["location"] = i.location
        else:
            entry["container"] = i.container
        items.append(entry)
    return {
        "family": scenario.family,
        "locations": list(scenario.locations),
        "items": items,
        "containers": [
            {"id": c.id, "location": c.location, "is_open": c.is_open}
            for c in scenario.containers
        ],
        "poses": {
            MATCHER: {
                "facing": scenario.matcher_pose.facing,
                "mobile": scenario.matcher_pose.mobile,
            },
            DIRECTOR: {
                "facing": scenario.director_pose.facing,
                "mobile": scenario.director_pose.mobile,
            },
        },
        "occlusion_masks": {
            MATCHER: sorted(scenario.matcher_mask),
            DIRECTOR: sorted(scenario.director_mask),
        },
        "target_id": scenario.target_id,
        "distractor_id": scenario.distractor_id,
        "director_utterance": scenario.director_utterance,
    }


def scenario_from_dict(data: dict) -> Scenario:
    items = tuple(
        Item(
            id=e["id"],
            category=e["category"],
            attribute=e["attribute"],
            location=e.get("location"),
            container=e.get("container"),
        )
        for e in data["items"]
    )
    containers = tuple(
        Container(id=e["id"], location=e["location"], is_open=e.get("is_open", False))
        for e in data["containers"]
    )
    poses = data["poses"]
    masks = data.get("occlusion_masks", {})
    return Scenario(
        family=data["family"],
        locations=tuple(data["locations"]),
        items=items,
        containers=containers,
        matcher_pose=AgentPose(MATCHER, poses[MATCHER]["facing"], poses[MATCHER].get("mobile", True)),
        director_pose=AgentPose(DIRECTOR, poses[DIRECTOR]["facing"], poses[DIRECTOR].get("mobile", False)),
        matcher_mask=frozenset(masks.get(MATCHER, ())),
        director_mask=frozenset(masks.get(DIRECTOR, ())),
        target_id=data["target_id"],
        distractor_id=data.get("distractor_id"),
        director_utterance=data["director_utterance"],
    )


def save_scenario(scenario: Scenario, path: Path) -> None:
    path.write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def load_scenario(path: Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
