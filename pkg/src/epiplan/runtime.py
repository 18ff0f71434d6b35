"""Interactive trial loop: action grammar, Director replies, agent policies.

A trial runs the Matcher against a scenario in free mode (asking allowed,
taking never gated) until the first Take or a step budget runs out. Replies
that do not parse or are not applicable are rejected with feedback and still
consume a step.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .world import (
    CONTENTS_OF,
    MATCHER,
    PLUS_ASK,
    WHICH_ONE,
    Action,
    Ask,
    Move,
    Observation,
    Open,
    Scenario,
    Take,
    WorldError,
    WorldState,
    action_from_dict,
    action_to_dict,
    applicable_actions,
    apply,
    initial_state,
    is_applicable,
    item_location,
    observation_of,
    sight,
)

TRIAL_SCHEMA = "epiplan.trial/1"


class ParseError(WorldError):
    """Raised when free text cannot be read as exactly one action."""


class PolicyError(WorldError):
    """Raised by a policy that cannot produce another reply."""


def render_action(action: Action, scenario: Scenario) -> str:
    """Canonical text form; parse_action maps it back to the same action."""
    if isinstance(action, Move):
        return f"move {scenario.locations[action.to]}"
    if isinstance(action, Open):
        return f"open {action.container}"
    if isinstance(action, Take):
        return f"take {action.item}"
    if isinstance(action, Ask):
        if action.question == CONTENTS_OF:
            return f"ask about {scenario.locations[action.location]}"
        return "ask which one"
    raise WorldError(f"cannot render {action!r}")


_VERBS = {"move", "go", "open", "take", "grab", "pick", "ask"}
_FILLER = {"the", "a", "an", "to", "at", "up", "please", "that", "this"}
_RELATIVE = {"left", "right", "back", "forward", "forwards", "backwards"}
_ACTION_PREFIX = re.compile(r"^\s*action\s*\d*\s*[:.]\s*", re.IGNORECASE)


def parse_action(text: str, scenario: Scenario) -> Action:
    """Read one action from free text.

    Tolerates case, articles, an "Action:" prefix, and spaces for
    underscores in object names. A category word alone ("take the shirt")
    works only when it picks out a single item. Rejects relative moves and
    text naming two different actions.
    """
    s = _ACTION_PREFIX.sub("", text.strip())
    s = s.lower().replace("_", " ")
    s = re.sub(r"[.!?,;]+(?=\s|$)", "", s).strip()
    if not s:
        raise ParseError("empty action text")
    words = s.split()
    verb_hits = [w for w in words if w in _VERBS]
    if not verb_hits:
        raise ParseError(f"no action verb in {text.strip()!r}")
    if len(set(verb_hits)) > 1:
        raise ParseError(f"more than one action named in {text.strip()!r}")
    verb = verb_hits[0]
    rest = [w for w in words[words.index(verb) + 1:] if w not in _FILLER]
    if verb in ("move", "go"):
        return _parse_move(rest, scenario, text)
    if verb == "open":
        return _parse_open(rest, scenario, text)
    if verb in ("take", "grab", "pick"):
        return _parse_take(rest, scenario, text)
    return _parse_ask(rest, scenario, text)


def _parse_move(rest: list[str], scenario: Scenario, text: str) -> Move:
    if any(w in _RELATIVE for w in rest):
        raise ParseError("relative moves are not supported; name the place")
    places = [i for i, name in enumerate(scenario.locations) if name in rest]
    if len(places) == 1:
        return Move(places[0])
    if not places:
        raise ParseError(f"no known place named in {text.strip()!r}")
    raise ParseError(f"more than one place named in {text.strip()!r}")


def _parse_open(rest: list[str], scenario: Scenario, text: str) -> Open:
    hits = [c.id for c in scenario.containers
            if all(w in rest for w in c.id.split("_"))]
    if len(hits) == 1:
        return Open(hits[0])
    if not hits:
        raise ParseError(f"no known container named in {text.strip()!r}")
    raise ParseError(f"more than one container named in {text.strip()!r}")


def _parse_take(rest: list[str], scenario: Scenario, text: str) -> Take:
    exact = [i.id for i in scenario.items
             if all(w in rest for w in i.id.split("_"))]
    if len(exact) == 1:
        return Take(exact[0])
    by_category = [i for i in scenario.items if i.category in rest]
    if len(by_category) > 1:
        narrowed = [i for i in by_category if i.attribute in rest]
        if len(narrowed) == 1:
            return Take(narrowed[0].id)
        raise ParseError(f"the reference in {text.strip()!r} fits several items")
    if len(by_category) == 1:
        return Take(by_category[0].id)
    raise ParseError(f"no known item named in {text.strip()!r}")


def _parse_ask(rest: list[str], scenario: Scenario, text: str) -> Ask:
    if "about" in rest:
        tail = rest[rest.index("about") + 1:]
        places = [i for i, name in enumerate(scenario.locations) if name in tail]
        if len(places) != 1:
            raise ParseError(f"ask about needs exactly one place in {text.strip()!r}")
        return Ask(question=CONTENTS_OF, location=places[0])
    return Ask()


@dataclass(frozen=True)
class AnswerEvent:
    """A Director reply: the structured content plus its rendered text."""

    question: Ask
    attribute: str | None
    location: int | None
    visible: bool
    text: str


def respond(question: Ask, state: WorldState, scenario: Scenario) -> AnswerEvent:
    """The Director's scripted reply; truthful and view-limited."""
    director_view = sight(
        scenario.director_pose.facing, scenario.director_mask, len(scenario.locations)
    )
    if question.question == WHICH_ONE:
        target = scenario.target
        loc = item_location(state, target.id, scenario)
        if loc is None:
            return AnswerEvent(question, target.attribute, None, False,
                               "You are already holding it.")
        place = scenario.locations[loc]
        if loc not in director_view:
            return AnswerEvent(
                question, target.attribute, None, False,
                f"The {target.attribute} one; I cannot see it from here.",
            )
        return AnswerEvent(question, target.attribute, loc, True,
                           f"The {target.attribute} one, on the {place}.")
    place = scenario.locations[question.location]
    if question.location not in director_view:
        return AnswerEvent(question, None, None, False,
                           f"I cannot see the {place} from here.")
    lines = []
    for container in scenario.containers:
        if container.location != question.location:
            continue
        inside = sorted(iid for iid, cid in state.inside if cid == container.id)
        held = ", ".join(inside) if inside else "nothing"
        lines.append(f"The {container.id} at the {place} holds {held}.")
    if not lines:
        return AnswerEvent(question, None, question.location, True,
                           f"There is no container at the {place}.")
    return AnswerEvent(question, None, question.location, True, " ".join(lines))


def render_observation(obs: Observation, scenario: Scenario) -> str:
    place = scenario.locations[obs.facing]
    visible = sorted(obs.visible_locations)
    names = [scenario.locations[i] for i in visible]
    parts = [f"You are at the {place}.",
             "You can see the " + _join(names) + "."]
    for loc in visible:
        here = sorted(iid for iid, l in obs.surface_items if l == loc)
        bits = [f"a {iid.replace('_', ' ')}" for iid in here]
        for cid, cloc, is_open in sorted(obs.containers):
            if cloc != loc:
                continue
            if is_open:
                inside = sorted(i for i, c in obs.container_items if c == cid)
                held = _join([i.replace("_", " ") for i in inside]) if inside else "nothing"
                bits.append(f"an open {cid} holding {held}")
            else:
                bits.append(f"a closed {cid}")
        if bits:
            parts.append(f"On the {scenario.locations[loc]}: {_join(bits)}.")
    if obs.holding:
        parts.append(f"You are holding the {obs.holding.replace('_', ' ')}.")
    else:
        parts.append("Your hands are free.")
    return " ".join(parts)


def _join(names: list[str]) -> str:
    if not names:
        return ""
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


INSTRUCTIONS = (
    "You are the Matcher in a room with a row of places. The Director tells "
    "you which item to take but sees the room from a different spot. Reply "
    "with one Thought line and one Action line each turn. Actions: "
    '"move <place>", "open <container>", "take <item>", "ask which one".'
)


def render_trial_prompt(
    scenario: Scenario,
    examples_text: str,
    transcript: list[str],
    obs: Observation,
    feedback: str | None,
) -> str:
    parts = [INSTRUCTIONS]
    if examples_text:
        parts.append(examples_text)
    parts.append(f'Director: "{scenario.director_utterance}"')
    parts.append("Observation: " + render_observation(obs, scenario))
    parts.extend(transcript)
    if feedback:
        parts.append("Feedback: " + feedback)
    parts.append("Thought:")
    return "\n".join(parts)


@dataclass(frozen=True)
class TrialView:
    """Everything a policy may look at when choosing its next reply."""

    prompt: str
    observation: Observation
    applicable: tuple[str, ...]
    step: int


class Policy(Protocol):
    label: str

    def propose(self, view: TrialView) -> str: ...


class Completer(Protocol):
    def complete(self, prompt: str) -> str: ...


@dataclass
class RemoteLLM:
    """Forwards the rendered prompt to a completion backend."""

    backend: Completer
    label: str = "LLM"

    def propose(self, view: TrialView) -> str:
        return self.backend.complete(view.prompt)


class PlannerOracle:
    """Replays an optimal plan for the asking-gated task."""

    label = "Planner"

    def __init__(self, scenario: Scenario, variant: str = PLUS_ASK):
        from .pddl.emit import core_action_of, grounded_task
        from .search import astar

        plan, _tree = astar(grounded_task(scenario, variant))
        if plan is None:
            raise PolicyError(f"no plan for {scenario.family} {variant}")
        self._labels = [
            render_action(core_action_of(label, scenario), scenario)
            for label in plan
        ]
        self._cursor = 0

    def propose(self, view: TrialView) -> str:
        if self._cursor >= len(self._labels):
            raise PolicyError("plan exhausted")
        label = self._labels[self._cursor]
        self._cursor += 1
        return f"Thought: following the plan.\nAction: {label}"


@dataclass
class ScriptedPolicy:
    """Plays back a fixed list of action lines."""

    lines: list[str]
    label: str = "Scripted"
    _cursor: int = field(default=0, repr=False)

    def propose(self, view: TrialView) -> str:
        if self._cursor >= len(self.lines):
            raise PolicyError("script exhausted")
        line = self.lines[self._cursor]
        self._cursor += 1
        return f"Action: {line}"


class RandomPolicy:
    """Uniform choice among currently applicable actions."""

    label = "Random"

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def propose(self, view: TrialView) -> str:
        return "Action: " + self._rng.choice(list(view.applicable))


def greedy_script(scenario: Scenario, limit: int = 12) -> list[str]:
    """A straight-line baseline: grab the nearest visible utterance match.

    With nothing matching in sight it walks toward the nearest unvisited
    place. It never asks, so it takes whatever the utterance seems to name
    from where it stands.
    """
    state = initial_state(scenario)
    lines: list[str] = []
    visited = {state.matcher_at}
    for _ in range(limit):
        obs = observation_of(state, MATCHER, scenario)
        matches: list[tuple[int, str, str | None]] = []
        for iid, loc in obs.surface_items:
            if scenario.matches_utterance(scenario.item_by_id(iid)):
                matches.append((loc, iid, None))
        for iid, cid in obs.container_items:
            if scenario.matches_utterance(scenario.item_by_id(iid)):
                matches.append((scenario.container_by_id(cid).location, iid, cid))
        action: Action
        if matches:
            loc, iid, _cid = min(
                matches, key=lambda m: (abs(m[0] - state.matcher_at), m[1])
            )
            if loc == state.matcher_at:
                action = Take(iid)
            else:
                step = 1 if loc > state.matcher_at else -1
                action = Move(state.matcher_at + step)
        else:
            unseen = [i for i in range(len(scenario.locations)) if i not in visited]
            if not unseen:
                closed = [c for c in scenario.containers
                          if c.location == state.matcher_at
                          and c.id not in state.open_containers]
                if not closed:
                    break
                action = Open(closed[0].id)
            else:
                goal = min(unseen, key=lambda i: abs(i - state.matcher_at))
                step = 1 if goal > state.matcher_at else -1
                action = Move(state.matcher_at + step)
        lines.append(render_action(action, scenario))
        state = apply(state, action, scenario)
        visited.add(state.matcher_at)
        if isinstance(action, Take):
            break
    return lines


@dataclass(frozen=True)
class Limits:
    max_steps: int = 12


@dataclass(frozen=True)
class StepLog:
    index: int
    observation: str                  # rendered view shown before this reply
    raw_reply: str
    thought: str | None
    action_text: str
    action: Action | None
    accepted: bool
    feedback: str | None
    director_answer: str | None


@dataclass(frozen=True)
class TrialLog:
    family: str
    policy: str
    strategy: str | None              # example strategy behind the policy, if any
    variant: str | None               # example ask-variant behind the policy
    steps: tuple[StepLog, ...]
    outcome: str                      # "success", "wrong-take-first", "step-limit"
    first_take: str | None
    n_steps: int
    n_asks: int

    @property
    def first_take_correct(self) -> bool:
        return self.outcome == "success"


def _split_reply(raw: str) -> tuple[str | None, str]:
    thought = None
    action_text = ""
    for line in raw.splitlines():
        stripped = line.strip()
        low = stripped.lower()
        if low.startswith("thought"):
            thought = re.sub(r"^thought\s*\d*\s*[:.]\s*", "", stripped,
                             flags=re.IGNORECASE)
        elif low.startswith("action"):
            action_text = stripped
    if not action_text:
        tail = [l for l in raw.splitlines() if l.strip()]
        action_text = tail[-1] if tail else ""
    return thought, action_text


_REPAIR_NOTE = (
    "Your last reply could not be read as an action. Reply again with exactly "
    'one line of the form "Action: <action>".'
)


def _propose_parsed(
    policy: Policy, view: TrialView, scenario: Scenario
) -> tuple[str, str | None, str, Action]:
    """One policy turn with a single repair re-prompt on unreadable output."""
    raw = policy.propose(view)
    thought, action_text = _split_reply(raw)
    try:
        return raw, thought, action_text, parse_action(action_text, scenario)
    except ParseError as first:
        repair_view = TrialView(
            prompt=view.prompt + "\n" + _REPAIR_NOTE,
            observation=view.observation,
            applicable=view.applicable,
            step=view.step,
        )
        raw = policy.propose(repair_view)
        thought, action_text = _split_reply(raw)
        try:
            return raw, thought, action_text, parse_action(action_text, scenario)
        except ParseError:
            raise PolicyError(f"unreadable reply after repair: {first}") from first


def run_trial(
    scenario: Scenario,
    policy: Policy,
    limits: Limits = Limits(),
    examples_text: str = "",
    strategy: str | None = None,
    variant: str | None = None,
) -> TrialLog:
    """One episode; every policy turn, accepted or rejected, is a step.

    Unreadable policy output gets one repair re-prompt, then PolicyError.
    Parsed but inapplicable actions are rejected with feedback and the trial
    continues. The trial ends at the first Take or at the step budget.
    """
    state = initial_state(scenario)
    transcript: list[str] = []
    steps: list[StepLog] = []
    feedback: str | None = None
    outcome = "step-limit"
    first_take: str | None = None
    n_asks = 0
    for index in range(limits.max_steps):
        obs = observation_of(state, MATCHER, scenario)
        obs_text = render_observation(obs, scenario)
        labels = tuple(
            render_action(a, scenario) for a in applicable_actions(state, scenario)
        )
        prompt = render_trial_prompt(scenario, examples_text, transcript, obs, feedback)
        view = TrialView(prompt=prompt, observation=obs, applicable=labels, step=index)
        raw, thought, action_text, action = _propose_parsed(policy, view, scenario)
        answer: AnswerEvent | None = None
        rejection: str | None = None
        if not is_applicable(state, action, scenario):
            rejection = "That action is not possible right now."
            transcript.append(
                f"Action: {render_action(action, scenario)} (rejected)"
            )
        else:
            if isinstance(action, Ask):
                answer = respond(action, state, scenario)
                n_asks += 1
            state = apply(state, action, scenario)
            transcript.append(f"Action: {render_action(action, scenario)}")
            if answer:
                transcript.append(f'Director: "{answer.text}"')
            obs_after = observation_of(state, MATCHER, scenario)
            transcript.append(
                "Observation: " + render_observation(obs_after, scenario)
            )
        feedback = rejection
        steps.append(StepLog(
            index=index,
            observation=obs_text,
            raw_reply=raw,
            thought=thought,
            action_text=action_text,
            action=action,
            accepted=rejection is None,
            feedback=rejection,
            director_answer=answer.text if answer else None,
        ))
        if rejection is None and isinstance(action, Take):
            first_take = action.item
            outcome = (
                "success" if first_take == scenario.target_id else "wrong-take-first"
            )
            break
    return TrialLog(
        family=scenario.family,
        policy=policy.label,
        strategy=strategy,
        variant=variant,
        steps=tuple(steps),
        outcome=outcome,
        first_take=first_take,
        n_steps=len(steps),
        n_asks=n_asks,
    )


def trial_to_dict(log: TrialLog) -> dict:
    return {
        "schema": TRIAL_SCHEMA,
        "family": log.family,
        "policy": log.policy,
        "strategy": log.strategy,
        "variant": log.variant,
        "outcome": log.outcome,
        "first_take": log.first_take,
        "n_steps": log.n_steps,
        "n_asks": log.n_asks,
        "steps": [
            {
                "index": s.index,
                "observation": s.observation,
                "raw_reply": s.raw_reply,
                "thought": s.thought,
                "action_text": s.action_text,
                "action": action_to_dict(s.action) if s.action else None,
                "accepted": s.accepted,
                "feedback": s.feedback,
                "director_answer": s.director_answer,
            }
            for s in log.steps
        ],
    }


def trial_from_dict(data: dict) -> TrialLog:
    return TrialLog(
        family=data["family"],
        policy=data["policy"],
        strategy=data["strategy"],
        variant=data["variant"],
        outcome=data["outcome"],
        first_take=data["first_take"],
        n_steps=data["n_steps"],
        n_asks=data["n_asks"],
        steps=tuple(
            StepLog(
                index=s["index"],
                observation=s["observation"],
                raw_reply=s["raw_reply"],
                thought=s["thought"],
                action_text=s["action_text"],
                action=action_from_dict(s["action"]) if s["action"] else None,
                accepted=s["accepted"],
                feedback=s["feedback"],
                director_answer=s["director_answer"],
            )
            for s in data["steps"]
        ),
    )


def save_trial(log: TrialLog, path: Path) -> None:
    Path(path).write_text(json.dumps(trial_to_dict(log), indent=2) + "\n")


def load_trial(path: Path) -> TrialLog:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != TRIAL_SCHEMA:
        raise WorldError(f"unexpected schema in {path}")
    return trial_from_dict(data)
