"""Turn trajectories and decision records into thought-action examples.

A PromptPack pairs one strategy prompt with Matcher-visible context and the
action payload. A backend completes it; the completion must come back as
strictly alternating Thought/Action lines whose actions match the payload
exactly. Examples land in a content-addressed store, one JSON file each.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import httpx

from .extraction import Alternative, DecisionRecord, Trajectory
from .runtime import ParseError, parse_action, render_action, render_observation
from .scenarios import FAMILIES, build_scenario
from .world import (
    MATCHER,
    VARIANTS,
    Action,
    Scenario,
    WorldError,
    initial_state,
    observation_of,
)

EXAMPLE_SCHEMA = "epiplan.example/1"

# The three strategy prompts, reproduced character for character.
STRATEGY_PROMPTS = {
    "G": (
        "Given the sequence of actions the agent executed until reaching its "
        "goal in a specific scenario, reconstruct the agent’s reasoning "
        "step by step. Explain how each action contributed to achieving the "
        "goal."
    ),
    "E": (
        "Given a sequence of actions taken until the agent reaches an "
        "informative state (i.e., a state that provides new information), "
        "reconstruct the agent’s reasoning step by step. Describe how "
        "each action led to gaining information."
    ),
    "L": (
        "Given the agent’s last action, the set of possible actions, and "
        "the correct action in a specific scenario, explain the agent’s "
        "reasoning behind selecting that particular action over the "
        "alternatives."
    ),
}

FORMAT_INSTRUCTIONS = (
    "Write the reasoning as strictly alternating lines:\n"
    "Thought: <one sentence of reasoning>\n"
    "Action: <the action, exactly as given>\n"
    "Produce one Thought line before each Action line and nothing else. Keep "
    "every action exactly as listed; do not add, drop, or reword actions."
)

STRATEGIES = ("G", "E", "L")


class StrategyMismatch(WorldError):
    """The payload kind does not fit the requested strategy."""


class ValidationError(WorldError):
    """The payload is unusable (for instance, an empty action sequence)."""


class ActionDriftError(WorldError):
    """The backend altered the action sequence it was asked to explain."""


class BackendError(WorldError):
    """Transport or configuration failure while reaching a backend."""


class MissingFamily(WorldError):
    """A leave-one-out selection found no examples for some family."""


@dataclass(frozen=True)
class PromptPack:
    """Deterministic prompt assembly for one strategy and one payload."""

    strategy: str
    scenario: Scenario
    variant: str
    context: str
    payload: str
    expected: tuple[Action, ...]
    payload_ref: str
    template_id: str

    def text(self) -> str:
        return "\n\n".join((
            STRATEGY_PROMPTS[self.strategy],
            self.context,
            self.payload,
            FORMAT_INSTRUCTIONS,
        ))


@dataclass(frozen=True)
class ThoughtActionExample:
    """An ordered thought-action chain plus where it came from."""

    family: str
    strategy: str
    variant: str
    pairs: tuple[tuple[str, str], ...]   # (thought, canonical action text)
    backend_id: str
    template_id: str
    payload_ref: str
    timestamp: str


def _scene_context(scenario: Scenario) -> str:
    obs = observation_of(initial_state(scenario), MATCHER, scenario)
    return "\n".join((
        f'The Director says: "{scenario.director_utterance}"',
        "Initial view: " + render_observation(obs, scenario),
        "Objective: take the item the Director means.",
    ))


def build_prompt(
    payload: Trajectory | DecisionRecord, scenario: Scenario, strategy: str
) -> PromptPack:
    """Assemble the pack for one payload; byte-stable for identical inputs."""
    if strategy not in STRATEGIES:
        raise StrategyMismatch(f"unknown strategy {strategy!r}")
    if isinstance(payload, Trajectory):
        if strategy == "L":
            raise StrategyMismatch("L wants a decision record, got a trajectory")
        if payload.kind != strategy:
            raise StrategyMismatch(
                f"{strategy} pack given a {payload.kind}-type trajectory"
            )
        if not payload.steps:
            raise ValidationError("empty trajectory")
        lines = [
            f"{i}. {step.label}" for i, step in enumerate(payload.steps, start=1)
        ]
        body = "Action sequence:\n" + "\n".join(lines)
        expected = tuple(step.action for step in payload.steps)
        ref = (
            f"goal-path:{payload.terminal_node}"
            if strategy == "G"
            else f"informative-node:{payload.terminal_node}"
        )
        variant = payload.variant
    else:
        if strategy != "L":
            raise StrategyMismatch(f"{strategy} pack given a decision record")
        labels = [payload.chosen.label] + [a.label for a in payload.alternatives]
        body = "\n".join((
            f"Last action: {payload.arrived_by or '(start of the episode)'}",
            "Possible actions: " + " | ".join(labels),
            f"Correct action: {payload.chosen.label}",
        ))
        expected = (payload.chosen.action,)
        ref = f"decision-node:{payload.node}"
        variant = payload.variant
    return PromptPack(
        strategy=strategy,
        scenario=scenario,
        variant=variant,
        context=_scene_context(scenario),
        payload=body,
        expected=expected,
        payload_ref=ref,
        template_id=f"{strategy.lower()}-v1",
    )


_THOUGHT_LINE = re.compile(r"^thought\s*\d*\s*[:.]\s*(.*)$", re.IGNORECASE)
_ACTION_LINE = re.compile(r"^action\s*\d*\s*[:.]\s*(.*)$", re.IGNORECASE)


def _parse_completion(
    completion: str, pack: PromptPack
) -> tuple[tuple[str, str], ...]:
    """Enforce the alternating contract and exact action fidelity."""
    pending: str | None = None
    pairs: list[tuple[str, str]] = []
    for line in completion.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        thought = _THOUGHT_LINE.match(stripped)
        act = _ACTION_LINE.match(stripped)
        if thought:
            if pending is not None:
                raise ParseError("two Thought lines in a row")
            pending = thought.group(1).strip()
        elif act:
            if pending is None:
                raise ParseError("Action line without a preceding Thought")
            pairs.append((pending, act.group(1).strip()))
            pending = None
        else:
            raise ParseError(f"unexpected line {stripped!r}")
    if pending is not None:
        raise ParseError("trailing Thought line without an Action")
    if not pairs:
        raise ParseError("completion holds no thought-action pairs")
    got = tuple(parse_action(text, pack.scenario) for _, text in pairs)
    if got != pack.expected:
        want = [render_action(a, pack.scenario) for a in pack.expected]
        have = [render_action(a, pack.scenario) for a in got]
        raise ActionDriftError(f"expected actions {want}, completion has {have}")
    return tuple(
        (thought, render_action(action, pack.scenario))
        for (thought, _), action in zip(pairs, got)
    )


_REPAIR_TEMPLATE = (
    "The previous reply was rejected: {reason}. Reply again following the "
    "format instructions exactly, keeping the given actions unchanged."
)


def forge(
    pack: PromptPack,
    backend,
    now: datetime | None = None,
) -> ThoughtActionExample:
    """One backend round trip, with a single templated repair re-prompt."""
    prompt = pack.text()
    try:
        completion = backend.complete(prompt)
    except httpx.HTTPError as exc:
        raise BackendError(str(exc)) from exc
    try:
        pairs = _parse_completion(completion, pack)
    except (ParseError, ActionDriftError) as first:
        repair = prompt + "\n\n" + _REPAIR_TEMPLATE.format(reason=first)
        try:
            completion = backend.complete(repair)
        except httpx.HTTPError as exc:
            raise BackendError(str(exc)) from exc
        pairs = _parse_completion(completion, pack)
    stamp = (now or datetime.now(timezone.utc)).isoformat()
    return ThoughtActionExample(
        family=pack.scenario.family,
        strategy=pack.strategy,
        variant=pack.variant,
        pairs=pairs,
        backend_id=getattr(backend, "backend_id", type(backend).__name__),
        template_id=pack.template_id,
        payload_ref=pack.payload_ref,
        timestamp=stamp,
    )


def example_to_dict(example: ThoughtActionExample) -> dict:
    return {
        "schema": EXAMPLE_SCHEMA,
        "family": example.family,
        "strategy": example.strategy,
        "variant": example.variant,
        "pairs": [list(p) for p in example.pairs],
        "backend_id": example.backend_id,
        "template_id": example.template_id,
        "payload_ref": example.payload_ref,
        "timestamp": example.timestamp,
    }


def example_from_dict(data: dict) -> ThoughtActionExample:
    return ThoughtActionExample(
        family=data["family"],
        strategy=data["strategy"],
        variant=data["variant"],
        pairs=tuple((t, a) for t, a in data["pairs"]),
        backend_id=data["backend_id"],
        template_id=data["template_id"],
        payload_ref=data["payload_ref"],
        timestamp=data["timestamp"],
    )


def example_digest(example: ThoughtActionExample) -> str:
    """Content address; the timestamp does not participate."""
    payload = example_to_dict(example)
    payload.pop("timestamp")
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


class ExampleStore:
    """A directory of immutable example files, one JSON file per example.

    Writes go through a lock so concurrent forging cannot interleave;
    reads never lock.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def path_for(self, example: ThoughtActionExample) -> Path:
        return self.root / f"{example_digest(example)}.json"

    def add(self, example: ThoughtActionExample) -> Path:
        path = self.path_for(example)
        blob = json.dumps(example_to_dict(example), indent=2) + "\n"
        with self._write_lock:
            path.write_text(blob)
        return path

    def __iter__(self):
        # The store directory may also hold a run_config.json stamp; only
        # files carrying the example schema count.
        for path in sorted(self.root.glob("*.json")):
            data = json.loads(path.read_text())
            if data.get("schema") == EXAMPLE_SCHEMA:
                yield example_from_dict(data)

    def find(
        self,
        family: str | None = None,
        strategy: str | None = None,
        variant: str | None = None,
    ) -> list[ThoughtActionExample]:
        out = []
        for example in self:
            if family is not None and example.family != family:
                continue
            if strategy is not None and example.strategy != strategy:
                continue
            if variant is not None and example.variant != variant:
                continue
            out.append(example)
        out.sort(key=lambda e: (e.family, e.strategy, e.variant, e.payload_ref))
        return out

    def provenance_keys(self) -> set[tuple[str, str, str]]:
        return {(e.family, e.strategy, e.variant) for e in self}


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str
    model: str
    api_key_env: str = "EPIPLAN_API_KEY"
    temperature: float = 0.0
    max_tokens: int = 512
    request_limit: int = 2


def load_backend_config(path: Path) -> BackendConfig:
    data = json.loads(Path(path).read_text())
    return BackendConfig(**data)


class HttpBackend:
    """Plain HTTP text-completion client; the key comes from the environment."""

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        key = os.environ.get(config.api_key_env)
        if not key:
            raise BackendError(
                f"environment variable {config.api_key_env} is not set"
            )
        self.config = config
        self.backend_id = f"http:{config.model}"
        self._client = httpx.Client(
            transport=transport,
            headers={"Authorization": f"Bearer {key}"},
            timeout=30.0,
        )

    def complete(self, prompt: str) -> str:
        response = self._client.post(self.config.endpoint, json={
            "model": self.config.model,
            "prompt": prompt,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
        response.raise_for_status()
        body = response.json()
        if not isinstance(body, dict) or "completion" not in body:
            raise BackendError("response body lacks a 'completion' field")
        return body["completion"]

    def close(self) -> None:
        self._client.close()


class CannedBackend:
    """Replays stored completions in order; counts how often it was asked."""

    backend_id = "canned"

    def __init__(self, replies: list[str]):
        self._replies = list(replies)
        self.calls = 0

    def complete(self, prompt: str) -> str:
        if self.calls >= len(self._replies):
            raise BackendError("canned backend ran out of replies")
        reply = self._replies[self.calls]
        self.calls += 1
        return reply


_SEQ_LINE = re.compile(r"^(\d+)\.\s+(.+)$", re.MULTILINE)
_CORRECT_LINE = re.compile(r"^Correct action:\s*(.+)$", re.MULTILINE)
_POSSIBLE_LINE = re.compile(r"^Possible actions:\s*(.+)$", re.MULTILINE)


class RuleBackend:
    """Offline synthesizer: template thoughts around the prompt's own actions."""

    backend_id = "rule"

    def complete(self, prompt: str) -> str:
        correct = _CORRECT_LINE.search(prompt)
        if correct:
            chosen = correct.group(1).strip()
            possible = _POSSIBLE_LINE.search(prompt)
            others = []
            if possible:
                others = [
                    p.strip() for p in possible.group(1).split("|")
                    if p.strip() != chosen
                ]
            contrast = (
                " instead of " + " or ".join(others) if others else ""
            )
            thought = (
                f"Here the best move is to {chosen}{contrast}, because it "
                "keeps the shortest route to handing over the right item."
            )
            return f"Thought: {thought}\nAction: {chosen}"
        steps = [m.group(2).strip() for m in _SEQ_LINE.finditer(prompt)]
        if not steps:
            raise BackendError("prompt carries no action payload")
        gaining = "informative state" in prompt
        lines = []
        for i, label in enumerate(steps, start=1):
            if gaining:
                thought = (
                    f"Step {i}: {label} should uncover something the Matcher "
                    "has not seen yet."
                )
            else:
                thought = (
                    f"Step {i}: {label} brings the Matcher closer to taking "
                    "the requested item."
                )
            lines.append(f"Thought: {thought}")
            lines.append(f"Action: {label}")
        return "\n".join(lines)


def default_packs(
    families: tuple[str, ...] = FAMILIES,
    variants: tuple[str, ...] = VARIANTS,
) -> list[PromptPack]:
    """One pack per (family, strategy, variant): the reference forge load."""
    from .pddl.emit import grounded_task
    from .search import astar
    from .extraction import extract_e, extract_g, extract_l

    packs = []
    for family in families:
        scenario = build_scenario(family)
        for variant in variants:
            _, tree = astar(grounded_task(scenario, variant))
            g = extract_g(tree, scenario, variant)
            es = extract_e(tree, scenario, variant)
            ls = extract_l(tree, scenario, variant)
            if not es or not ls:
                raise ValidationError(
                    f"{family} {variant} yields no E or L payloads"
                )
            packs.append(build_prompt(g, scenario, "G"))
            packs.append(build_prompt(es[0], scenario, "E"))
            packs.append(build_prompt(ls[0], scenario, "L"))
    return packs


@dataclass(frozen=True)
class ForgeReport:
    written: tuple[str, ...]          # file paths, as strings
    skipped: tuple[tuple[str, str, str], ...]


def forge_all(
    packs: list[PromptPack],
    backend,
    store: ExampleStore,
    jobs: int = 1,
    now: datetime | None = None,
) -> ForgeReport:
    """Forge every pack not already in the store; reruns hit the backend zero times."""
    existing = store.provenance_keys()
    todo, skipped = [], []
    for pack in packs:
        key = (pack.scenario.family, pack.strategy, pack.variant)
        if key in existing:
            skipped.append(key)
        else:
            todo.append(pack)
    written: list[str] = []
    if jobs <= 1:
        for pack in todo:
            written.append(str(store.add(forge(pack, backend, now=now))))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            examples = list(pool.map(lambda p: forge(p, backend, now=now), todo))
        written.extend(str(store.add(e)) for e in examples)
    return ForgeReport(written=tuple(written), skipped=tuple(skipped))


def select_examples(
    store: ExampleStore, held_out: str, strategy: str, variant: str
) -> list[ThoughtActionExample]:
    """Examples from the six families other than held_out, in family order."""
    if held_out not in FAMILIES:
        raise WorldError(f"unknown family {held_out!r}")
    out = []
    for family in FAMILIES:
        if family == held_out:
            continue
        found = store.find(family=family, strategy=strategy, variant=variant)
        if not found:
            raise MissingFamily(
                f"no {strategy} {variant} examples for family {family!r}"
            )
        out.extend(found)
    return out


def render_example(example: ThoughtActionExample) -> str:
    """A few-shot block: the task line plus the thought-action chain."""
    scenario = build_scenario(example.family)
    lines = [f'Example. Director: "{scenario.director_utterance}"']
    for thought, action in example.pairs:
        lines.append(f"Thought: {thought}")
        lines.append(f"Action: {action}")
    return "\n".join(lines)


def render_examples(examples: list[ThoughtActionExample]) -> str:
    return "\n\n".join(render_example(e) for e in examples)
