"""Forge tests: prompt freezing, completion contracts, store semantics."""

from __future__ import annotations

import json
from datetime import datetime, timezone

import httpx
import pytest

from epiplan.extraction import extract_e, extract_g, extract_l, mark_informative
from epiplan.forge import (
    FORMAT_INSTRUCTIONS,
    STRATEGY_PROMPTS,
    ActionDriftError,
    BackendConfig,
    BackendError,
    CannedBackend,
    ExampleStore,
    HttpBackend,
    MissingFamily,
    RuleBackend,
    StrategyMismatch,
    ValidationError,
    build_prompt,
    default_packs,
    example_digest,
    example_from_dict,
    example_to_dict,
    forge,
    forge_all,
    load_backend_config,
    render_example,
    render_examples,
    select_examples,
)
from epiplan.runtime import ParseError, parse_action
from epiplan.scenarios import FAMILIES
from epiplan.world import (
    MATCHER,
    MINUS_ASK,
    PLUS_ASK,
    WorldError,
    initial_state,
    observation_of,
)

# The three strategy prompts, frozen character for character (note the
# typographic apostrophes).
FROZEN_PROMPTS = {
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

NOW = datetime(2026, 1, 1, tzinfo=timezone.utc)


def _payloads(scenarios, searches, family, variant):
    scenario = scenarios[family]
    _, tree = searches[(family, variant)]
    mark_informative(tree, scenario)
    return (
        extract_g(tree, scenario, variant),
        extract_e(tree, scenario, variant),
        extract_l(tree, scenario, variant),
    )


def test_strategy_prompts_are_frozen():
    assert STRATEGY_PROMPTS == FROZEN_PROMPTS
    for text in STRATEGY_PROMPTS.values():
        assert "’" in text
        assert "'" not in text


def test_format_instructions_pin_the_contract():
    assert "Thought:" in FORMAT_INSTRUCTIONS
    assert "Action:" in FORMAT_INSTRUCTIONS
    assert "alternating" in FORMAT_INSTRUCTIONS


def test_g_pack_shape(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "base", PLUS_ASK)
    pack = build_prompt(g, scenarios["base"], "G")
    assert pack.strategy == "G" and pack.variant == PLUS_ASK
    assert pack.payload == (
        "Action sequence:\n1. move cabinet\n2. take gold_shirt"
    )
    assert pack.payload_ref == f"goal-path:{g.terminal_node}"
    assert pack.template_id == "g-v1"
    assert [type(a).__name__ for a in pack.expected] == ["Move", "Take"]
    blocks = pack.text().split("\n\n")
    assert blocks == [
        STRATEGY_PROMPTS["G"], pack.context, pack.payload, FORMAT_INSTRUCTIONS,
    ]


def test_e_pack_shape(scenarios, searches):
    _, es, _ = _payloads(scenarios, searches, "dist", MINUS_ASK)
    pack = build_prompt(es[0], scenarios["dist"], "E")
    assert pack.payload == "Action sequence:\n1. move shelf"
    assert pack.payload_ref == f"informative-node:{es[0].terminal_node}"
    assert pack.template_id == "e-v1"


def test_l_pack_shape(scenarios, searches):
    _, _, ls = _payloads(scenarios, searches, "dist", MINUS_ASK)
    root = ls[0]
    pack = build_prompt(root, scenarios["dist"], "L")
    assert pack.payload == (
        "Last action: (start of the episode)\n"
        "Possible actions: move shelf | open drawer | take red_tie\n"
        "Correct action: move shelf"
    )
    assert pack.payload_ref == "decision-node:0"
    assert pack.expected == (root.chosen.action,)

    deeper = build_prompt(ls[1], scenarios["dist"], "L")
    assert deeper.payload.startswith("Last action: move shelf\n")


def test_pack_assembly_is_byte_stable(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "far", PLUS_ASK)
    first = build_prompt(g, scenarios["far"], "G")
    second = build_prompt(g, scenarios["far"], "G")
    assert first == second
    assert first.text() == second.text()


def test_strategy_payload_mismatches(scenarios, searches):
    g, es, ls = _payloads(scenarios, searches, "base", PLUS_ASK)
    scenario = scenarios["base"]
    with pytest.raises(StrategyMismatch):
        build_prompt(g, scenario, "L")
    with pytest.raises(StrategyMismatch):
        build_prompt(ls[0], scenario, "G")
    with pytest.raises(StrategyMismatch):
        build_prompt(g, scenario, "E")
    with pytest.raises(StrategyMismatch):
        build_prompt(g, scenario, "Z")


def test_empty_trajectory_rejected(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "base", PLUS_ASK)
    from dataclasses import replace
    with pytest.raises(ValidationError, match="empty"):
        build_prompt(replace(g, steps=()), scenarios["base"], "G")


def test_context_shows_only_what_the_matcher_sees():
    for pack in default_packs():
        scenario = pack.scenario
        view = observation_of(initial_state(scenario), MATCHER, scenario)
        visible = {iid for iid, _ in view.surface_items}
        visible |= {iid for iid, _ in view.container_items}
        view_line = next(
            line for line in pack.context.splitlines()
            if line.startswith("Initial view:")
        )
        for item in scenario.items:
            if item.id not in visible:
                assert item.id.replace("_", " ") not in view_line


def test_hidden_target_stays_out_of_the_dist_view(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "dist", PLUS_ASK)
    pack = build_prompt(g, scenarios["dist"], "G")
    view_line = next(
        line for line in pack.context.splitlines()
        if line.startswith("Initial view:")
    )
    assert "green tie" not in view_line


def test_forge_round_trip_with_rule_backend(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "near", PLUS_ASK)
    pack = build_prompt(g, scenarios["near"], "G")
    example = forge(pack, RuleBackend(), now=NOW)
    assert example.family == "near"
    assert example.timestamp == "2026-01-01T00:00:00+00:00"
    assert example.backend_id == "rule"
    assert [a for _, a in example.pairs] == ["ask which one", "take gold_shirt"]
    assert all(thought for thought, _ in example.pairs)


def test_forge_normalizes_action_spelling(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "base", PLUS_ASK)
    pack = build_prompt(g, scenarios["base"], "G")
    reply = (
        "Thought: heading over.\nAction: Move to the cabinet.\n"
        "Thought: grabbing it.\nAction: Take the gold_shirt!"
    )
    example = forge(pack, CannedBackend([reply]), now=NOW)
    assert [a for _, a in example.pairs] == ["move cabinet", "take gold_shirt"]


def test_forge_repairs_drift_once(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "base", PLUS_ASK)
    pack = build_prompt(g, scenarios["base"], "G")
    bad = "Thought: x\nAction: move shelf\nThought: y\nAction: take gold_shirt"
    good = "Thought: x\nAction: move cabinet\nThought: y\nAction: take gold_shirt"
    backend = CannedBackend([bad, good])
    example = forge(pack, backend, now=NOW)
    assert backend.calls == 2
    assert [a for _, a in example.pairs] == ["move cabinet", "take gold_shirt"]


def test_forge_repairs_garbage_once(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "base", PLUS_ASK)
    pack = build_prompt(g, scenarios["base"], "G")
    good = "Thought: x\nAction: move cabinet\nThought: y\nAction: take gold_shirt"
    backend = CannedBackend(["no structure here", good])
    assert forge(pack, backend, now=NOW).pairs
    assert backend.calls == 2


def test_forge_gives_up_after_one_repair(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "base", PLUS_ASK)
    pack = build_prompt(g, scenarios["base"], "G")
    drifted = "Thought: x\nAction: move shelf\nThought: y\nAction: take gold_shirt"
    backend = CannedBackend([drifted, drifted])
    with pytest.raises(ActionDriftError):
        forge(pack, backend, now=NOW)
    assert backend.calls == 2


def test_alternation_violations_are_parse_errors(scenarios, searches):
    g, _, _ = _payloads(scenarios, searches, "persp", PLUS_ASK)
    pack = build_prompt(g, scenarios["persp"], "G")
    cases = [
        "Thought: a\nThought: b\nAction: take red_tie",
        "Action: take red_tie",
        "Thought: a\nAction: take red_tie\nThought: dangling",
        "Thought: a",
    ]
    for reply in cases:
        with pytest.raises(ParseError):
            forge(pack, CannedBackend([reply, reply]), now=NOW)


def test_rule_backend_explains_contrasts(scenarios, searches):
    _, _, ls = _payloads(scenarios, searches, "dist", MINUS_ASK)
    pack = build_prompt(ls[0], scenarios["dist"], "L")
    example = forge(pack, RuleBackend(), now=NOW)
    (pair,) = example.pairs
    thought, action = pair
    assert action == "move shelf"
    assert "instead of" in thought


def test_rule_backend_voices_information_gain(scenarios, searches):
    _, es, _ = _payloads(scenarios, searches, "hidd", MINUS_ASK)
    pack = build_prompt(es[0], scenarios["hidd"], "E")
    example = forge(pack, RuleBackend(), now=NOW)
    assert any("uncover" in thought for thought, _ in example.pairs)


def test_default_packs_cover_the_grid():
    packs = default_packs()
    assert len(packs) == 42
    keys = {(p.scenario.family, p.strategy, p.variant) for p in packs}
    assert len(keys) == 42


def test_store_holds_42_examples(example_store):
    files = [p for p in example_store.root.glob("*.json")]
    assert len(files) == 42
    assert len(example_store.provenance_keys()) == 42
    assert len(list(example_store)) == 42


def test_store_ignores_foreign_files(tmp_path):
    store = ExampleStore(tmp_path / "store")
    forge_all(default_packs(families=("base",)), RuleBackend(), store, now=NOW)
    (store.root / "run_config.json").write_text(
        json.dumps({"schema": "epiplan.run-config/1", "command": "forge"})
    )
    assert len(list(store)) == 6
    assert all(e.family == "base" for e in store)


def test_forge_all_is_idempotent(example_store):
    backend = CannedBackend([])
    report = forge_all(default_packs(), backend, example_store, now=NOW)
    assert report.written == ()
    assert len(report.skipped) == 42
    assert backend.calls == 0


def test_forge_all_parallel_matches_serial(tmp_path):
    serial = ExampleStore(tmp_path / "serial")
    parallel = ExampleStore(tmp_path / "parallel")
    packs = default_packs()
    serial_report = forge_all(packs, RuleBackend(), serial, jobs=1, now=NOW)
    parallel_report = forge_all(packs, RuleBackend(), parallel, jobs=4, now=NOW)
    assert len(serial_report.written) == len(parallel_report.written) == 42
    serial_files = {p.name: p.read_text() for p in serial.root.glob("*.json")}
    parallel_files = {p.name: p.read_text() for p in parallel.root.glob("*.json")}
    assert serial_files == parallel_files


def test_stored_actions_replay_in_their_scenarios(example_store, scenarios):
    for example in example_store:
        scenario = scenarios[example.family]
        for _, action_text in example.pairs:
            parse_action(action_text, scenario)


def test_digest_ignores_the_timestamp(example_store):
    example = next(iter(example_store))
    from dataclasses import replace
    later = replace(example, timestamp="2030-12-31T00:00:00+00:00")
    assert example_digest(example) == example_digest(later)
    other = replace(example, pairs=example.pairs + (("extra", "ask which one"),))
    assert example_digest(example) != example_digest(other)


def test_example_dict_round_trip(example_store):
    for example in example_store:
        assert example_from_dict(example_to_dict(example)) == example


def test_select_examples_leaves_one_family_out(example_store):
    chosen = select_examples(example_store, "base", "G", PLUS_ASK)
    assert [e.family for e in chosen] == [f for f in FAMILIES if f != "base"]
    assert all(e.strategy == "G" and e.variant == PLUS_ASK for e in chosen)


def test_select_examples_rejects_unknown_family(example_store):
    with pytest.raises(WorldError, match="unknown family"):
        select_examples(example_store, "nope", "G", PLUS_ASK)


def test_select_examples_demands_full_coverage(tmp_path):
    store = ExampleStore(tmp_path / "partial")
    forge_all(default_packs(families=("base",)), RuleBackend(), store, now=NOW)
    with pytest.raises(MissingFamily, match="dist"):
        select_examples(store, "persp", "G", PLUS_ASK)


def test_render_example_blocks(example_store):
    examples = select_examples(example_store, "base", "L", MINUS_ASK)
    block = render_example(examples[0])
    lines = block.splitlines()
    assert lines[0].startswith('Example. Director: "')
    assert lines[1].startswith("Thought: ")
    assert lines[2].startswith("Action: ")
    joined = render_examples(examples[:2])
    assert joined.count('Example. Director: "') == 2
    assert "\n\n" in joined


def _http_backend(monkeypatch, handler, **config_kw):
    monkeypatch.setenv("EPIPLAN_API_KEY", "sekret")
    config = BackendConfig(endpoint="https://llm.test/v1/complete",
                           model="oracle-1", **config_kw)
    return HttpBackend(config, transport=httpx.MockTransport(handler))


def test_http_backend_posts_the_prompt(monkeypatch):
    seen = {}

    def handler(request):
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"completion": "Thought: t\nAction: a"})

    backend = _http_backend(monkeypatch, handler, temperature=0.5, max_tokens=64)
    reply = backend.complete("hello world")
    backend.close()
    assert reply == "Thought: t\nAction: a"
    assert seen["auth"] == "Bearer sekret"
    assert seen["body"] == {
        "model": "oracle-1",
        "prompt": "hello world",
        "temperature": 0.5,
        "max_tokens": 64,
    }
    assert backend.backend_id == "http:oracle-1"


def test_http_backend_requires_the_key(monkeypatch):
    monkeypatch.delenv("EPIPLAN_API_KEY", raising=False)
    config = BackendConfig(endpoint="https://llm.test", model="oracle-1")
    with pytest.raises(BackendError, match="EPIPLAN_API_KEY"):
        HttpBackend(config)


def test_http_backend_honours_custom_key_env(monkeypatch):
    monkeypatch.delenv("EPIPLAN_API_KEY", raising=False)
    monkeypatch.setenv("OTHER_KEY", "k")
    config = BackendConfig(endpoint="https://llm.test", model="m",
                           api_key_env="OTHER_KEY")
    HttpBackend(config, transport=httpx.MockTransport(
        lambda request: httpx.Response(200, json={"completion": "x"})
    ))


def test_http_errors_become_backend_errors(monkeypatch, scenarios, searches):
    backend = _http_backend(
        monkeypatch, lambda request: httpx.Response(503, text="busy")
    )
    with pytest.raises(httpx.HTTPError):
        backend.complete("p")
    g, _, _ = _payloads(scenarios, searches, "base", PLUS_ASK)
    pack = build_prompt(g, scenarios["base"], "G")
    with pytest.raises(BackendError):
        forge(pack, backend, now=NOW)


def test_http_backend_rejects_malformed_bodies(monkeypatch):
    backend = _http_backend(
        monkeypatch, lambda request: httpx.Response(200, json={"text": "hi"})
    )
    with pytest.raises(BackendError, match="completion"):
        backend.complete("p")


def test_load_backend_config(tmp_path):
    path = tmp_path / "backend.json"
    path.write_text(json.dumps({
        "endpoint": "https://llm.test/v1", "model": "oracle-1",
    }))
    config = load_backend_config(path)
    assert config.endpoint == "https://llm.test/v1"
    assert config.model == "oracle-1"
    assert config.api_key_env == "EPIPLAN_API_KEY"
    assert config.temperature == 0.0
    assert config.max_tokens == 512
    assert config.request_limit == 2
