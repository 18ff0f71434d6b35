from __future__ import annotations

import pytest

from epiplan.forge import ExampleStore, RuleBackend, default_packs, forge_all
from epiplan.pddl.emit import grounded_task
from epiplan.scenarios import FAMILIES, build_scenario
from epiplan.search import astar
from epiplan.world import VARIANTS

ALL_TASKS = tuple((family, variant) for family in FAMILIES for variant in VARIANTS)


@pytest.fixture(scope="session")
def scenarios():
    return {family: build_scenario(family) for family in FAMILIES}


@pytest.fixture(scope="session")
def tasks(scenarios):
    return {
        (family, variant): grounded_task(scenarios[family], variant)
        for family, variant in ALL_TASKS
    }


@pytest.fixture(scope="session")
def searches(tasks):
    """(plan, tree) per task; search is deterministic, so sharing is safe."""
    return {key: astar(task) for key, task in tasks.items()}


@pytest.fixture(scope="session")
def example_store(tmp_path_factory):
    store = ExampleStore(tmp_path_factory.mktemp("examples"))
    forge_all(default_packs(), RuleBackend(), store)
    return store
