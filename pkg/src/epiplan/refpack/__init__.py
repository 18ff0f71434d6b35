"""The committed reference pack: scenario files and their STRIPS tasks.

Version directories hold one scenario JSON per family plus a domain and
problem file for each ask-variant, all produced by write_pack. Tests
regenerate the pack and compare bytes, so the committed files stay honest.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..pddl.emit import emit_scenario, file_names
from ..scenarios import FAMILIES, build_scenario, validate_scenario
from ..world import VARIANTS, Scenario, load_scenario, save_scenario

CURRENT = "v1"


def pack_dir(version: str = CURRENT) -> Path:
    return Path(resources.files(__package__)) / version


def write_pack(target: Path) -> list[Path]:
    """Regenerate the full pack into target; returns the files written."""
    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for family in FAMILIES:
        scenario = build_scenario(family)
        validate_scenario(scenario)
        path = target / f"{family}.scenario.json"
        save_scenario(scenario, path)
        written.append(path)
        for variant in VARIANTS:
            domain_text, problem_text = emit_scenario(scenario, variant)
            domain_name, problem_name = file_names(family, variant)
            for name, text in ((domain_name, domain_text),
                               (problem_name, problem_text)):
                path = target / name
                path.write_text(text)
                written.append(path)
    return written


def load_reference_scenario(family: str, version: str = CURRENT) -> Scenario:
    return load_scenario(pack_dir(version) / f"{family}.scenario.json")


def reference_pddl(family: str, variant: str, version: str = CURRENT) -> tuple[str, str]:
    """The committed (domain, problem) text pair for one task."""
    domain_name, problem_name = file_names(family, variant)
    root = pack_dir(version)
    return (root / domain_name).read_text(), (root / problem_name).read_text()
