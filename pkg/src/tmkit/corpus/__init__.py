"""Bundled example models with their scenarios and expected results.

Each fixture ``<name>`` is a set of files under ``data/``:

- ``<name>.tm``: the model;
- ``<name>.<scenario>.scenario``: zero or more scenarios;
- ``<name>.expected.json``: hand-derived expectations (violation codes,
  declared events, per-scenario event sequences) with a ``basis`` note;
- ``<name>.expected.dot`` and ``<name>.<scenario>.expected.tsv``: golden
  outputs, regenerated with ``python3 -m tmkit.corpus``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

from tmkit.dsl import parse_model
from tmkit.model import Model, TMError
from tmkit.simulator import Scenario, parse_scenario, simulate
from tmkit.validator import validate_model

FIXTURE_NAMES = (
    "ordering",
    "dhl_package",
    "sun_warmth",
    "number_machine",
    "invalid_xmachine",
    "invalid_adjacency",
    "invalid_backward",
    "invalid_mixed",
    "invalid_trigger_sameflow",
    "invalid_resolve",
    "invalid_store",
    "invalid_event",
)


class FixtureError(TMError, LookupError):
    pass


@dataclass(frozen=True)
class Fixture:
    name: str
    source: str
    model: Model
    expected: dict[str, Any]
    scenarios: dict[str, Scenario] = field(default_factory=dict)
    scenario_sources: dict[str, str] = field(default_factory=dict)
    golden: dict[str, str] = field(default_factory=dict)

    @property
    def expected_violations(self) -> list[str]:
        return list(self.expected.get("violations", []))

    @property
    def is_valid(self) -> bool:
        return not self.expected_violations

    def scenario_expectation(self, scenario: str) -> dict[str, Any]:
        return self.expected.get("scenarios", {}).get(scenario, {})


def _data():
    return resources.files(__name__).joinpath("data")


def load_fixture(name: str) -> Fixture:
    if name not in FIXTURE_NAMES:
        raise FixtureError(f"unknown fixture {name!r}; known: {', '.join(FIXTURE_NAMES)}")
    data = _data()
    source = data.joinpath(f"{name}.tm").read_text(encoding="utf-8")
    expected = json.loads(data.joinpath(f"{name}.expected.json").read_text(encoding="utf-8"))
    scenarios: dict[str, Scenario] = {}
    texts: dict[str, str] = {}
    golden: dict[str, str] = {}
    for entry in sorted(data.iterdir(), key=lambda p: p.name):
        fname = entry.name
        if not fname.startswith(name + "."):
            continue
        middle = fname[len(name) + 1:]
        if middle.endswith(".scenario") and middle.count(".") == 1:
            key = middle[: -len(".scenario")]
            texts[key] = entry.read_text(encoding="utf-8")
            scenarios[key] = parse_scenario(texts[key])
        elif middle.startswith("expected.dot") or middle.endswith(".expected.tsv"):
            golden[fname] = entry.read_text(encoding="utf-8")
    return Fixture(name, source, parse_model(source), expected, scenarios, texts, golden)


def load_all() -> list[Fixture]:
    return [load_fixture(n) for n in FIXTURE_NAMES]


def golden_outputs(fixture: Fixture) -> dict[str, str]:
    """Recompute the golden files of ``fixture`` from the pipeline."""
    from tmkit.export import export_dot

    out: dict[str, str] = {}
    if validate_model(fixture.model).ok:
        out[f"{fixture.name}.expected.dot"] = export_dot(fixture.model)
        for key, scenario in fixture.scenarios.items():
            out[f"{fixture.name}.{key}.expected.tsv"] = simulate(fixture.model, scenario).to_tsv()
    return out


__all__ = ["FIXTURE_NAMES", "Fixture", "FixtureError", "golden_outputs", "load_all", "load_fixture"]
