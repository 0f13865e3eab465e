from tmkit.simulator.engine import InvalidModelError, SimulationError, simulate
from tmkit.simulator.recognize import Occurrence, event_sequence, recognize_events
from tmkit.simulator.scenario import (
    DEFAULT_MAX_TICKS,
    Injection,
    Scenario,
    ScenarioError,
    check_scenario,
    parse_scenario,
)
from tmkit.simulator.trace import (
    NO_SUBJECT,
    Census,
    RecordKind,
    ThingInstance,
    Trace,
    TraceRecord,
    census_by_thing,
    parse_tsv,
    token_census,
)

__all__ = [
    "DEFAULT_MAX_TICKS", "NO_SUBJECT", "Census", "Injection", "InvalidModelError",
    "Occurrence", "RecordKind", "Scenario", "ScenarioError", "SimulationError",
    "ThingInstance", "Trace", "TraceRecord", "census_by_thing", "check_scenario",
    "event_sequence", "parse_scenario", "parse_tsv", "recognize_events", "simulate",
    "token_census",
]
