"""Executable thinging-machine models.

Start with :func:`parse_model` and :func:`validate_model`. Scenarios run
through :func:`simulate`; the ``export`` package writes DOT, JSON and DSL.
"""

from tmkit.dsl import ParseDiagnostic, ParseError, parse_diagnostics, parse_model
from tmkit.events import EventError, carve_event, check_chronology
from tmkit.export import export_dot, export_json, import_json, render_dsl
from tmkit.model import (
    Action,
    ActionKind,
    Chronology,
    Event,
    EventElement,
    Flow,
    FlowEdge,
    Guard,
    Machine,
    Model,
    ResolutionError,
    StageKind,
    StageRef,
    ThingType,
    TMError,
    Trigger,
    flow_subgraph,
    resolve_stage,
)
from tmkit.simulator import (
    Scenario,
    SimulationError,
    Trace,
    parse_scenario,
    recognize_events,
    simulate,
    token_census,
)
from tmkit.validator import ValidationReport, Violation, validate_model

__all__ = [
    "Action", "ActionKind", "Chronology", "Event", "EventElement", "EventError", "Flow",
    "FlowEdge", "Guard", "Machine", "Model", "ParseDiagnostic", "ParseError",
    "ResolutionError", "Scenario", "SimulationError", "StageKind", "StageRef", "TMError",
    "ThingType", "Trace", "Trigger", "ValidationReport", "Violation", "carve_event",
    "check_chronology", "export_dot", "export_json", "flow_subgraph", "import_json",
    "parse_diagnostics", "parse_model", "parse_scenario", "recognize_events", "render_dsl",
    "resolve_stage", "simulate", "token_census", "validate_model",
]
