"""Recover event occurrences from a trace."""

from __future__ import annotations

from typing import NamedTuple

from tmkit.model import ActionKind, ElementKind, Event, Model
from tmkit.simulator.trace import RecordKind, Trace, TraceRecord


class Occurrence(NamedTuple):
    tick: int
    event: str


def _stage_activated(model: Model, ev: Event, rec: TraceRecord, ref: str) -> bool:
    if rec.kind is RecordKind.TRIGGER_FIRED:
        trig = model.trigger(rec.subject)
        return (trig is not None and trig.action.kind is ActionKind.ACTIVATE
                and str(trig.action.target) == ref)
    if rec.kind is not RecordKind.ENTER_STAGE or rec.at != ref:
        return False
    flows = [model.flow(el.name or "") for el in ev.elements if el.kind is ElementKind.FLOW]
    flows = [f for f in flows if f is not None]
    if not flows:
        return True
    fields = rec.fields
    if "flow" in fields:
        return any(f.name == fields["flow"] for f in flows)
    # arrived without a flow: scope by the kind of thing instead
    return any(model.is_a(fields.get("thing", ""), f.thing) for f in flows)


def _matches(model: Model, ev: Event, rec: TraceRecord) -> bool:
    anchor = ev.anchor
    if anchor.kind is ElementKind.TRIGGER:
        return rec.kind is RecordKind.TRIGGER_FIRED and rec.subject == anchor.name
    if anchor.kind is ElementKind.FLOW:
        return rec.kind is RecordKind.ENTER_STAGE and rec.fields.get("flow") == anchor.name
    return _stage_activated(model, ev, rec, str(anchor.ref))


def recognize_events(trace: Trace, model: Model) -> tuple[Occurrence, ...]:
    """Occurrences of the model's events, in trace order.

    An event occurs when its anchor activates: a trigger anchor when the
    trigger fires, a flow anchor when a token moves along that flow, a stage
    anchor when something enters the stage. A stage anchor in an event that
    also names flows only counts entries belonging to those flows. The same
    event is not reported twice in a row.
    """
    out: list[Occurrence] = []
    for rec in trace.records:
        for ev in model.events:
            if not _matches(model, ev, rec):
                continue
            if out and out[-1].event == ev.id:
                continue
            out.append(Occurrence(rec.tick, ev.id))
    return tuple(out)


def event_sequence(trace: Trace, model: Model) -> tuple[str, ...]:
    return tuple(o.event for o in recognize_events(trace, model))
