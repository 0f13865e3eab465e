"""Events as named slices of a static model, and chronologies over them."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from graphlib import TopologicalSorter

from tmkit.model import (
    Chronology,
    ElementKind,
    Event,
    EventElement,
    Model,
    ResolutionError,
    TMError,
    resolve_stage,
)


class EventError(TMError, ValueError):
    pass


def unresolved_elements(model: Model, elements: Iterable[EventElement]) -> list[str]:
    """Descriptions of the elements that are not part of ``model``."""
    missing = []
    for el in elements:
        if el.kind is ElementKind.FLOW:
            if model.flow(el.name or "") is None:
                missing.append(str(el))
        elif el.kind is ElementKind.TRIGGER:
            if model.trigger(el.name or "") is None:
                missing.append(str(el))
        else:
            assert el.ref is not None
            try:
                resolve_stage(model, el.ref)
            except ResolutionError:
                missing.append(str(el))
    return missing


def carve_event(model: Model, id: str, elements: Iterable[EventElement],
                anchor: EventElement, label: str | None = None) -> Event:
    """Build an Event over existing model elements.

    The anchor must be one of ``elements``; it is moved to the end, which is
    where the textual syntax expects it.
    """
    elems = tuple(dict.fromkeys(elements))
    if not elems:
        raise EventError(f"event {id!r} has no elements")
    if anchor not in elems:
        raise EventError(f"anchor {anchor} of event {id!r} is not among its elements")
    missing = unresolved_elements(model, elems)
    if missing:
        raise EventError(f"E_EVENT_SUBSET: event {id!r} references elements absent from "
                         f"the model: {', '.join(missing)}")
    ordered = tuple(e for e in elems if e != anchor) + (anchor,)
    return Event(id, ordered, label)


@dataclass(frozen=True)
class ChronologyCheck:
    ok: bool
    pair: tuple[str, str] | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        if self.pair is None:
            return f"violation: {self.reason}"
        return f"violation at {self.pair[0]} -> {self.pair[1]}: {self.reason}"


def check_chronology(sequence: Sequence[str], chron: Chronology,
                     declared: Iterable[str] | None = None, *,
                     complete: bool = False) -> ChronologyCheck:
    """Check an observed event sequence against a chronology.

    Every consecutive pair must be a plain edge or pick an alternative of a
    branch rooted at the first event, and no branch may have two of its
    alternatives in the sequence. ``declared`` widens the set of known ids
    beyond those that appear in the chronology itself.

    A run may stop early or start mid-story, so by default any stretch of a
    walk passes. With ``complete`` the sequence must also start at an event
    without predecessors and end at one without successors.
    """
    known = set(chron.event_ids()) | set(declared or ())
    for eid in sequence:
        if eid not in known:
            raise EventError(f"unknown event id {eid!r}")
    if complete:
        if not sequence:
            return ChronologyCheck(False, None, "empty sequence")
        targets = {b for _, b in chron.edges} | {a for br in chron.branches for a in br.alternatives}
        if sequence[0] in targets:
            return ChronologyCheck(False, None,
                                   f"{sequence[0]} has predecessors, sequence must start at a root")
        if chron.successors(sequence[-1]):
            return ChronologyCheck(False, None,
                                   f"{sequence[-1]} has successors, sequence must end at a leaf")

    edges = set(chron.edges)
    alternatives = {(br.source, alt) for br in chron.branches for alt in br.alternatives}
    for a, b in zip(sequence, sequence[1:]):
        if (a, b) not in edges and (a, b) not in alternatives:
            return ChronologyCheck(False, (a, b), f"{b} cannot follow {a}")

    present = set(sequence)
    for br in chron.branches:
        chosen = [alt for alt in br.alternatives if alt in present]
        if len(chosen) > 1:
            first, second = sorted(chosen, key=sequence.index)[:2]
            return ChronologyCheck(False, (first, second),
                                   f"{first} and {second} are exclusive outcomes of {br.source}")
    return ChronologyCheck(True)


def chronology_order(chron: Chronology) -> tuple[str, ...]:
    """A topological order of the chronology's events; raises on a cycle."""
    graph = {eid: set() for eid in chron.event_ids()}
    for eid in chron.event_ids():
        for succ in chron.successors(eid):
            graph[succ].add(eid)
    return tuple(TopologicalSorter(graph).static_order())


def describe_events(model: Model) -> str:
    """Human-readable listing of declared events and the chronology."""
    lines = []
    for ev in model.events:
        label = f" {ev.label}" if ev.label else ""
        lines.append(f"{ev.id}:{label}")
        lines.append(f"    anchor {ev.anchor}")
        for el in ev.elements[:-1]:
            lines.append(f"    {el}")
    ch = model.chronology
    if ch is not None:
        lines.append("chronology:")
        for a, b in ch.edges:
            lines.append(f"    {a} -> {b}")
        for br in ch.branches:
            lines.append(f"    {br.source} -> {{{' | '.join(br.alternatives)}}}")
    return "\n".join(lines)
