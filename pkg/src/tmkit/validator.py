"""Static checks of the flow laws on a parsed model.

Every problem becomes a report entry; nothing here raises for a bad model.
Violations are sorted by ``(code, declaration order)`` so reports are stable.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Iterable
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter

from tmkit.model import (
    Action,
    ActionKind,
    AttrKind,
    AttrRef,
    ElementKind,
    Expr,
    FlowEdge,
    Model,
    ResolutionError,
    StageKind,
    StageRef,
    expr_refs,
    flow_subgraph,
    resolve_stage,
)

S = StageKind

# intra-machine flow steps; the only step between machines is transfer -> transfer
ADJACENT: frozenset[tuple[StageKind, StageKind]] = frozenset({
    (S.CREATE, S.PROCESS),
    (S.CREATE, S.RELEASE),
    (S.RECEIVE, S.PROCESS),
    (S.RECEIVE, S.RELEASE),
    (S.PROCESS, S.RELEASE),
    (S.RELEASE, S.TRANSFER),
    (S.TRANSFER, S.RECEIVE),
})

CODES = (
    "E_ADJ", "E_XMACHINE", "E_BACKWARD", "E_MIXED", "E_TRIG_SAMEFLOW",
    "E_RESOLVE", "E_STORE", "E_EVENT_SUBSET", "E_CHRONOLOGY",
)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    element: str
    order: tuple[int, ...] = ()

    def to_dict(self) -> dict[str, str]:
        return {"code": self.code, "message": self.message, "element": self.element}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        if self.ok:
            return "ok: no violations"
        return "\n".join(f"{v.code}: {v.element}: {v.message}" for v in self.violations)


def edge_rule(edge: FlowEdge) -> str | None:
    """The adjacency code an edge breaks, if any (endpoints assumed resolvable)."""
    a, b = edge.source.stage, edge.target.stage
    if edge.crosses_machines:
        return None if (a, b) == (S.TRANSFER, S.TRANSFER) else "E_XMACHINE"
    return None if (a, b) in ADJACENT else "E_ADJ"


def _has_cycle(edges: Iterable[FlowEdge]) -> tuple[str, ...] | None:
    graph: dict[StageRef, set[StageRef]] = {}
    for e in edges:
        graph.setdefault(e.target, set()).add(e.source)
        graph.setdefault(e.source, set())
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        return tuple(str(n) for n in exc.args[1])
    return None


def check_forward_flow(model: Model, thing: str) -> bool:
    """True iff the flow subgraph of ``thing`` (subtypes included) is acyclic."""
    return _has_cycle(flow_subgraph(model, thing)) is None


def backward_types(model: Model) -> dict[str, tuple[str, ...]]:
    """Most specific thing types whose flow subgraph has a cycle, with a witness.

    A cycle inside a subtype's edges also shows up in every supertype; it is
    reported once, at the most specific cyclic type.
    """
    cycles = {t.name: _has_cycle(flow_subgraph(model, t.name)) for t in model.things}
    out = {}
    for t in model.things:
        witness = cycles[t.name]
        if witness is None:
            continue
        subs = [d for d in model.descendants(t.name) if d != t.name]
        if any(cycles.get(d) is not None for d in subs):
            continue
        out[t.name] = witness
    return out


def flows_at(model: Model, ref: StageRef) -> set[str]:
    return {f.name for f in model.flows if ref in f.path}


def flows_carrying(model: Model, thing: str) -> set[str]:
    return {f.name for f in model.flows
            if model.is_a(f.thing, thing) or model.is_a(thing, f.thing)}


def action_target_flows(model: Model, action: Action) -> set[str]:
    k = action.kind
    if k in (ActionKind.ACTIVATE, ActionKind.CREATE, ActionKind.RESUME):
        assert action.target is not None
        return flows_at(model, action.target)
    if k in (ActionKind.DELETE, ActionKind.SET):
        assert action.thing is not None
        return flows_carrying(model, action.thing)
    trig = model.trigger(action.trigger or "")
    return flows_at(model, trig.source) if trig is not None else set()


class _Checker:
    def __init__(self, model: Model):
        self.model = model
        self.found: list[Violation] = []

    def add(self, code: str, message: str, element: str, *order: int) -> None:
        self.found.append(Violation(code, message, element, tuple(order)))

    def resolves(self, ref: StageRef) -> str | None:
        try:
            resolve_stage(self.model, ref)
        except ResolutionError as exc:
            return str(exc)
        return None

    def check_attr(self, ref: AttrRef, where: str, order: tuple[int, ...],
                   want: AttrKind | None = AttrKind.INT) -> AttrKind | None:
        if not self.model.has_thing(ref.thing):
            self.add("E_RESOLVE", f"unknown thing type {ref.thing!r} in {ref}", where, *order)
            return None
        attr = self.model.thing(ref.thing).attribute(ref.attribute)
        if attr is None:
            self.add("E_RESOLVE", f"{ref.thing!r} has no attribute {ref.attribute!r}", where,
                     *order)
            return None
        if want is not None and attr.kind is not want:
            self.add("E_RESOLVE", f"{ref} is {attr.kind.value}, {want.value} required", where,
                     *order)
        return attr.kind

    def check_value(self, expr: Expr, kind: AttrKind, where: str, order: tuple[int, ...]) -> None:
        """Integer targets take integer arithmetic; text targets only a bare text reference."""
        if isinstance(expr, AttrRef):
            self.check_attr(expr, where, order, want=kind)
            return
        if kind is AttrKind.TEXT:
            self.add("E_RESOLVE", "text attributes can only be assigned a text attribute",
                     where, *order)
            return
        for ref in expr_refs(expr):
            self.check_attr(ref, where, order)

    # -- sections --------------------------------------------------------

    def things(self) -> None:
        m = self.model
        seen: set[str] = set()
        for i, t in enumerate(m.things):
            where = f"thing {t.name}"
            if t.name in seen:
                self.add("E_RESOLVE", f"duplicate thing type {t.name!r}", where, 0, i)
            seen.add(t.name)
            names = [a.name for a in t.attributes]
            if len(set(names)) != len(names):
                self.add("E_RESOLVE", "duplicate attribute name", where, 0, i)
            if t.supertype is None:
                continue
            if not m.has_thing(t.supertype):
                self.add("E_RESOLVE", f"unknown supertype {t.supertype!r}", where, 0, i)
                continue
            chain = m.ancestors(t.name)
            last = m.thing(chain[-1])
            if last.supertype is not None and last.supertype in chain:
                self.add("E_RESOLVE", "supertype chain is cyclic: " + " -> ".join(chain)
                         + f" -> {last.supertype}", where, 0, i)

    def machines(self) -> None:
        def walk(prefix, machines, counter):
            names = set()
            for mach in machines:
                path = (*prefix, mach.name)
                idx = next(counter)
                where = "machine " + ".".join(path)
                if mach.name in names:
                    self.add("E_RESOLVE", f"duplicate machine {mach.name!r}", where, 1, idx)
                names.add(mach.name)
                if len(set(mach.stages)) != len(mach.stages):
                    self.add("E_RESOLVE", "stage declared twice", where, 1, idx)
                for store in mach.stores:
                    if store.stage not in mach.stages:
                        self.add("E_STORE", f"store after undeclared stage {store.stage.value!r}",
                                 where, 1, idx)
                walk(path, mach.submachines, counter)

        walk((), self.model.machines, itertools.count())

    def flows(self) -> None:
        m = self.model
        seen: set[str] = set()
        for i, f in enumerate(m.flows):
            where = f"flow {f.name}"
            if f.name in seen:
                self.add("E_RESOLVE", f"duplicate flow {f.name!r}", where, 2, i)
            seen.add(f.name)
            if not m.has_thing(f.thing):
                self.add("E_RESOLVE", f"unknown thing type {f.thing!r}", where, 2, i)
            if len(f.path) < 2:
                self.add("E_RESOLVE", "a flow needs at least one edge", where, 2, i)
            bad = set()
            for j, ref in enumerate(f.path):
                problem = self.resolves(ref)
                if problem:
                    bad.add(ref)
                    self.add("E_RESOLVE", problem, f"{where} stage {ref}", 2, i, j)
            for e in f.edges:
                if e.source in bad or e.target in bad:
                    continue
                code = edge_rule(e)
                if code == "E_XMACHINE":
                    self.add(code, f"{e.source} -> {e.target} crosses machines but is not "
                             "transfer -> transfer", f"{where} edge {e.ordinal}", 2, i, e.ordinal)
                elif code == "E_ADJ":
                    self.add(code, f"{e.source.stage.value} -> {e.target.stage.value} is not a "
                             "legal step inside a machine", f"{where} edge {e.ordinal}", 2, i,
                             e.ordinal)

    def backward(self) -> None:
        index = {t.name: i for i, t in enumerate(self.model.things)}
        for name, witness in backward_types(self.model).items():
            self.add("E_BACKWARD", f"flow of {name} loops back: " + " -> ".join(witness),
                     f"thing {name}", 0, index[name])

    def mixed(self) -> None:
        m = self.model
        touching: dict[StageRef, list[str]] = {}
        first: dict[StageRef, tuple[int, int]] = {}
        for i, f in enumerate(m.flows):
            if not m.has_thing(f.thing):
                continue
            for j, ref in enumerate(f.path):
                kinds = touching.setdefault(ref, [])
                first.setdefault(ref, (i, j))
                if f.thing not in kinds:
                    kinds.append(f.thing)
        for ref, kinds in touching.items():
            for x in range(len(kinds)):
                for y in range(x + 1, len(kinds)):
                    a, b = kinds[x], kinds[y]
                    if set(m.ancestors(a)) & set(m.ancestors(b)):
                        continue
                    self.add("E_MIXED", f"{a} and {b} share stage {ref} without a common "
                             "supertype", f"stage {ref}", 2, *first[ref])

    def triggers(self) -> None:
        m = self.model
        seen: set[str] = set()
        for i, t in enumerate(m.triggers):
            where = f"trigger {t.name}"
            order = (3, i)
            if t.name in seen:
                self.add("E_RESOLVE", f"duplicate trigger {t.name!r}", where, *order)
            seen.add(t.name)
            ok = True
            problem = self.resolves(t.source)
            if problem:
                self.add("E_RESOLVE", problem, where, *order)
                ok = False
            if t.delay is not None and t.delay < 0:
                self.add("E_RESOLVE", "delay must be non-negative", where, *order)
            a = t.action
            if a.target is not None:
                problem = self.resolves(a.target)
                if problem:
                    self.add("E_RESOLVE", problem, where, *order)
                    ok = False
            if a.thing is not None and not m.has_thing(a.thing):
                self.add("E_RESOLVE", f"unknown thing type {a.thing!r}", where, *order)
                ok = False
            if a.kind is ActionKind.CANCEL and m.trigger(a.trigger or "") is None:
                self.add("E_RESOLVE", f"unknown trigger {a.trigger!r}", where, *order)
                ok = False
            if a.kind is ActionKind.SET and a.thing is not None and m.has_thing(a.thing):
                attr = m.thing(a.thing).attribute(a.attribute or "")
                if attr is None:
                    self.add("E_RESOLVE", f"{a.thing!r} has no attribute {a.attribute!r}",
                             where, *order)
                elif a.expr is not None:
                    self.check_value(a.expr, attr.kind, where, order)
            if a.kind is ActionKind.CREATE and a.thing is not None and m.has_thing(a.thing):
                thing = m.thing(a.thing)
                for name, expr in a.assignments:
                    attr = thing.attribute(name)
                    if attr is None:
                        self.add("E_RESOLVE", f"{a.thing!r} has no attribute {name!r}", where,
                                 *order)
                    else:
                        self.check_value(expr, attr.kind, where, order)
            if t.guard is not None:
                for ref in t.guard.refs():
                    self.check_attr(ref, where, order)
            if ok:
                shared = flows_at(m, t.source) & action_target_flows(m, a)
                if shared:
                    self.add("E_TRIG_SAMEFLOW", f"source {t.source} and target of '{a}' share "
                             f"flow(s) {', '.join(sorted(shared))}", where, *order)

    def events(self) -> None:
        m = self.model
        seen: set[str] = set()
        for i, ev in enumerate(m.events):
            where = f"event {ev.id}"
            if ev.id in seen:
                self.add("E_RESOLVE", f"duplicate event {ev.id!r}", where, 4, i)
            seen.add(ev.id)
            if not ev.elements:
                self.add("E_EVENT_SUBSET", "event has no elements", where, 4, i)
            for j, el in enumerate(ev.elements):
                if el.kind is ElementKind.FLOW and m.flow(el.name or "") is None:
                    self.add("E_EVENT_SUBSET", f"no flow named {el.name!r}", where, 4, i, j)
                elif el.kind is ElementKind.TRIGGER and m.trigger(el.name or "") is None:
                    self.add("E_EVENT_SUBSET", f"no trigger named {el.name!r}", where, 4, i, j)
                elif el.kind is ElementKind.STAGE:
                    assert el.ref is not None
                    problem = self.resolves(el.ref)
                    if problem:
                        self.add("E_EVENT_SUBSET", problem, where, 4, i, j)

    def chronology(self) -> None:
        ch = self.model.chronology
        if ch is None:
            return
        declared = {e.id for e in self.model.events}
        for k, eid in enumerate(ch.event_ids()):
            if eid not in declared:
                self.add("E_CHRONOLOGY", f"undeclared event {eid!r}", "chronology", 5, k)
        graph: dict[str, set[str]] = {}
        for eid in ch.event_ids():
            for succ in ch.successors(eid):
                graph.setdefault(succ, set()).add(eid)
            graph.setdefault(eid, set())
        try:
            tuple(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            self.add("E_CHRONOLOGY", "chronology has a cycle: " + " -> ".join(exc.args[1]),
                     "chronology", 5, len(graph))

    def run(self) -> ValidationReport:
        self.things()
        self.machines()
        self.flows()
        self.backward()
        self.mixed()
        self.triggers()
        self.events()
        self.chronology()
        found = sorted(self.found, key=lambda v: (v.code, v.order, v.message))
        return ValidationReport(tuple(found))


def validate_model(model: Model) -> ValidationReport:
    """Check every flow law; the report is empty iff the model is well formed."""
    return _Checker(model).run()
