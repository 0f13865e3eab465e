"""Deterministic token simulation of a validated model.

Time is an integer tick. Within a tick the order is fixed:

1. fire delayed triggers that are due, in the order they were scheduled;
2. inject the scenario's tokens for this tick;
3. move every live, unparked token one flow edge (creation order), staying
   on the token's current flow where that flow continues;
4. materialize tokens created by ``create`` actions during this tick.

Entering a stage records ``enter_stage``, may park the token in the stage's
store, and evaluates the stage's triggers in declaration order.
"""

from __future__ import annotations

import logging
import operator
from collections import deque
from dataclasses import dataclass, field

from tmkit.model import (
    Action,
    ActionKind,
    AttrKind,
    AttrRef,
    BinOp,
    Expr,
    FlowEdge,
    Guard,
    IntLit,
    Model,
    Neg,
    SourcePosition,
    StageKind,
    StageRef,
    TMError,
    Trigger,
)
from tmkit.simulator.scenario import Scenario, check_scenario
from tmkit.simulator.trace import NO_SUBJECT, RecordKind, ThingInstance, Trace, TraceRecord
from tmkit.validator import validate_model

log = logging.getLogger(__name__)

R = RecordKind

_COMPARE = {
    "<": operator.lt, "<=": operator.le, "==": operator.eq,
    ">=": operator.ge, ">": operator.gt, "!=": operator.ne,
}
_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}


class SimulationError(TMError, RuntimeError):
    """A run could not continue, e.g. a guard read an attribute nobody holds."""

    def __init__(self, message: str, position: SourcePosition | None = None, tick: int = 0):
        self.position = position
        self.tick = tick
        where = f"{position.line}:{position.column}: " if position else ""
        super().__init__(f"{where}error: {message} (tick {tick})")


class InvalidModelError(TMError, ValueError):
    pass


@dataclass
class _Token:
    id: int
    thing: str
    attrs: dict[str, int | str]
    at: StageRef
    origin: int | None
    entered: int
    visited: set[StageRef] = field(default_factory=set)
    flow: str | None = None
    parked: bool = False
    park_seq: int = 0
    status: str = "live"  # live, deleted, exited


@dataclass(order=True)
class _Pending:
    due: int
    seq: int
    trigger: Trigger = field(compare=False)
    bound: int = field(compare=False)


@dataclass
class _Creation:
    thing: str
    at: StageRef
    values: dict[str, int | str]
    origin: int


class _Run:
    def __init__(self, model: Model, scenario: Scenario):
        self.model = model
        self.scenario = scenario
        self.records: list[TraceRecord] = []
        self.tokens: dict[int, _Token] = {}
        self.next_id = 1
        self.tick = 0
        self.pending: list[_Pending] = []
        self.schedule_seq = 0
        self.park_seq = 0
        self.creations: list[_Creation] = []
        self.injections = deque(scenario.injections)
        self.activating: list[StageRef] = []

        flow_index = {f.name: i for i, f in enumerate(model.flows)}
        self.edges_from: dict[StageRef, list[FlowEdge]] = {}
        for e in model.flow_edges():
            self.edges_from.setdefault(e.source, []).append(e)
        for edges in self.edges_from.values():
            edges.sort(key=lambda e: (flow_index[e.flow_name], e.ordinal))
        self.triggers_from: dict[StageRef, list[Trigger]] = {}
        for t in model.triggers:
            self.triggers_from.setdefault(t.source, []).append(t)

    # -- bookkeeping -----------------------------------------------------

    def record(self, kind: RecordKind, subject: object, at: object = "", detail: str = "") -> None:
        self.records.append(TraceRecord(self.tick, kind, str(subject), str(at or ""), detail))

    def warn(self, kind: RecordKind, message: str, at: object = "") -> None:
        log.debug("tick %d: %s", self.tick, message)
        self.record(kind, NO_SUBJECT, at, f"warning: {message}")

    def live(self) -> list[_Token]:
        return [t for t in self.tokens.values() if t.status == "live"]

    def store_of(self, ref: StageRef):
        machine = self.model.machine(ref.machine_path)
        return machine.store_for(ref.stage) if machine else None

    def next_edge(self, tok: _Token) -> FlowEdge | None:
        """Continue the token's current flow if it goes on from here, otherwise
        take the first eligible edge in flow declaration order."""
        fallback = None
        for e in self.edges_from.get(tok.at, ()):
            if not self.model.is_a(tok.thing, e.thing) or e.target in tok.visited:
                continue
            if e.flow_name == tok.flow:
                return e
            fallback = fallback or e
        return fallback

    def movable(self, tok: _Token) -> bool:
        if tok.status != "live" or tok.parked:
            return False
        return self.next_edge(tok) is not None or tok.at.stage is StageKind.TRANSFER

    def quiescent(self) -> bool:
        return (not self.injections and not self.pending and not self.creations
                and not any(self.movable(t) for t in self.tokens.values()))

    # -- instance lookup and evaluation ----------------------------------

    def resolve(self, thing: str, bound: _Token | None, require_live: bool = True) -> _Token | None:
        """Bound token if it is a ``thing``, else the nearest live ancestor in its
        creation lineage, else the newest live instance."""
        m = self.model
        if bound is not None and m.is_a(bound.thing, thing):
            if bound.status == "live" or not require_live:
                return bound
        cursor = bound
        while cursor is not None and cursor.origin is not None:
            cursor = self.tokens.get(cursor.origin)
            if cursor is not None and cursor.status == "live" and m.is_a(cursor.thing, thing):
                return cursor
        for tok in reversed(self.tokens.values()):
            if tok.status == "live" and m.is_a(tok.thing, thing):
                return tok
        return None

    def read(self, ref: AttrRef, bound: _Token | None, trig: Trigger) -> int | str:
        inst = self.resolve(ref.thing, bound, require_live=False)
        if inst is None or ref.attribute not in inst.attrs:
            raise SimulationError(
                f"trigger {trig.name!r} reads {ref} but no live {ref.thing} holds it",
                trig.position, self.tick,
            )
        return inst.attrs[ref.attribute]

    def evaluate(self, expr: Expr, bound: _Token | None, trig: Trigger) -> int | str:
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, AttrRef):
            return self.read(expr, bound, trig)
        if isinstance(expr, Neg):
            return -self._int(self.evaluate(expr.operand, bound, trig), trig)
        assert isinstance(expr, BinOp)
        left = self._int(self.evaluate(expr.left, bound, trig), trig)
        right = self._int(self.evaluate(expr.right, bound, trig), trig)
        return _ARITH[expr.op](left, right)

    def _int(self, value: int | str, trig: Trigger) -> int:
        if not isinstance(value, int):
            raise SimulationError(f"trigger {trig.name!r} used text {value!r} in arithmetic",
                                  trig.position, self.tick)
        return value

    def holds(self, guard: Guard | None, bound: _Token | None, trig: Trigger) -> bool:
        if guard is None:
            return True
        left = self._int(self.evaluate(guard.left, bound, trig), trig)
        right = self._int(self.evaluate(guard.right, bound, trig), trig)
        return _COMPARE[guard.op](left, right)

    # -- stage entry -----------------------------------------------------

    def moves_onward(self, trig: Trigger, tok: _Token) -> bool:
        a = trig.action
        if a.kind is ActionKind.ACTIVATE:
            return True
        return a.kind is ActionKind.RESUME and self.model.is_a(tok.thing, a.thing or "")

    def enter(self, tok: _Token, ref: StageRef, via: str) -> None:
        tok.at = ref
        tok.entered = self.tick
        tok.visited.add(ref)
        how = f"flow={via}" if tok.flow is not None and via == tok.flow else f"via={via}"
        self.record(R.ENTER_STAGE, tok.id, ref, f"thing={tok.thing} {how}")
        triggers = self.triggers_from.get(ref, [])
        store = self.store_of(ref)
        if store is not None and not tok.parked:
            waiting = any(
                t.guard is not None and self.moves_onward(t, tok) and not self.holds(t.guard, tok, t)
                for t in triggers
            )
            if store.hold or waiting:
                self.park_seq += 1
                tok.parked = True
                tok.park_seq = self.park_seq
                self.record(R.PARK, tok.id, ref, f"thing={tok.thing}")
        for trig in triggers:
            if tok.status != "live":
                break
            self.offer(trig, tok)

    def offer(self, trig: Trigger, bound: _Token) -> None:
        """Fire now, schedule for later, or do nothing if the guard fails."""
        if not self.holds(trig.guard, bound, trig):
            return
        if trig.delay:
            self.schedule_seq += 1
            due = self.tick + trig.delay
            self.pending.append(_Pending(due, self.schedule_seq, trig, bound.id))
            self.record(R.SCHEDULE, trig.name, trig.source, f"bound={bound.id} due={due}")
            return
        self.fire(trig, bound)

    def fire(self, trig: Trigger, bound: _Token) -> None:
        self.record(R.TRIGGER_FIRED, trig.name, trig.source, f"bound={bound.id}")
        self.apply(trig, trig.action, bound)

    # -- actions ---------------------------------------------------------

    def apply(self, trig: Trigger, a: Action, bound: _Token) -> None:
        k = a.kind
        if k is ActionKind.CREATE:
            values = {name: self.evaluate(e, bound, trig) for name, e in a.assignments}
            assert a.thing is not None and a.target is not None
            self.creations.append(_Creation(a.thing, a.target, values, bound.id))
        elif k is ActionKind.DELETE:
            victim = self.resolve(a.thing or "", bound)
            if victim is None:
                self.warn(R.DELETE, f"delete {a.thing}: no live instance")
                return
            victim.status = "deleted"
            victim.parked = False
            self.record(R.DELETE, victim.id, victim.at, f"thing={victim.thing} by={trig.name}")
        elif k is ActionKind.SET:
            target = self.resolve(a.thing or "", bound)
            if target is None:
                self.warn(R.SET_ATTR, f"set {a.thing}.{a.attribute}: no live instance")
                return
            assert a.expr is not None and a.attribute is not None
            value = self.evaluate(a.expr, bound, trig)
            target.attrs[a.attribute] = value
            self.record(R.SET_ATTR, target.id, target.at,
                        f"thing={target.thing} {a.attribute}={value}")
        elif k is ActionKind.CANCEL:
            hits = [p for p in self.pending if p.trigger.name == a.trigger]
            if not hits:
                self.warn(R.CANCEL, f"cancel {a.trigger}: nothing pending")
                return
            for p in hits:
                self.pending.remove(p)
                self.record(R.CANCEL, p.trigger.name, p.trigger.source,
                            f"bound={p.bound} by={trig.name}")
        elif k is ActionKind.RESUME:
            parked = [t for t in self.tokens.values()
                      if t.status == "live" and t.parked and self.model.is_a(t.thing, a.thing or "")]
            if not parked:
                self.warn(R.RESUME, f"resume {a.thing}: nothing parked")
                return
            tok = min(parked, key=lambda t: t.park_seq)
            assert a.target is not None
            tok.parked = False
            self.record(R.RESUME, tok.id, a.target, f"thing={tok.thing} from={tok.at}")
            tok.visited = set()
            tok.flow = None
            self.enter(tok, a.target, "resume")
        else:
            assert a.target is not None
            if a.target in self.activating:
                self.warn(R.TRIGGER_FIRED, f"activate {a.target}: already active")
                return
            self.activating.append(a.target)
            try:
                for t in self.triggers_from.get(a.target, []):
                    self.offer(t, bound)
            finally:
                self.activating.pop()

    # -- tick phases -----------------------------------------------------

    def new_token(self, thing: str, at: StageRef, values: dict[str, int | str],
                  origin: int | None) -> _Token:
        attrs: dict[str, int | str] = {
            a.name: 0 if a.kind is AttrKind.INT else "" for a in self.model.thing(thing).attributes
        }
        attrs.update(values)
        tok = _Token(self.next_id, thing, attrs, at, origin, self.tick)
        self.next_id += 1
        self.tokens[tok.id] = tok
        detail = f"thing={thing}" + (f" origin={origin}" if origin is not None else "")
        self.record(R.CREATE, tok.id, at, detail)
        return tok

    def fire_due(self) -> None:
        while True:
            due = [p for p in self.pending if p.due <= self.tick]
            if not due:
                return
            p = min(due)
            self.pending.remove(p)
            self.fire(p.trigger, self.tokens[p.bound])

    def inject(self) -> None:
        while self.injections and self.injections[0].tick <= self.tick:
            inj = self.injections.popleft()
            tok = self.new_token(inj.thing, inj.at, dict(inj.attributes), None)
            self.enter(tok, inj.at, "inject")

    def advance(self) -> None:
        for tok in list(self.tokens.values()):
            if tok.status != "live" or tok.parked or tok.entered >= self.tick:
                continue
            edge = self.next_edge(tok)
            if edge is not None:
                tok.flow = edge.flow_name
                self.enter(tok, edge.target, edge.flow_name)
            elif tok.at.stage is StageKind.TRANSFER:
                tok.status = "exited"
                self.record(R.EXIT, tok.id, tok.at, f"thing={tok.thing}")

    def materialize(self) -> None:
        batch, self.creations = self.creations, []
        for c in batch:
            tok = self.new_token(c.thing, c.at, c.values, c.origin)
            self.enter(tok, c.at, "create")

    def run(self) -> Trace:
        limit = self.scenario.max_ticks
        for tick in range(limit):
            self.tick = tick
            if self.quiescent():
                break
            self.fire_due()
            self.inject()
            self.advance()
            self.materialize()
        else:
            self.tick = limit
            if not self.quiescent():
                self.record(R.TRUNCATE, NO_SUBJECT, "", f"max_ticks={limit}")
        population = tuple(
            ThingInstance(t.id, t.thing, tuple(t.attrs.items()), str(t.at), t.parked)
            for t in self.live()
        )
        return Trace(tuple(self.records), population)


def simulate(model: Model, scenario: Scenario, *, check: bool = True) -> Trace:
    """Run ``scenario`` against ``model`` and return the full trace.

    The model must validate cleanly. Raises ScenarioError for injections that
    do not fit the model and SimulationError when a guard or expression reads
    an attribute that no live instance holds.
    """
    if check:
        report = validate_model(model)
        if not report.ok:
            raise InvalidModelError("model has validation errors:\n" + report.to_text())
    check_scenario(model, scenario)
    return _Run(model, scenario).run()
