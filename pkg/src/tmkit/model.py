"""Structural types for thinging-machine models.

Everything here is a frozen dataclass holding tuples, so a parsed model is
deep-immutable and can be shared between simulations and exporters.
Source positions are carried for diagnostics but ignored by equality.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Union


class TMError(Exception):
    """Base class for every error raised by this package."""


class ResolutionError(TMError, LookupError):
    """A name or stage reference does not resolve within a model."""


class StageKind(str, Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"

    def __str__(self) -> str:
        return self.value


STAGE_KINDS: tuple[str, ...] = tuple(k.value for k in StageKind)


class AttrKind(str, Enum):
    INT = "int"
    TEXT = "text"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SourcePosition:
    line: int
    column: int

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"positions are 1-based, got {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


def _pos() -> SourcePosition | None:
    return field(default=None, compare=False, repr=False)  # type: ignore[return-value]


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: AttrKind


@dataclass(frozen=True)
class ThingType:
    name: str
    supertype: str | None = None
    attributes: tuple[Attribute, ...] = ()
    position: SourcePosition | None = _pos()

    def attribute(self, name: str) -> Attribute | None:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None


@dataclass(frozen=True)
class Store:
    stage: StageKind
    hold: bool = False
    position: SourcePosition | None = _pos()


@dataclass(frozen=True)
class Machine:
    name: str
    stages: tuple[StageKind, ...] = ()
    submachines: tuple[Machine, ...] = ()
    stores: tuple[Store, ...] = ()
    position: SourcePosition | None = _pos()

    def has_stage(self, stage: StageKind) -> bool:
        return stage in self.stages

    def store_for(self, stage: StageKind) -> Store | None:
        for store in self.stores:
            if store.stage == stage:
                return store
        return None

    def submachine(self, name: str) -> Machine | None:
        for sub in self.submachines:
            if sub.name == name:
                return sub
        return None


@dataclass(frozen=True, order=True)
class StageRef:
    machine_path: tuple[str, ...]
    stage: StageKind

    def __str__(self) -> str:
        return ".".join((*self.machine_path, self.stage.value))

    @property
    def machine_key(self) -> str:
        return ".".join(self.machine_path)

    @classmethod
    def parse(cls, text: str) -> StageRef:
        """Parse a dotted reference such as ``OrderingSystem.Billing.create``."""
        parts = text.strip().split(".")
        if len(parts) < 2 or not all(parts):
            raise ValueError(f"malformed stage reference {text!r}")
        try:
            stage = StageKind(parts[-1])
        except ValueError:
            raise ValueError(
                f"{parts[-1]!r} is not a stage kind (expected one of {', '.join(STAGE_KINDS)})"
            ) from None
        return cls(tuple(parts[:-1]), stage)


@dataclass(frozen=True)
class FlowEdge:
    flow_name: str
    thing: str
    source: StageRef
    target: StageRef
    ordinal: int

    @property
    def crosses_machines(self) -> bool:
        return self.source.machine_path != self.target.machine_path


@dataclass(frozen=True)
class Flow:
    name: str
    thing: str
    path: tuple[StageRef, ...]
    position: SourcePosition | None = _pos()

    @property
    def edges(self) -> tuple[FlowEdge, ...]:
        return tuple(
            FlowEdge(self.name, self.thing, a, b, i)
            for i, (a, b) in enumerate(zip(self.path, self.path[1:]))
        )


# --- integer expressions and guards -------------------------------------


@dataclass(frozen=True)
class AttrRef:
    thing: str
    attribute: str

    def __str__(self) -> str:
        return f"{self.thing}.{self.attribute}"


@dataclass(frozen=True)
class IntLit:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - *
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg:
    operand: Expr


Expr = Union[AttrRef, IntLit, BinOp, Neg]

_PRECEDENCE = {"+": 1, "-": 1, "*": 2}


def format_expr(expr: Expr, parent: int = 0, right_side: bool = False) -> str:
    """Render an expression with the minimum parentheses needed to re-parse it."""
    if isinstance(expr, (AttrRef, IntLit)):
        return str(expr)
    if isinstance(expr, Neg):
        return "-" + format_expr(expr.operand, 3)
    prec = _PRECEDENCE[expr.op]
    text = f"{format_expr(expr.left, prec)} {expr.op} {format_expr(expr.right, prec, True)}"
    if prec < parent or (right_side and prec == parent):
        return f"({text})"
    return text


def expr_refs(expr: Expr) -> Iterator[AttrRef]:
    if isinstance(expr, AttrRef):
        yield expr
    elif isinstance(expr, BinOp):
        yield from expr_refs(expr.left)
        yield from expr_refs(expr.right)
    elif isinstance(expr, Neg):
        yield from expr_refs(expr.operand)


COMPARISONS = ("<", "<=", "==", ">=", ">", "!=")


@dataclass(frozen=True)
class Guard:
    left: AttrRef | IntLit
    op: str
    right: AttrRef | IntLit

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"

    def refs(self) -> tuple[AttrRef, ...]:
        return tuple(x for x in (self.left, self.right) if isinstance(x, AttrRef))


class ActionKind(str, Enum):
    ACTIVATE = "activate"
    CREATE = "create"
    DELETE = "delete"
    SET = "set"
    CANCEL = "cancel"
    RESUME = "resume"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    target: StageRef | None = None
    thing: str | None = None
    attribute: str | None = None
    expr: Expr | None = None
    trigger: str | None = None
    assignments: tuple[tuple[str, Expr], ...] = ()

    def __str__(self) -> str:
        k = self.kind
        if k is ActionKind.ACTIVATE:
            return f"activate {self.target}"
        if k is ActionKind.CREATE:
            text = f"create {self.thing} at {self.target}"
            if self.assignments:
                text += " with " + ", ".join(f"{n} = {format_expr(e)}" for n, e in self.assignments)
            return text
        if k is ActionKind.DELETE:
            return f"delete {self.thing}"
        if k is ActionKind.SET:
            assert self.expr is not None
            return f"set {self.thing}.{self.attribute} = {format_expr(self.expr)}"
        if k is ActionKind.CANCEL:
            return f"cancel {self.trigger}"
        return f"resume {self.thing} at {self.target}"

    def refs(self) -> tuple[AttrRef, ...]:
        exprs = [e for _, e in self.assignments]
        if self.expr is not None:
            exprs.append(self.expr)
        return tuple(r for e in exprs for r in expr_refs(e))


@dataclass(frozen=True)
class Trigger:
    name: str
    source: StageRef
    action: Action
    guard: Guard | None = None
    delay: int | None = None
    position: SourcePosition | None = _pos()


TriggerEdge = Trigger


class ElementKind(str, Enum):
    FLOW = "flow"
    STAGE = "stage"
    TRIGGER = "trigger"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EventElement:
    kind: ElementKind
    name: str | None = None
    ref: StageRef | None = None

    def __str__(self) -> str:
        if self.kind is ElementKind.STAGE:
            return str(self.ref)
        return f"{self.kind.value} {self.name}"

    @classmethod
    def flow(cls, name: str) -> EventElement:
        return cls(ElementKind.FLOW, name=name)

    @classmethod
    def trigger(cls, name: str) -> EventElement:
        return cls(ElementKind.TRIGGER, name=name)

    @classmethod
    def stage(cls, ref: StageRef | str) -> EventElement:
        return cls(ElementKind.STAGE, ref=StageRef.parse(ref) if isinstance(ref, str) else ref)


@dataclass(frozen=True)
class Event:
    """A named bundle of model elements; the last element is the anchor."""

    id: str
    elements: tuple[EventElement, ...]
    label: str | None = None
    position: SourcePosition | None = _pos()

    @property
    def anchor(self) -> EventElement:
        return self.elements[-1]


@dataclass(frozen=True)
class Branch:
    source: str
    alternatives: tuple[str, ...]


@dataclass(frozen=True)
class Chronology:
    edges: tuple[tuple[str, str], ...] = ()
    branches: tuple[Branch, ...] = ()
    position: SourcePosition | None = _pos()

    def event_ids(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for a, b in self.edges:
            seen.setdefault(a)
            seen.setdefault(b)
        for br in self.branches:
            seen.setdefault(br.source)
            for alt in br.alternatives:
                seen.setdefault(alt)
        return tuple(seen)

    def successors(self, event_id: str) -> tuple[str, ...]:
        out = [b for a, b in self.edges if a == event_id]
        for br in self.branches:
            if br.source == event_id:
                out.extend(br.alternatives)
        return tuple(dict.fromkeys(out))


@dataclass(frozen=True)
class Model:
    name: str
    things: tuple[ThingType, ...] = ()
    machines: tuple[Machine, ...] = ()
    flows: tuple[Flow, ...] = ()
    triggers: tuple[Trigger, ...] = ()
    events: tuple[Event, ...] = ()
    chronology: Chronology | None = None
    position: SourcePosition | None = _pos()

    # lookups; cached per instance, never part of equality

    @cached_property
    def _things(self) -> dict[str, ThingType]:
        return {t.name: t for t in reversed(self.things)}

    @cached_property
    def _machines(self) -> dict[tuple[str, ...], Machine]:
        return dict(self.walk_machines())

    def thing(self, name: str) -> ThingType:
        try:
            return self._things[name]
        except KeyError:
            raise ResolutionError(f"unknown thing type {name!r}") from None

    def has_thing(self, name: str) -> bool:
        return name in self._things

    def machine(self, path: tuple[str, ...]) -> Machine | None:
        return self._machines.get(tuple(path))

    def flow(self, name: str) -> Flow | None:
        return next((f for f in self.flows if f.name == name), None)

    def trigger(self, name: str) -> Trigger | None:
        return next((t for t in self.triggers if t.name == name), None)

    def event(self, name: str) -> Event | None:
        return next((e for e in self.events if e.id == name), None)

    def walk_machines(self) -> Iterator[tuple[tuple[str, ...], Machine]]:
        """Yield ``(path, machine)`` depth-first in declaration order."""

        def walk(prefix: tuple[str, ...], machines: tuple[Machine, ...]):
            for m in machines:
                path = (*prefix, m.name)
                yield path, m
                yield from walk(path, m.submachines)

        yield from walk((), self.machines)

    def stage_refs(self) -> Iterator[StageRef]:
        for path, m in self.walk_machines():
            for stage in m.stages:
                yield StageRef(path, stage)

    def flow_edges(self) -> tuple[FlowEdge, ...]:
        return tuple(e for f in self.flows for e in f.edges)

    def ancestors(self, name: str) -> tuple[str, ...]:
        """``name`` followed by its supertype chain; stops at cycles or unknown names."""
        chain = [name]
        current = self._things.get(name)
        while current is not None and current.supertype is not None:
            if current.supertype in chain:
                break
            chain.append(current.supertype)
            current = self._things.get(current.supertype)
        return tuple(chain)

    def is_a(self, thing: str, other: str) -> bool:
        return other in self.ancestors(thing)

    def descendants(self, name: str) -> tuple[str, ...]:
        """Declared thing types that are ``name`` or have it as an ancestor."""
        return tuple(t.name for t in self.things if name in self.ancestors(t.name))


@dataclass(frozen=True)
class StageHandle:
    path: tuple[str, ...]
    machine: Machine
    stage: StageKind

    @property
    def ref(self) -> StageRef:
        return StageRef(self.path, self.stage)


def resolve_stage(model: Model, ref: StageRef) -> StageHandle:
    """Find the machine that owns ``ref``; raise ResolutionError otherwise."""
    if not ref.machine_path:
        raise ResolutionError("empty machine path: root entries are machines, not stages")
    machine = model.machine(ref.machine_path)
    if machine is None:
        raise ResolutionError(f"unknown machine path {ref.machine_key!r}")
    if not machine.has_stage(ref.stage):
        declared = ", ".join(s.value for s in machine.stages) or "none"
        raise ResolutionError(
            f"machine {ref.machine_key!r} does not declare stage {ref.stage.value!r} "
            f"(declared: {declared})"
        )
    return StageHandle(ref.machine_path, machine, ref.stage)


def flow_subgraph(model: Model, thing: str) -> tuple[FlowEdge, ...]:
    """Flow edges carrying ``thing`` or one of its subtypes, in declaration order."""
    model.thing(thing)
    kinds = set(model.descendants(thing))
    return tuple(e for e in model.flow_edges() if e.thing in kinds)
