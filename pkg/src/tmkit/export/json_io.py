"""Canonical JSON form of a model (``tm_schema`` 1, see docs/schema.md)."""

from __future__ import annotations

import json
from typing import Any

from tmkit.model import (
    Action,
    ActionKind,
    Attribute,
    AttrKind,
    AttrRef,
    BinOp,
    Branch,
    Chronology,
    ElementKind,
    Event,
    EventElement,
    Expr,
    Flow,
    Guard,
    IntLit,
    Machine,
    Model,
    Neg,
    ResolutionError,
    StageKind,
    StageRef,
    Store,
    ThingType,
    TMError,
    Trigger,
    resolve_stage,
)

SCHEMA_VERSION = 1


class SchemaError(TMError, ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# -- export ----------------------------------------------------------------


def _expr(e: Expr) -> dict:
    if isinstance(e, AttrRef):
        return {"attr": str(e)}
    if isinstance(e, IntLit):
        return {"int": e.value}
    if isinstance(e, Neg):
        return {"neg": _expr(e.operand)}
    return {"op": e.op, "left": _expr(e.left), "right": _expr(e.right)}


def _action(a: Action) -> dict:
    out: dict[str, Any] = {"kind": a.kind.value}
    if a.target is not None:
        out["target"] = str(a.target)
    if a.thing is not None:
        out["thing"] = a.thing
    if a.attribute is not None:
        out["attribute"] = a.attribute
    if a.expr is not None:
        out["value"] = _expr(a.expr)
    if a.trigger is not None:
        out["trigger"] = a.trigger
    if a.kind is ActionKind.CREATE:
        out["with"] = [{"name": n, "value": _expr(e)} for n, e in a.assignments]
    return out


def _machine(m: Machine) -> dict:
    return {
        "name": m.name,
        "stages": [s.value for s in m.stages],
        "stores": [{"stage": s.stage.value, "hold": s.hold} for s in m.stores],
        "machines": [_machine(s) for s in m.submachines],
    }


def _element(el: EventElement) -> dict:
    if el.kind is ElementKind.STAGE:
        return {"kind": "stage", "ref": str(el.ref)}
    return {"kind": el.kind.value, "name": el.name}


def model_to_dict(model: Model) -> dict:
    ch = model.chronology
    return {
        "tm_schema": SCHEMA_VERSION,
        "name": model.name,
        "things": [
            {"name": t.name, "supertype": t.supertype,
             "attributes": [{"name": a.name, "kind": a.kind.value} for a in t.attributes]}
            for t in model.things
        ],
        "machines": [_machine(m) for m in model.machines],
        "flows": [{"name": f.name, "thing": f.thing, "path": [str(r) for r in f.path]}
                  for f in model.flows],
        "triggers": [
            {"name": t.name, "source": str(t.source), "action": _action(t.action),
             "guard": None if t.guard is None else
             {"left": _expr(t.guard.left), "op": t.guard.op, "right": _expr(t.guard.right)},
             "delay": t.delay}
            for t in model.triggers
        ],
        "events": [{"id": e.id, "label": e.label, "elements": [_element(x) for x in e.elements]}
                   for e in model.events],
        "chronology": None if ch is None else {
            "edges": [[a, b] for a, b in ch.edges],
            "branches": [{"source": b.source, "alternatives": list(b.alternatives)}
                         for b in ch.branches],
        },
    }


def export_json(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- import ----------------------------------------------------------------


class _Reader:
    def get(self, obj: Any, key: str, path: str, kind: type | tuple[type, ...],
            optional: bool = False) -> Any:
        if not isinstance(obj, dict):
            raise SchemaError(path, "expected an object")
        if key not in obj:
            if optional:
                return None
            raise SchemaError(f"{path}.{key}", "missing required field")
        value = obj[key]
        if value is None and optional:
            return None
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            raise SchemaError(f"{path}.{key}", f"expected {names}, got {type(value).__name__}")
        return value

    def items(self, obj: Any, key: str, path: str) -> list[tuple[str, Any]]:
        seq = self.get(obj, key, path, list)
        return [(f"{path}.{key}[{i}]", v) for i, v in enumerate(seq)]

    def ref(self, text: str, path: str) -> StageRef:
        try:
            return StageRef.parse(text)
        except ValueError as exc:
            raise SchemaError(path, str(exc)) from None

    def enum(self, cls, value: str, path: str):
        try:
            return cls(value)
        except ValueError:
            raise SchemaError(path, f"unknown {cls.__name__} {value!r}") from None

    def expr(self, obj: Any, path: str) -> Expr:
        if isinstance(obj, dict):
            if "attr" in obj:
                thing, _, attr = self.get(obj, "attr", path, str).partition(".")
                if not attr:
                    raise SchemaError(f"{path}.attr", "expected Thing.attribute")
                return AttrRef(thing, attr)
            if "int" in obj:
                return IntLit(self.get(obj, "int", path, int))
            if "neg" in obj:
                return Neg(self.expr(obj["neg"], f"{path}.neg"))
            if "op" in obj:
                op = self.get(obj, "op", path, str)
                if op not in ("+", "-", "*"):
                    raise SchemaError(f"{path}.op", f"unknown operator {op!r}")
                return BinOp(op, self.expr(self.get(obj, "left", path, dict), f"{path}.left"),
                             self.expr(self.get(obj, "right", path, dict), f"{path}.right"))
        raise SchemaError(path, "expected an expression object (attr, int, neg or op)")

    def machine(self, obj: Any, path: str) -> Machine:
        stages = tuple(self.enum(StageKind, self.get({"s": s}, "s", p, str), p)
                       for p, s in self.items(obj, "stages", path))
        stores = tuple(
            Store(self.enum(StageKind, self.get(s, "stage", p, str), f"{p}.stage"),
                  bool(self.get(s, "hold", p, bool, optional=True)))
            for p, s in self.items(obj, "stores", path)
        )
        subs = tuple(self.machine(s, p) for p, s in self.items(obj, "machines", path))
        return Machine(self.get(obj, "name", path, str), stages, subs, stores)

    def action(self, obj: Any, path: str) -> Action:
        kind = self.enum(ActionKind, self.get(obj, "kind", path, str), f"{path}.kind")
        need = {
            ActionKind.ACTIVATE: ("target",),
            ActionKind.CREATE: ("thing", "target"),
            ActionKind.DELETE: ("thing",),
            ActionKind.SET: ("thing", "attribute", "value"),
            ActionKind.CANCEL: ("trigger",),
            ActionKind.RESUME: ("thing", "target"),
        }[kind]
        for key in need:
            self.get(obj, key, path, (str, dict))
        target = obj.get("target") if "target" in need else None
        return Action(
            kind,
            target=self.ref(target, f"{path}.target") if target is not None else None,
            thing=obj.get("thing") if "thing" in need else None,
            attribute=obj.get("attribute") if "attribute" in need else None,
            expr=self.expr(obj["value"], f"{path}.value") if "value" in need else None,
            trigger=obj.get("trigger") if "trigger" in need else None,
            assignments=tuple(
                (self.get(a, "name", p, str), self.expr(self.get(a, "value", p, dict), f"{p}.value"))
                for p, a in (self.items(obj, "with", path) if kind is ActionKind.CREATE else ())
            ),
        )

    def operand(self, obj: Any, path: str) -> AttrRef | IntLit:
        e = self.expr(obj, path)
        if not isinstance(e, (AttrRef, IntLit)):
            raise SchemaError(path, "guard operands must be an attribute or an integer")
        return e

    def element(self, obj: Any, path: str) -> EventElement:
        kind = self.enum(ElementKind, self.get(obj, "kind", path, str), f"{path}.kind")
        if kind is ElementKind.STAGE:
            return EventElement.stage(self.ref(self.get(obj, "ref", path, str), f"{path}.ref"))
        return EventElement(kind, name=self.get(obj, "name", path, str))

    def model(self, doc: Any) -> Model:
        version = self.get(doc, "tm_schema", "$", int)
        if version != SCHEMA_VERSION:
            raise SchemaError("$.tm_schema", f"unsupported schema version {version} "
                                             f"(this reader understands {SCHEMA_VERSION})")
        things = tuple(
            ThingType(
                self.get(t, "name", p, str),
                self.get(t, "supertype", p, str, optional=True),
                tuple(Attribute(self.get(a, "name", q, str),
                                self.enum(AttrKind, self.get(a, "kind", q, str), f"{q}.kind"))
                      for q, a in self.items(t, "attributes", p)),
            )
            for p, t in self.items(doc, "things", "$")
        )
        machines = tuple(self.machine(m, p) for p, m in self.items(doc, "machines", "$"))
        flows = tuple(
            Flow(self.get(f, "name", p, str), self.get(f, "thing", p, str),
                 tuple(self.ref(self.get({"r": r}, "r", q, str), q)
                       for q, r in self.items(f, "path", p)))
            for p, f in self.items(doc, "flows", "$")
        )
        triggers = []
        for p, t in self.items(doc, "triggers", "$"):
            g = self.get(t, "guard", p, dict, optional=True)
            guard = None if g is None else Guard(
                self.operand(self.get(g, "left", f"{p}.guard", dict), f"{p}.guard.left"),
                self.get(g, "op", f"{p}.guard", str),
                self.operand(self.get(g, "right", f"{p}.guard", dict), f"{p}.guard.right"),
            )
            triggers.append(Trigger(
                self.get(t, "name", p, str),
                self.ref(self.get(t, "source", p, str), f"{p}.source"),
                self.action(self.get(t, "action", p, dict), f"{p}.action"),
                guard,
                self.get(t, "delay", p, int, optional=True),
            ))
        events = tuple(
            Event(self.get(e, "id", p, str),
                  tuple(self.element(x, q) for q, x in self.items(e, "elements", p)),
                  self.get(e, "label", p, str, optional=True))
            for p, e in self.items(doc, "events", "$")
        )
        c = self.get(doc, "chronology", "$", dict, optional=True)
        chron = None
        if c is not None:
            edges = []
            for q, pair in self.items(c, "edges", "$.chronology"):
                if not (isinstance(pair, list) and len(pair) == 2
                        and all(isinstance(x, str) for x in pair)):
                    raise SchemaError(q, "expected a pair of event ids")
                edges.append((pair[0], pair[1]))
            branches = tuple(
                Branch(self.get(b, "source", q, str),
                       tuple(self.get({"a": a}, "a", f"{q}.alternatives[{i}]", str)
                             for i, a in enumerate(self.get(b, "alternatives", q, list))))
                for q, b in self.items(c, "branches", "$.chronology")
            )
            chron = Chronology(tuple(edges), branches)
        return Model(self.get(doc, "name", "$", str), things, machines, flows,
                     tuple(triggers), events, chron)


def _check_references(model: Model) -> None:
    def stage(ref: StageRef, path: str) -> None:
        try:
            resolve_stage(model, ref)
        except ResolutionError as exc:
            raise SchemaError(path, f"dangling reference: {exc}") from None

    def thing(name: str | None, path: str) -> None:
        if name is not None and not model.has_thing(name):
            raise SchemaError(path, f"dangling reference to thing {name!r}")

    def attr(ref: AttrRef, path: str) -> None:
        thing(ref.thing, path)
        if model.has_thing(ref.thing) and model.thing(ref.thing).attribute(ref.attribute) is None:
            raise SchemaError(path, f"dangling reference to attribute {ref}")

    for i, t in enumerate(model.things):
        thing(t.supertype, f"$.things[{i}].supertype")
    for i, f in enumerate(model.flows):
        thing(f.thing, f"$.flows[{i}].thing")
        for j, r in enumerate(f.path):
            stage(r, f"$.flows[{i}].path[{j}]")
    for i, t in enumerate(model.triggers):
        p = f"$.triggers[{i}]"
        stage(t.source, f"{p}.source")
        a = t.action
        if a.target is not None:
            stage(a.target, f"{p}.action.target")
        thing(a.thing, f"{p}.action.thing")
        if a.trigger is not None and model.trigger(a.trigger) is None:
            raise SchemaError(f"{p}.action.trigger", f"dangling reference to trigger {a.trigger!r}")
        for r in a.refs() + (t.guard.refs() if t.guard else ()):
            attr(r, p)
    for i, e in enumerate(model.events):
        for j, el in enumerate(e.elements):
            q = f"$.events[{i}].elements[{j}]"
            if el.kind is ElementKind.STAGE:
                assert el.ref is not None
                stage(el.ref, q)
            elif el.kind is ElementKind.FLOW and model.flow(el.name or "") is None:
                raise SchemaError(q, f"dangling reference to flow {el.name!r}")
            elif el.kind is ElementKind.TRIGGER and model.trigger(el.name or "") is None:
                raise SchemaError(q, f"dangling reference to trigger {el.name!r}")
    if model.chronology is not None:
        for eid in model.chronology.event_ids():
            if model.event(eid) is None:
                raise SchemaError("$.chronology", f"dangling reference to event {eid!r}")


def import_json(text: str | bytes, *, check_references: bool = True) -> Model:
    """Parse a ``tm_schema`` 1 document.

    Errors carry the JSON path of the offending value. With
    ``check_references`` off, names are not resolved, which allows loading
    documents of models that are known to be invalid.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from None
    model = _Reader().model(doc)
    if check_references:
        _check_references(model)
    return model
