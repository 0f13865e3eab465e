"""Regenerate ``.tm`` source from a model."""

from __future__ import annotations

from tmkit.model import ElementKind, Machine, Model, ThingType, Trigger

_INDENT = "    "


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _thing(t: ThingType) -> str:
    line = f"thing {t.name}"
    if t.supertype:
        line += f" is {t.supertype}"
    if t.attributes:
        line += " { " + " ".join(f"{a.name}: {a.kind.value};" for a in t.attributes) + " }"
    return line + ";"


def _machine(m: Machine, depth: int) -> list[str]:
    pad = _INDENT * depth
    lines = [f"{pad}machine {m.name} {{"]
    lines += [f"{pad}{_INDENT}stage {s.value};" for s in m.stages]
    for st in m.stores:
        lines.append(f"{pad}{_INDENT}store after {st.stage.value}{' hold' if st.hold else ''};")
    for sub in m.submachines:
        lines += _machine(sub, depth + 1)
    lines.append(f"{pad}}}")
    return lines


def _trigger(t: Trigger) -> str:
    line = f"trigger {t.name} : {t.source} -> {t.action}"
    if t.guard is not None:
        line += f" when {t.guard}"
    if t.delay is not None:
        line += f" after {t.delay}"
    return line + ";"


def render_dsl(model: Model) -> str:
    """Canonical source text; parsing it gives back an equal model."""
    body: list[str] = []
    body += [_thing(t) for t in model.things]
    for m in model.machines:
        body += _machine(m, 0)
    for f in model.flows:
        body.append(f"flow {f.name} of {f.thing} : " + " -> ".join(map(str, f.path)) + ";")
    body += [_trigger(t) for t in model.triggers]
    for ev in model.events:
        head = f"event {ev.id}" + (f" {_quote(ev.label)}" if ev.label is not None else "")
        body.append(head + " {")
        for el in ev.elements:
            body.append(_INDENT + (str(el.ref) if el.kind is ElementKind.STAGE else str(el)))
        body.append("}")
    ch = model.chronology
    if ch is not None:
        body.append("chronology {")
        body += [f"{_INDENT}{a} -> {b};" for a, b in ch.edges]
        body += [f"{_INDENT}{br.source} -> {{ {' | '.join(br.alternatives)} }};" for br in ch.branches]
        body.append("}")
    inner = "".join(f"{_INDENT}{line}\n" for line in body)
    return f"model {model.name} {{\n{inner}}}\n"
