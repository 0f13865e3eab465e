"""Graphviz DOT export.

Machines become nested clusters, stages become nodes named
``<machine path>/<stage>``. Flow edges are solid and labeled with the thing;
trigger edges are dashed and labeled with the trigger. Triggers whose action
has no target stage (delete, set, cancel) point at a small note node.
"""

from __future__ import annotations

from tmkit.model import Machine, Model, StageRef, Trigger

PALETTE = (
    "#d62728", "#ff7f0e", "#bcbd22", "#1f77b4", "#2ca02c",
    "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f",
)


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def node_id(ref: StageRef) -> str:
    return f"{ref.machine_key}/{ref.stage.value}"


def _cluster(m: Machine, path: tuple[str, ...], depth: int) -> list[str]:
    pad = "  " * depth
    key = ".".join(path)
    out = [f"{pad}subgraph {_q('cluster_' + key)} {{", f"{pad}  label={_q(m.name)};"]
    for stage in m.stages:
        attrs = [f"label={_q(stage.value)}"]
        store = m.store_for(stage)
        if store is not None:
            attrs.append("peripheries=2")
            attrs.append(f"xlabel={_q('store (hold)' if store.hold else 'store')}")
        out.append(f"{pad}  {_q(node_id(StageRef(path, stage)))} [{', '.join(attrs)}];")
    for sub in m.submachines:
        out += _cluster(sub, path + (sub.name,), depth + 1)
    out.append(f"{pad}}}")
    return out


def _trigger_label(t: Trigger) -> str:
    label = t.name
    if t.guard is not None:
        label += f" when {t.guard}"
    if t.delay is not None:
        label += f" after {t.delay}"
    return label


def export_dot(model: Model) -> str:
    colors = {t.name: PALETTE[i % len(PALETTE)] for i, t in enumerate(model.things)}
    lines = [f"digraph {_q(model.name)} {{", "  compound=true;", "  node [shape=box];"]
    for m in model.machines:
        lines += _cluster(m, (m.name,), 1)
    for e in model.flow_edges():
        color = colors.get(e.thing, PALETTE[-1])
        lines.append(
            f"  {_q(node_id(e.source))} -> {_q(node_id(e.target))} "
            f"[style=solid, label={_q(e.thing)}, color={_q(color)}, fontcolor={_q(color)}];"
        )
    for t in model.triggers:
        target = t.action.target
        if target is None:
            note = f"action:{t.name}"
            lines.append(f"  {_q(note)} [shape=note, label={_q(str(t.action))}];")
            head = note
        else:
            head = node_id(target)
        lines.append(f"  {_q(node_id(t.source))} -> {_q(head)} "
                     f"[style=dashed, label={_q(_trigger_label(t))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
