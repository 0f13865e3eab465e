"""Scenario files: which things enter the model, and where and when they do.

Line format::

    // comment
    max_ticks 200
    inject 0 Order at Customer.create {item=widget, quantity=2}
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from tmkit.model import AttrKind, Model, ResolutionError, StageKind, StageRef, TMError, resolve_stage

DEFAULT_MAX_TICKS = 10_000

Value = int | str


class ScenarioError(TMError, ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 1):
        self.line = line
        self.column = column
        prefix = f"{line}:{column}: " if line else ""
        super().__init__(f"{prefix}error: {message}")


@dataclass(frozen=True)
class Injection:
    tick: int
    thing: str
    at: StageRef
    attributes: tuple[tuple[str, Value], ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Scenario:
    injections: tuple[Injection, ...] = ()
    max_ticks: int = DEFAULT_MAX_TICKS

    def __post_init__(self) -> None:
        if self.max_ticks < 1:
            raise ScenarioError(f"max_ticks must be positive, got {self.max_ticks}")
        for inj in self.injections:
            if inj.tick < 0:
                raise ScenarioError(f"injection tick must be >= 0, got {inj.tick}", inj.line)
        # stable sort keeps file order among injections due on the same tick
        object.__setattr__(self, "injections",
                           tuple(sorted(self.injections, key=lambda i: i.tick)))


_INJECT = re.compile(
    r"inject\s+(?P<tick>-?\d+)\s+(?P<thing>[A-Za-z_]\w*)\s+at\s+(?P<ref>[A-Za-z_][\w.]*)"
    r"\s*(?:\{(?P<attrs>[^}]*)\})?\s*$"
)
_MAX = re.compile(r"max_ticks\s+(?P<n>-?\d+)\s*$")
_PAIR = re.compile(r'\s*(?P<name>[A-Za-z_]\w*)\s*=\s*(?P<value>"(?:[^"\\]|\\.)*"|[^,]*?)\s*(?:,|$)')


def _value(raw: str) -> Value:
    if re.fullmatch(r"-?\d+", raw):
        return int(raw)
    if len(raw) >= 2 and raw[0] == raw[-1] == '"':
        return re.sub(r"\\(.)", r"\1", raw[1:-1])
    return raw


def _attributes(raw: str, lineno: int, col: int) -> tuple[tuple[str, Value], ...]:
    out: list[tuple[str, Value]] = []
    pos = 0
    raw = raw.rstrip()
    while pos < len(raw):
        m = _PAIR.match(raw, pos)
        if m is None or m.end() == pos:
            raise ScenarioError(f"malformed attribute list near {raw[pos:]!r}", lineno, col + pos)
        name = m.group("name")
        if any(n == name for n, _ in out):
            raise ScenarioError(f"attribute {name!r} given twice", lineno, col + pos)
        out.append((name, _value(m.group("value"))))
        pos = m.end()
    return tuple(out)


def parse_scenario(text: str) -> Scenario:
    injections: list[Injection] = []
    max_ticks = DEFAULT_MAX_TICKS
    seen_max = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        if not stripped:
            continue
        col = len(line) - len(stripped) + 1
        if m := _MAX.match(stripped):
            if seen_max:
                raise ScenarioError("max_ticks given twice", lineno, col)
            seen_max = True
            max_ticks = int(m.group("n"))
            if max_ticks < 1:
                raise ScenarioError("max_ticks must be positive", lineno, col)
            continue
        if m := _INJECT.match(stripped):
            tick = int(m.group("tick"))
            if tick < 0:
                raise ScenarioError("injection tick must be >= 0", lineno, col)
            try:
                ref = StageRef.parse(m.group("ref"))
            except ValueError as exc:
                raise ScenarioError(str(exc), lineno, col + m.start("ref")) from None
            attrs = _attributes(m.group("attrs") or "", lineno, col + (m.start("attrs") or 0))
            injections.append(Injection(tick, m.group("thing"), ref, attrs, lineno))
            continue
        raise ScenarioError(
            "expected 'inject <tick> <Thing> at <stageref> {attr=value,...}' or 'max_ticks <N>'",
            lineno, col,
        )
    return Scenario(tuple(injections), max_ticks)


def check_scenario(model: Model, scenario: Scenario) -> None:
    """Raise ScenarioError if an injection does not fit the model."""
    for inj in scenario.injections:
        if not model.has_thing(inj.thing):
            raise ScenarioError(f"unknown thing type {inj.thing!r}", inj.line)
        try:
            resolve_stage(model, inj.at)
        except ResolutionError as exc:
            raise ScenarioError(str(exc), inj.line) from None
        if inj.at.stage not in (StageKind.CREATE, StageKind.TRANSFER):
            raise ScenarioError(f"things can only be injected at create or transfer stages, "
                                f"not {inj.at}", inj.line)
        thing = model.thing(inj.thing)
        for name, value in inj.attributes:
            attr = thing.attribute(name)
            if attr is None:
                raise ScenarioError(f"{inj.thing!r} has no attribute {name!r}", inj.line)
            if (attr.kind is AttrKind.INT) != isinstance(value, int):
                raise ScenarioError(f"attribute {inj.thing}.{name} is {attr.kind.value}, "
                                    f"got {value!r}", inj.line)
