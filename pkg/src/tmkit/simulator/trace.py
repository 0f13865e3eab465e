from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple


class RecordKind(str, Enum):
    ENTER_STAGE = "enter_stage"
    PARK = "park"
    RESUME = "resume"
    TRIGGER_FIRED = "trigger_fired"
    CREATE = "create"
    DELETE = "delete"
    SET_ATTR = "set_attr"
    SCHEDULE = "schedule"
    CANCEL = "cancel"
    EXIT = "exit"
    TRUNCATE = "truncate"

    def __str__(self) -> str:
        return self.value


NO_SUBJECT = "-"


def _clean(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    kind: RecordKind
    subject: str
    at: str = ""
    detail: str = ""

    @property
    def fields(self) -> dict[str, str]:
        """``key=value`` pairs of the detail column."""
        out = {}
        for part in self.detail.split(" "):
            key, sep, value = part.partition("=")
            if sep:
                out.setdefault(key, value)
        return out

    @property
    def is_warning(self) -> bool:
        return self.detail.startswith("warning:")

    def to_tsv(self) -> str:
        return "\t".join((str(self.tick), self.kind.value, _clean(self.subject),
                          _clean(self.at), _clean(self.detail)))

    def to_dict(self) -> dict:
        return {"tick": self.tick, "kind": self.kind.value, "subject": self.subject,
                "at": self.at, "detail": self.detail}


@dataclass(frozen=True)
class ThingInstance:
    """Snapshot of a token at the end of a run."""

    id: int
    thing: str
    attributes: tuple[tuple[str, int | str], ...]
    location: str
    parked: bool = False

    def attribute(self, name: str) -> int | str:
        return dict(self.attributes)[name]

    def to_dict(self) -> dict:
        return {"id": self.id, "thing": self.thing, "attributes": dict(self.attributes),
                "location": self.location, "parked": self.parked}


@dataclass(frozen=True)
class Trace:
    records: tuple[TraceRecord, ...] = ()
    population: tuple[ThingInstance, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.records)

    def to_tsv(self) -> str:
        return "".join(r.to_tsv() + "\n" for r in self.records)

    def to_json(self) -> str:
        doc = {"records": [r.to_dict() for r in self.records],
               "live": [p.to_dict() for p in self.population]}
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def live(self, thing: str | None = None) -> tuple[ThingInstance, ...]:
        return tuple(p for p in self.population if thing is None or p.thing == thing)


def parse_tsv(text: str) -> tuple[TraceRecord, ...]:
    out = []
    for line in text.splitlines():
        if not line:
            continue
        tick, kind, subject, at, detail = line.split("\t")
        out.append(TraceRecord(int(tick), RecordKind(kind), subject, at, detail))
    return tuple(out)


class Census(NamedTuple):
    created: int = 0
    deleted: int = 0
    exited: int = 0
    live: int = 0


def census_by_thing(trace: Trace) -> dict[str, Census]:
    counts: dict[str, list[int]] = {}

    def bump(thing: str, slot: int) -> None:
        counts.setdefault(thing, [0, 0, 0, 0])[slot] += 1

    slots = {RecordKind.CREATE: 0, RecordKind.DELETE: 1, RecordKind.EXIT: 2}
    for rec in trace.records:
        slot = slots.get(rec.kind)
        if slot is None or rec.subject == NO_SUBJECT:
            continue
        bump(rec.fields["thing"], slot)
    for inst in trace.population:
        bump(inst.thing, 3)
    return {k: Census(*v) for k, v in counts.items()}


def token_census(trace: Trace, thing: str | None = None) -> Census:
    """Created/deleted/exited counts from the records plus the final live population."""
    per = census_by_thing(trace)
    if thing is not None:
        return per.get(thing, Census())
    return Census(*(sum(c[i] for c in per.values()) for i in range(4)))

