"""``tm``: the command-line front end for thinging-machine models.

Exit codes: 0 ok, 1 validation or chronology failure, 2 parse error,
3 runtime error, 4 usage error (including unreadable or unwritable paths).
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from enum import IntEnum
from pathlib import Path

from tmkit.dsl import format_diagnostics, parse_diagnostics
from tmkit.dsl.diagnostics import Severity, color_enabled
from tmkit.events import EventError, check_chronology, describe_events
from tmkit.export import export_dot
from tmkit.model import Model
from tmkit.simulator import ScenarioError, SimulationError, parse_scenario, recognize_events, simulate
from tmkit.validator import validate_model

log = logging.getLogger("tmkit")


class ExitStatus(IntEnum):
    OK = 0
    INVALID = 1
    PARSE = 2
    RUNTIME = 3
    USAGE = 4


class _Exit(Exception):
    def __init__(self, status: ExitStatus, message: str = ""):
        self.status = status
        self.message = message


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(ExitStatus.USAGE)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _Exit(ExitStatus.USAGE, f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Exit(ExitStatus.USAGE, f"cannot write {path}: {exc.strerror or exc}") from None


def _load(path: str) -> Model:
    model, diags = parse_diagnostics(_read(path))
    if diags:
        text = format_diagnostics(diags, color=color_enabled())
        print("\n".join(f"{path}:{line}" for line in text.splitlines()), file=sys.stderr)
    if model is None or any(d.severity is Severity.ERROR for d in diags):
        raise _Exit(ExitStatus.PARSE)
    return model


def _require_valid(model: Model) -> None:
    report = validate_model(model)
    if not report.ok:
        print(report.to_text(), file=sys.stderr)
        raise _Exit(ExitStatus.INVALID, "model has validation errors")


def cmd_check(args: argparse.Namespace) -> ExitStatus:
    report = validate_model(_load(args.path))
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text() + "\n")
    return ExitStatus.OK if report.ok else ExitStatus.INVALID


def cmd_render(args: argparse.Namespace) -> ExitStatus:
    model = _load(args.path)
    _require_valid(model)
    text = export_dot(model)
    if args.out:
        _write(args.out, text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return ExitStatus.OK


def cmd_simulate(args: argparse.Namespace) -> ExitStatus:
    model = _load(args.path)
    _require_valid(model)
    try:
        scenario = parse_scenario(_read(args.scenario).decode("utf-8"))
        trace = simulate(model, scenario, check=False)
    except (ScenarioError, UnicodeDecodeError) as exc:
        print(f"{args.scenario}:{exc}", file=sys.stderr)
        return ExitStatus.PARSE
    except SimulationError as exc:
        print(f"{args.path}:{exc}", file=sys.stderr)
        return ExitStatus.RUNTIME

    as_json = args.trace is not None and args.trace.endswith(".json")
    text = trace.to_json() if as_json else trace.to_tsv()
    if args.trace:
        _write(args.trace, text)
    elif not args.events:
        sys.stdout.write(text)

    status = ExitStatus.OK
    if args.events:
        ids = [o.event for o in recognize_events(trace, model)]
        print("events:" + "".join(f" {i}" for i in ids))
        if model.chronology is None:
            print("chronology: none declared")
        else:
            try:
                result = check_chronology(ids, model.chronology, (e.id for e in model.events))
            except EventError as exc:
                result = None
                print(f"chronology: {exc}")
                status = ExitStatus.INVALID
            if result is not None:
                print(f"chronology: {result}")
                if not result:
                    status = ExitStatus.INVALID
    return status


def cmd_events(args: argparse.Namespace) -> ExitStatus:
    text = describe_events(_load(args.path))
    if text:
        print(text)
    return ExitStatus.OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tm", description="Work with thinging-machine models (.tm files).")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="parse and validate a model")
    c.add_argument("path")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("render", help="export a validated model as Graphviz DOT")
    r.add_argument("path")
    r.add_argument("--out", help="output file (default: stdout)")
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("simulate", help="run a scenario against a model")
    s.add_argument("path")
    s.add_argument("--scenario", required=True)
    s.add_argument("--trace", help="trace output file; .json selects JSON, anything else TSV")
    s.add_argument("--events", action="store_true",
                   help="print recognized events and the chronology check")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("events", help="list declared events and the chronology")
    e.add_argument("path")
    e.set_defaults(func=cmd_events)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; every argparse error goes through _Parser.error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="tm: %(message)s", stream=sys.stderr)
    try:
        return int(args.func(args))
    except _Exit as exc:
        if exc.message:
            print(f"tm: {exc.message}", file=sys.stderr)
        return int(exc.status)


if __name__ == "__main__":
    sys.exit(main())
