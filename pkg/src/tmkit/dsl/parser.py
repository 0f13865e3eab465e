"""Recursive-descent parser for ``.tm`` model files.

Single-token lookahead. On a syntax error the parser records a diagnostic
and skips to the next ``;`` (or the ``}`` closing the current block), so one
run reports every independent mistake.
"""

from __future__ import annotations

from collections.abc import Callable

from tmkit.dsl.diagnostics import ParseDiagnostic, ParseError, Severity
from tmkit.dsl.lexer import EOF, IDENT, INT, STRING, Token, tokenize
from tmkit.model import (
    COMPARISONS,
    STAGE_KINDS,
    Action,
    ActionKind,
    AttrKind,
    Attribute,
    AttrRef,
    BinOp,
    Branch,
    Chronology,
    Event,
    EventElement,
    Expr,
    Flow,
    Guard,
    IntLit,
    Machine,
    Model,
    Neg,
    SourcePosition,
    StageKind,
    StageRef,
    Store,
    ThingType,
    Trigger,
)

KEYWORDS = frozenset({
    "model", "thing", "is", "int", "text", "machine", "stage", "store", "after", "hold",
    "flow", "of", "trigger", "when", "event", "chronology", "activate", "delete", "set",
    "cancel", "resume", "at", "with",
})
RESERVED = KEYWORDS | frozenset(STAGE_KINDS)
_ACTIONS = ", ".join(k.value for k in ActionKind)
_KINDS = ", ".join(STAGE_KINDS)


class _Fail(Exception):
    pass


class _Parser:
    def __init__(self, tokens: list[Token], diags: list[ParseDiagnostic]):
        self.tokens = tokens
        self.i = 0
        self.diags = diags

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != EOF:
            self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at(IDENT, word)

    def error(self, msg: str, tok: Token | None = None) -> None:
        tok = tok or self.tok
        self.diags.append(ParseDiagnostic(Severity.ERROR, msg, tok.position))

    def fail(self, expected: list[str], tok: Token | None = None) -> _Fail:
        tok = tok or self.tok
        if len(expected) == 1:
            want = expected[0]
        else:
            want = "one of " + ", ".join(expected)
        self.error(f"unexpected {tok.describe()}, expected {want}", tok)
        return _Fail()

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            raise self.fail([kind if kind in (IDENT, INT, STRING) else repr(kind)])
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.fail([repr(word)])
        return self.advance()

    def expect_name(self, what: str = "identifier") -> Token:
        tok = self.tok
        if tok.kind != IDENT:
            raise self.fail([what])
        if tok.text in RESERVED:
            self.error(f"{tok.text!r} is a reserved word and cannot be used as {what}", tok)
            raise _Fail()
        return self.advance()

    def expect_stage_kind(self) -> tuple[StageKind, Token]:
        tok = self.tok
        if tok.kind == IDENT and tok.text in STAGE_KINDS:
            self.advance()
            return StageKind(tok.text), tok
        self.error(f"unexpected {tok.describe()}, expected a stage kind (one of {_KINDS})", tok)
        raise _Fail()

    def sync(self) -> None:
        """Skip to just past the next ``;`` or to the ``}`` closing this block."""
        depth = 0
        while not self.at(EOF):
            kind = self.tok.kind
            if kind == "{":
                depth += 1
            elif kind == "}":
                if depth == 0:
                    return
                depth -= 1
                if depth == 0:
                    self.advance()
                    if self.at(";"):
                        self.advance()
                    return
            elif kind == ";" and depth == 0:
                self.advance()
                return
            self.advance()

    def block(self, item: Callable[[], None]) -> None:
        """Parse ``item`` repeatedly until the closing ``}``, recovering from errors."""
        while not self.at("}") and not self.at(EOF):
            start = self.i
            try:
                item()
            except _Fail:
                self.sync()
            if self.i == start:
                self.advance()
        self.expect("}")

    def check_unique(self, seen: dict[str, SourcePosition], name: str,
                     pos: SourcePosition | None, what: str) -> None:
        assert pos is not None
        if name in seen:
            self.diags.append(ParseDiagnostic(
                Severity.ERROR, f"duplicate {what} {name!r} (first declared at {seen[name]})", pos))
        else:
            seen[name] = pos

    def skip_to_close(self) -> None:
        """Skip past the ``}`` that closes the current block."""
        depth = 0
        while not self.at(EOF):
            kind = self.advance().kind
            if kind == "{":
                depth += 1
            elif kind == "}":
                if depth == 0:
                    return
                depth -= 1

    # -- grammar ---------------------------------------------------------

    def parse_model(self) -> Model | None:
        try:
            self.expect_keyword("model")
            name = self.expect_name("model name")
            self.expect("{")
        except _Fail:
            return None

        things: list[ThingType] = []
        machines: list[Machine] = []
        flows: list[Flow] = []
        triggers: list[Trigger] = []
        events: list[Event] = []
        chronologies: list[Chronology] = []
        names: dict[str, dict[str, SourcePosition]] = {
            k: {} for k in ("thing", "machine", "flow", "trigger", "event")
        }

        def item() -> None:
            tok = self.tok
            if self.at_keyword("thing"):
                t = self.parse_thing()
                self.check_unique(names["thing"], t.name, t.position, "thing")
                things.append(t)
            elif self.at_keyword("machine"):
                m = self.parse_machine()
                self.check_unique(names["machine"], m.name, m.position, "machine")
                machines.append(m)
            elif self.at_keyword("flow"):
                f = self.parse_flow()
                self.check_unique(names["flow"], f.name, f.position, "flow")
                flows.append(f)
            elif self.at_keyword("trigger"):
                tr = self.parse_trigger()
                self.check_unique(names["trigger"], tr.name, tr.position, "trigger")
                triggers.append(tr)
            elif self.at_keyword("event"):
                ev = self.parse_event()
                self.check_unique(names["event"], ev.id, ev.position, "event")
                events.append(ev)
            elif self.at_keyword("chronology"):
                ch = self.parse_chronology()
                if chronologies:
                    self.error("duplicate chronology block", tok)
                else:
                    chronologies.append(ch)
            else:
                raise self.fail(["'thing'", "'machine'", "'flow'", "'trigger'", "'event'",
                                 "'chronology'", "'}'"])

        try:
            self.block(item)
        except _Fail:
            return None
        if not self.at(EOF):
            self.fail(["end of input"])
            return None
        return Model(
            name=name.text,
            things=tuple(things),
            machines=tuple(machines),
            flows=tuple(flows),
            triggers=tuple(triggers),
            events=tuple(events),
            chronology=chronologies[0] if chronologies else None,
            position=name.position,
        )

    def parse_thing(self) -> ThingType:
        self.expect_keyword("thing")
        name = self.expect_name("thing name")
        supertype = None
        if self.at_keyword("is"):
            self.advance()
            supertype = self.expect_name("supertype name").text
        attrs: list[Attribute] = []
        if self.at("{"):
            self.advance()
            seen: dict[str, SourcePosition] = {}

            def attribute() -> None:
                attr = self.expect_name("attribute name")
                self.expect(":")
                if self.at_keyword("int") or self.at_keyword("text"):
                    kind = AttrKind(self.advance().text)
                else:
                    raise self.fail(["'int'", "'text'"])
                self.expect(";")
                self.check_unique(seen, attr.text, attr.position, "attribute")
                attrs.append(Attribute(attr.text, kind))

            self.block(attribute)
        self.expect(";")
        return ThingType(name.text, supertype, tuple(attrs), name.position)

    def parse_machine(self) -> Machine:
        self.expect_keyword("machine")
        name = self.expect_name("machine name")
        self.expect("{")
        stages: list[StageKind] = []
        stores: list[Store] = []
        subs: list[Machine] = []
        seen_subs: dict[str, SourcePosition] = {}

        def item() -> None:
            if self.at_keyword("stage"):
                self.advance()
                kind, tok = self.expect_stage_kind()
                self.expect(";")
                if kind in stages:
                    self.error(f"duplicate stage {kind.value!r} in machine {name.text!r}", tok)
                else:
                    stages.append(kind)
            elif self.at_keyword("store"):
                self.advance()
                self.expect_keyword("after")
                kind, tok = self.expect_stage_kind()
                hold = False
                if self.at_keyword("hold"):
                    self.advance()
                    hold = True
                self.expect(";")
                if any(s.stage == kind for s in stores):
                    self.error(f"duplicate store after {kind.value!r} in machine {name.text!r}", tok)
                else:
                    stores.append(Store(kind, hold, tok.position))
            elif self.at_keyword("machine"):
                sub = self.parse_machine()
                self.check_unique(seen_subs, sub.name, sub.position, "machine")
                subs.append(sub)
            else:
                raise self.fail(["'stage'", "'store'", "'machine'", "'}'"])

        self.block(item)
        return Machine(name.text, tuple(stages), tuple(subs), tuple(stores), name.position)

    def parse_stageref(self) -> StageRef:
        path = [self.expect_name("machine name").text]
        while True:
            self.expect(".")
            tok = self.tok
            if tok.kind == IDENT and tok.text in STAGE_KINDS:
                self.advance()
                return StageRef(tuple(path), StageKind(tok.text))
            if tok.kind != IDENT or tok.text in RESERVED or not self.tokens[self.i + 1].kind == ".":
                self.error(
                    f"unexpected {tok.describe()}, expected a stage kind (one of {_KINDS})", tok
                )
                raise _Fail()
            path.append(self.advance().text)

    def parse_flow(self) -> Flow:
        self.expect_keyword("flow")
        name = self.expect_name("flow name")
        self.expect_keyword("of")
        thing = self.expect_name("thing name")
        self.expect(":")
        path = [self.parse_stageref()]
        self.expect("->")
        path.append(self.parse_stageref())
        while self.at("->"):
            self.advance()
            path.append(self.parse_stageref())
        self.expect(";")
        return Flow(name.text, thing.text, tuple(path), name.position)

    def parse_trigger(self) -> Trigger:
        self.expect_keyword("trigger")
        name = self.expect_name("trigger name")
        self.expect(":")
        source = self.parse_stageref()
        self.expect("->")
        action = self.parse_action()
        guard = None
        delay = None
        if self.at_keyword("when"):
            self.advance()
            guard = self.parse_guard()
        if self.at_keyword("after"):
            self.advance()
            delay = int(self.expect(INT).text)
        self.expect(";")
        return Trigger(name.text, source, action, guard, delay, name.position)

    def parse_action(self) -> Action:
        tok = self.tok
        word = tok.text if tok.kind == IDENT else None
        if word == "activate":
            self.advance()
            return Action(ActionKind.ACTIVATE, target=self.parse_stageref())
        if word == "create":
            self.advance()
            thing = self.expect_name("thing name").text
            self.expect_keyword("at")
            target = self.parse_stageref()
            assignments: list[tuple[str, Expr]] = []
            if self.at_keyword("with"):
                self.advance()
                seen: dict[str, SourcePosition] = {}
                while True:
                    attr = self.expect_name("attribute name")
                    self.check_unique(seen, attr.text, attr.position, "assignment to")
                    self.expect("=")
                    assignments.append((attr.text, self.parse_expr()))
                    if not self.at(","):
                        break
                    self.advance()
            return Action(ActionKind.CREATE, target=target, thing=thing,
                          assignments=tuple(assignments))
        if word == "delete":
            self.advance()
            return Action(ActionKind.DELETE, thing=self.expect_name("thing name").text)
        if word == "set":
            self.advance()
            thing = self.expect_name("thing name").text
            self.expect(".")
            attr = self.expect_name("attribute name").text
            self.expect("=")
            return Action(ActionKind.SET, thing=thing, attribute=attr, expr=self.parse_expr())
        if word == "cancel":
            self.advance()
            return Action(ActionKind.CANCEL, trigger=self.expect_name("trigger name").text)
        if word == "resume":
            self.advance()
            thing = self.expect_name("thing name").text
            self.expect_keyword("at")
            return Action(ActionKind.RESUME, thing=thing, target=self.parse_stageref())
        self.error(f"unexpected {tok.describe()}, expected an action (one of {_ACTIONS})", tok)
        raise _Fail()

    def parse_attr_ref(self) -> AttrRef:
        thing = self.expect_name("thing name").text
        self.expect(".")
        return AttrRef(thing, self.expect_name("attribute name").text)

    def parse_operand(self) -> AttrRef | IntLit:
        if self.at(INT):
            return IntLit(int(self.advance().text))
        if self.at("-"):
            self.advance()
            return IntLit(-int(self.expect(INT).text))
        if self.at(IDENT):
            return self.parse_attr_ref()
        raise self.fail(["integer", "attribute reference"])

    def parse_guard(self) -> Guard:
        left = self.parse_operand()
        if self.tok.kind not in COMPARISONS:
            raise self.fail([repr(op) for op in COMPARISONS])
        op = self.advance().kind
        return Guard(left, op, self.parse_operand())

    def parse_expr(self) -> Expr:
        expr = self.parse_term()
        while self.at("+") or self.at("-"):
            op = self.advance().kind
            expr = BinOp(op, expr, self.parse_term())
        return expr

    def parse_term(self) -> Expr:
        expr = self.parse_factor()
        while self.at("*"):
            self.advance()
            expr = BinOp("*", expr, self.parse_factor())
        return expr

    def parse_factor(self) -> Expr:
        if self.at(INT):
            return IntLit(int(self.advance().text))
        if self.at("-"):
            self.advance()
            return Neg(self.parse_factor())
        if self.at("("):
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if self.at(IDENT):
            return self.parse_attr_ref()
        raise self.fail(["integer", "attribute reference", "'('", "'-'"])

    def parse_event(self) -> Event:
        self.expect_keyword("event")
        name = self.expect_name("event name")
        label = self.advance().text if self.at(STRING) else None
        self.expect("{")
        elements: list[EventElement] = []
        try:
            while not self.at("}"):
                if self.at_keyword("flow"):
                    self.advance()
                    elements.append(EventElement.flow(self.expect_name("flow name").text))
                elif self.at_keyword("trigger"):
                    self.advance()
                    elements.append(EventElement.trigger(self.expect_name("trigger name").text))
                elif self.at(IDENT) and self.tok.text not in RESERVED:
                    elements.append(EventElement.stage(self.parse_stageref()))
                else:
                    raise self.fail(["'flow'", "'trigger'", "stage reference", "'}'"])
        except _Fail:
            self.skip_to_close()
            return Event(name.text, tuple(elements), label, name.position)
        if not elements:
            self.error(f"event {name.text!r} must list at least one element", self.tok)
        self.advance()
        return Event(name.text, tuple(elements), label, name.position)

    def parse_chronology(self) -> Chronology:
        start = self.expect_keyword("chronology")
        self.expect("{")
        edges: list[tuple[str, str]] = []
        branches: list[Branch] = []

        def entry() -> None:
            src = self.expect_name("event name").text
            self.expect("->")
            if self.at("{"):
                brace = self.advance()
                alts = [self.expect_name("event name").text]
                while self.at("|"):
                    self.advance()
                    alts.append(self.expect_name("event name").text)
                self.expect("}")
                self.expect(";")
                if len(alts) < 2:
                    self.error("a branch needs at least two alternatives", brace)
                    return
                if len(set(alts)) != len(alts):
                    self.error("branch alternatives must be distinct", brace)
                    return
                branches.append(Branch(src, tuple(alts)))
            else:
                dst = self.expect_name("event name").text
                self.expect(";")
                edges.append((src, dst))

        self.block(entry)
        return Chronology(tuple(edges), tuple(branches), start.position)


def _decode(source: str | bytes) -> tuple[str | None, ParseDiagnostic | None]:
    if isinstance(source, str):
        return source, None
    try:
        return source.decode("utf-8"), None
    except UnicodeDecodeError as exc:
        prefix = source[: exc.start].decode("utf-8", errors="replace")
        line = prefix.count("\n") + 1
        col = len(prefix) - (prefix.rfind("\n") + 1) + 1
        return None, ParseDiagnostic(
            Severity.ERROR, f"input is not valid UTF-8 (byte 0x{source[exc.start]:02x})",
            SourcePosition(line, col),
        )


def parse_diagnostics(source: str | bytes) -> tuple[Model | None, tuple[ParseDiagnostic, ...]]:
    """Parse and return ``(model, ())`` or ``(None, diagnostics)``; never raises."""
    text, bad = _decode(source)
    if bad is not None:
        return None, (bad,)
    assert text is not None
    tokens, diags = tokenize(text)
    parser = _Parser(tokens, diags)
    model = parser.parse_model()
    if any(d.severity is Severity.ERROR for d in diags):
        return None, tuple(diags)
    if model is None:  # pragma: no cover - every failure path records an error
        return None, (ParseDiagnostic(Severity.ERROR, "malformed model", SourcePosition(1, 1)),)
    return model, tuple(diags)


def parse_model(source: str | bytes) -> Model:
    """Parse ``.tm`` source text into an unvalidated Model.

    Raises ParseError carrying every diagnostic when the text is not a
    well-formed model. Lexical errors (illegal characters) are reported
    alongside syntax errors from the same run.
    """
    model, diags = parse_diagnostics(source)
    if model is None:
        raise ParseError(diags)
    return model
