from __future__ import annotations

from dataclasses import dataclass

from tmkit.dsl.diagnostics import ParseDiagnostic, Severity
from tmkit.model import SourcePosition

IDENT = "identifier"
INT = "integer"
STRING = "string"
EOF = "end of input"

# longest first so that "->" wins over "-"
PUNCTUATION = ("->", "<=", ">=", "==", "!=", "{", "}", ";", ":", ".", ",", "=", "(", ")",
               "+", "-", "*", "|", "<", ">")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, STRING, EOF, or the punctuation text itself
    text: str
    position: SourcePosition

    def describe(self) -> str:
        if self.kind == EOF:
            return "end of input"
        if self.kind == STRING:
            return "string literal"
        return repr(self.text)


def _is_ident_start(c: str) -> bool:
    return c == "_" or ("a" <= c <= "z") or ("A" <= c <= "Z")


def _is_ident_char(c: str) -> bool:
    return _is_ident_start(c) or ("0" <= c <= "9")


def tokenize(source: str) -> tuple[list[Token], list[ParseDiagnostic]]:
    tokens: list[Token] = []
    diags: list[ParseDiagnostic] = []
    i, line, col = 0, 1, 1
    n = len(source)
    last_pos = SourcePosition(1, 1)

    def error(msg: str, pos: SourcePosition) -> None:
        diags.append(ParseDiagnostic(Severity.ERROR, msg, pos))

    while i < n:
        c = source[i]
        pos = SourcePosition(line, col)
        if c == "\n":
            last_pos = pos
            i, line, col = i + 1, line + 1, 1
            continue
        last_pos = pos
        if c in " \t\r\f\v":
            i, col = i + 1, col + 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                last_pos = SourcePosition(line, col)
                i, col = i + 1, col + 1
            continue
        if _is_ident_start(c):
            j = i + 1
            while j < n and _is_ident_char(source[j]):
                j += 1
            tokens.append(Token(IDENT, source[i:j], pos))
            col += j - i
            i = j
            continue
        if "0" <= c <= "9":
            j = i + 1
            while j < n and "0" <= source[j] <= "9":
                j += 1
            tokens.append(Token(INT, source[i:j], pos))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            chars: list[str] = []
            closed = False
            while j < n and source[j] != "\n":
                if source[j] == "\\" and j + 1 < n and source[j + 1] in '"\\n':
                    chars.append("\n" if source[j + 1] == "n" else source[j + 1])
                    j += 2
                    continue
                if source[j] == '"':
                    closed = True
                    j += 1
                    break
                chars.append(source[j])
                j += 1
            if not closed:
                error("unterminated string literal", pos)
            else:
                tokens.append(Token(STRING, "".join(chars), pos))
            col += j - i
            i = j
            continue
        for p in PUNCTUATION:
            if source.startswith(p, i):
                tokens.append(Token(p, p, pos))
                i, col = i + len(p), col + len(p)
                break
        else:
            error(f"illegal character {c!r}", pos)
            i, col = i + 1, col + 1

    tokens.append(Token(EOF, "", last_pos))
    return tokens, diags
