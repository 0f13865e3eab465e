from __future__ import annotations

import os
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum

from tmkit.model import SourcePosition, TMError


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: Severity
    message: str
    position: SourcePosition

    def __str__(self) -> str:
        return f"{self.position.line}:{self.position.column}: {self.severity.value}: {self.message}"


class ParseError(TMError):
    """Raised by the parser when at least one error diagnostic was produced."""

    def __init__(self, diagnostics: Iterable[ParseDiagnostic]):
        self.diagnostics = tuple(diagnostics)
        super().__init__(format_diagnostics(self.diagnostics))


_COLORS = {Severity.ERROR: "\033[31m", Severity.WARNING: "\033[33m"}
_RESET = "\033[0m"


def color_enabled() -> bool:
    return os.environ.get("TM_COLOR", "0") == "1"


def format_diagnostics(diags: Iterable[ParseDiagnostic], color: bool = False) -> str:
    """One ``<line>:<col>: <severity>: <message>`` line per diagnostic, input order kept."""
    lines = []
    for d in diags:
        sev = d.severity.value
        if color:
            sev = f"{_COLORS[d.severity]}{sev}{_RESET}"
        lines.append(f"{d.position.line}:{d.position.column}: {sev}: {d.message}")
    return "\n".join(lines)
