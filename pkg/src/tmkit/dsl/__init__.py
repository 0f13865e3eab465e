"""Lexer and parser for the ``.tm`` textual model language."""

from tmkit.dsl.diagnostics import ParseDiagnostic, ParseError, Severity, format_diagnostics
from tmkit.dsl.parser import KEYWORDS, RESERVED, parse_diagnostics, parse_model

__all__ = [
    "KEYWORDS",
    "RESERVED",
    "ParseDiagnostic",
    "ParseError",
    "Severity",
    "format_diagnostics",
    "parse_diagnostics",
    "parse_model",
]
