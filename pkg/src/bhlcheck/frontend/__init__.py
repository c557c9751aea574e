"""Surface syntax: lexer, parser, binder and printer for .swl programs."""

from bhlcheck.frontend.binder import (
    CheckedProgram,
    bind_and_check,
    bind_formula,
    scope_for,
)
from bhlcheck.frontend.errors import Diagnostic, FrontendError, ParseError, Span
from bhlcheck.frontend.parser import parse, parse_formula_ast
from bhlcheck.frontend.printer import pretty_print, pretty_record
from bhlcheck.logic import normalize


def parse_formula(text: str, scope=None):
    """Parse and bind a single formula; names resolve in ``scope``."""
    return normalize(bind_formula(parse_formula_ast(text), scope or scope_for()))


def load_program(source: str, specs=None) -> CheckedProgram:
    return bind_and_check(parse(source), specs)


__all__ = [
    "CheckedProgram",
    "Diagnostic",
    "FrontendError",
    "ParseError",
    "Span",
    "bind_and_check",
    "load_program",
    "parse",
    "parse_formula",
    "pretty_print",
    "pretty_record",
    "scope_for",
]
