"""Source spans and diagnostics.

Diagnostics render as ``file:line:col: error: CODE: message`` followed by the
offending source line and a caret line, one primary span each.
"""

from __future__ import annotations

from dataclasses import dataclass

SYNTAX = "E001"
UNRESOLVED = "E002"
UNKNOWN_COMMAND = "E003"
KIND_MISMATCH = "E004"
UNDECLARED_POPULATION = "E005"
UNANNOTATED = "E006"
UNSUPPORTED = "E007"
DUPLICATE = "E008"


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if self.end < self.start:
            object.__setattr__(self, "end", self.start)

    def join(self, other: "Span") -> "Span":
        return Span(min(self.start, other.start), max(self.end, other.end))


def line_col(source: str, offset: int) -> tuple[int, int]:
    offset = max(0, min(offset, len(source)))
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Span
    severity: str = "error"

    def render(self, source: str, filename: str = "<input>") -> str:
        line, col = line_col(source, self.span.start)
        head = f"{filename}:{line}:{col}: {self.severity}: {self.code}: {self.message}"
        start = source.rfind("\n", 0, self.span.start) + 1
        stop = source.find("\n", start)
        if stop < 0:
            stop = len(source)
        text = source[start:stop]
        width = max(1, min(self.span.end, stop) - self.span.start)
        caret = " " * (col - 1) + "^" + "~" * (width - 1)
        return f"{head}\n  {text}\n  {caret}"

    def as_json(self, source: str, filename: str) -> dict:
        line, col = line_col(source, self.span.start)
        return {
            "file": filename,
            "line": line,
            "col": col,
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
        }


class FrontendError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic

    @property
    def code(self) -> str:
        return self.diagnostic.code

    @property
    def span(self) -> Span:
        return self.diagnostic.span


class ParseError(FrontendError):
    """Input does not match the grammar; ``expected`` lists what would have."""

    def __init__(self, message: str, span: Span, expected: tuple[str, ...] = ()):
        if expected:
            message = f"{message}; expected {', '.join(expected)}"
        super().__init__(Diagnostic(SYNTAX, message, span))
        self.expected = expected


class UnresolvedIdentifier(FrontendError):
    def __init__(self, name: str, span: Span):
        super().__init__(Diagnostic(UNRESOLVED, f"unresolved identifier {name!r}", span))
        self.name = name


class UnknownCommand(FrontendError):
    def __init__(self, name: str, span: Span):
        super().__init__(Diagnostic(UNKNOWN_COMMAND, f"unknown command {name!r}", span))
        self.name = name


class KindError(FrontendError):
    def __init__(self, message: str, span: Span):
        super().__init__(Diagnostic(KIND_MISMATCH, message, span))


class UndeclaredPopulation(FrontendError):
    def __init__(self, name: str, span: Span):
        super().__init__(Diagnostic(UNDECLARED_POPULATION, f"undeclared population {name!r}", span))
        self.name = name


class UnannotatedFunction(FrontendError):
    def __init__(self, name: str, span: Span):
        super().__init__(Diagnostic(UNANNOTATED, f"function {name!r} has no (*@ requires ... ensures ... *) block", span))
        self.name = name


class UnsupportedConstruct(FrontendError):
    def __init__(self, message: str, span: Span):
        super().__init__(Diagnostic(UNSUPPORTED, message, span))


class DuplicateDefinition(FrontendError):
    def __init__(self, name: str, span: Span):
        super().__init__(Diagnostic(DUPLICATE, f"{name!r} is already defined", span))
        self.name = name
