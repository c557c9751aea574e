"""Tokenizer for .swl programs and their annotation blocks."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from bhlcheck.frontend.errors import ParseError, Span

KEYWORDS = frozenset(
    {
        "let", "in", "fun", "population", "dataset", "real", "hyp", "groups",
        "requires", "ensures", "size", "old", "min",
    }
)

# longest first
SYMBOLS = (
    "$!=", "<='", ">='", "(*@", "*)",
    "<'", ">'", "$=", "|=", "/\\", "\\/", "&&", "+.", "*.", "->",
    "(", ")", "[", "]", ",", ";", "=", "!", ":", "/",
)

_NUMBER = re.compile(r"\d+(?:\.\d+)?(?:/\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SPACE = re.compile(r"\s+")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "keyword", "number", "symbol", "eof"
    text: str
    span: Span = field(compare=False)

    def is_(self, text: str) -> bool:
        return self.kind in ("symbol", "keyword") and self.text == text


def _skip_comment(src: str, i: int) -> int:
    """``i`` points at ``(*``; returns the offset after the matching ``*)``."""
    depth, j = 0, i
    while j < len(src):
        if src.startswith("(*", j):
            depth += 1
            j += 2
        elif src.startswith("*)", j):
            depth -= 1
            j += 2
            if depth == 0:
                return j
        else:
            j += 1
    raise ParseError("unterminated comment", Span(i, i + 2))


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    i, n = 0, len(src)
    in_annotation = False
    while i < n:
        m = _SPACE.match(src, i)
        if m:
            i = m.end()
            continue
        if src.startswith("(*@", i):
            if in_annotation:
                raise ParseError("nested annotation block", Span(i, i + 3))
            in_annotation = True
            out.append(Token("symbol", "(*@", Span(i, i + 3)))
            i += 3
            continue
        if src.startswith("(*", i) and not src.startswith("(*)", i):
            i = _skip_comment(src, i)
            continue
        if src.startswith("*)", i):
            if not in_annotation:
                raise ParseError("'*)' outside a comment", Span(i, i + 2))
            in_annotation = False
            out.append(Token("symbol", "*)", Span(i, i + 2)))
            i += 2
            continue
        m = _NUMBER.match(src, i)
        if m:
            out.append(Token("number", m.group(), Span(i, m.end())))
            i = m.end()
            continue
        m = _IDENT.match(src, i)
        if m:
            text = m.group()
            kind = "keyword" if text in KEYWORDS else "ident"
            out.append(Token(kind, text, Span(i, m.end())))
            i = m.end()
            continue
        for sym in SYMBOLS:
            if src.startswith(sym, i):
                out.append(Token("symbol", sym, Span(i, i + len(sym))))
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {src[i]!r}", Span(i, i + 1))
    if in_annotation:
        raise ParseError("unterminated annotation block", Span(n, n))
    out.append(Token("eof", "", Span(n, n)))
    return out
