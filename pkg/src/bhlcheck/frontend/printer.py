"""Render formulas back into the annotation syntax.

The output parses back (given a scope for the identifiers) to the normalized
formula, so it doubles as the canonical text form in reports and golden files.
"""

from __future__ import annotations

from bhlcheck.logic import (
    Atom,
    Conj,
    Const,
    DataRef,
    Disj,
    ExactP,
    Hole,
    Know,
    Mean,
    Not,
    PopRef,
    Possible,
    PVal,
    RealVar,
    StatB,
    normalize,
)
from bhlcheck.pexpr import PExpr
from bhlcheck.specs import format_number

CMP_TOKENS = {
    "lt": "<'",
    "gt": ">'",
    "leq": "<='",
    "geq": ">='",
    "eq": "$=",
    "neq": "$!=",
}


def pretty_pexpr(e: PExpr) -> str:
    def form(f):
        parts = []
        for name, c in f.coeffs:
            parts.append(name if c == 1 else f"{format_number(c)} *. {name}")
        if f.const != 0 or not parts:
            parts.append(format_number(f.const))
        return " +. ".join(parts)

    def wrap(text):
        return f"({text})" if " " in text else text

    if len(e.forms) == 1:
        return form(e.forms[0])
    text = form(e.forms[-1])
    for f in reversed(e.forms[:-1]):
        text = f"min {wrap(form(f))} {wrap(text)}"
    return text


def _pexpr_arg(e: PExpr) -> str:
    text = pretty_pexpr(e)
    if " " in text:
        return f"({text})"
    return text


def pretty_record(r) -> str:
    tag = "Eq" if isinstance(r, ExactP) else "Leq"
    return f"({tag} {_pexpr_arg(r.p)})"


def pretty_term(t) -> str:
    if isinstance(t, Const):
        return format_number(t.value)
    if isinstance(t, (RealVar, PopRef, DataRef)):
        return t.name
    if isinstance(t, Hole):
        return t.name
    if isinstance(t, Mean):
        return f"mean {pretty_term(t.of)}"
    if isinstance(t, PVal):
        return _pexpr_arg(t.expr)
    raise TypeError(f"not a term: {t!r}")


def _arg(t) -> str:
    text = pretty_term(t)
    return f"({text})" if " " in text else text


def _atom(a: Atom) -> str:
    if a.pred in CMP_TOKENS:
        left, right = a.args
        return f"{pretty_term(left)} {CMP_TOKENS[a.pred]} {pretty_term(right)}"
    if a.pred == "is_empty":
        return "is_empty (!st)"
    return " ".join([a.pred] + [_arg(t) for t in a.args])


def _unary(f) -> str:
    """Text usable as the operand of a prefix operator."""
    return f"({_pp(f)})"


def _pp(f) -> str:
    if isinstance(f, Atom):
        return _atom(f)
    if isinstance(f, Not):
        return f"Not {_unary(f.body)}"
    if isinstance(f, Possible):
        return f"Possible {_unary(f.body)}"
    if isinstance(f, Know):
        return f"Know {_unary(f.body)}"
    if isinstance(f, StatB):
        return f"StatB {pretty_record(f.record)} {_unary(f.hyp)}"
    if isinstance(f, Conj):
        return " /\\ ".join(_operand(p) for p in f.parts)
    if isinstance(f, Disj):
        return " \\/ ".join(_operand(p) for p in f.parts)
    raise TypeError(f"not a formula: {f!r}")


def _operand(f) -> str:
    text = _pp(f)
    if isinstance(f, (Conj, Disj)):
        return f"({text})"
    return text


def pretty_print(f) -> str:
    return _pp(normalize(f))
