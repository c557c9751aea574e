"""Syntax trees produced by the parser.

Names are unresolved here; :mod:`bhlcheck.frontend.binder` turns them into
logic terms.  Spans are excluded from equality so that trees written with
and without the ``World (!st) interp |=`` prefix compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from bhlcheck.frontend.errors import Span

NOSPAN = Span(0, 0)


def _span():
    return field(default=NOSPAN, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Terms and p-value expressions (annotation side)


@dataclass(frozen=True)
class Name:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Number:
    value: Fraction
    span: Span = _span()


@dataclass(frozen=True)
class MeanOf:
    arg: object
    span: Span = _span()


@dataclass(frozen=True)
class ConstTerm:
    arg: object
    span: Span = _span()


@dataclass(frozen=True)
class PAdd:
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class PMin:
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class PScale:
    factor: Fraction
    arg: object
    span: Span = _span()


@dataclass(frozen=True)
class Record:
    kind: str  # "Eq" | "Leq"
    expr: object
    span: Span = _span()


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class FPred:
    pred: str
    args: tuple
    span: Span = _span()


@dataclass(frozen=True)
class FCmp:
    op: str
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class FHyp:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class FNot:
    body: object
    span: Span = _span()


@dataclass(frozen=True)
class FConj:
    parts: tuple
    span: Span = _span()


@dataclass(frozen=True)
class FDisj:
    parts: tuple
    span: Span = _span()


@dataclass(frozen=True)
class FPossible:
    body: object
    span: Span = _span()


@dataclass(frozen=True)
class FKnow:
    body: object
    span: Span = _span()


@dataclass(frozen=True)
class FStatB:
    record: Record
    body: object
    span: Span = _span()


@dataclass(frozen=True)
class FFold:
    """``for_all_pairs G (fun (x, dx) (y, dy) -> F)`` and friends."""

    op: str
    groups: object  # Name or GroupList
    control: object  # Number or None
    binders: tuple  # ((x, dx), (y, dy))
    body: object
    span: Span = _span()


@dataclass(frozen=True)
class PValueGoalAst:
    record: Record
    hyp: object
    state: str  # "final" | "old"
    span: Span = _span()


FOLD_OPS = ("for_all_pairs", "for_each_vs_control", "any_pair", "any_vs_control")


# ---------------------------------------------------------------------------
# Program expressions


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Lit:
    value: Fraction
    span: Span = _span()


@dataclass(frozen=True)
class AltLit:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class TupleExpr:
    items: tuple
    span: Span = _span()


@dataclass(frozen=True)
class GroupList:
    items: tuple  # of (Name, Name)
    span: Span = _span()


@dataclass(frozen=True)
class Apply:
    func: str
    args: tuple
    span: Span = _span()


@dataclass(frozen=True)
class AddExpr:
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class MinExpr:
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class LetIn:
    pattern: tuple  # names
    value: object
    body: object
    span: Span = _span()


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class PopulationDecl:
    name: str
    dist: str  # "NormalD" | "UnknownD"
    params: tuple = ()
    span: Span = _span()


@dataclass(frozen=True)
class DatasetDecl:
    name: str
    population: str
    size: int | None = None
    span: Span = _span()


@dataclass(frozen=True)
class RealDecl:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class HypDecl:
    name: str
    formula: object
    span: Span = _span()


@dataclass(frozen=True)
class GroupsDecl:
    name: str
    groups: GroupList
    span: Span = _span()


@dataclass(frozen=True)
class Annotation:
    pattern: tuple | None
    requires: tuple
    ensures: tuple
    span: Span = _span()


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple
    body: object
    annotation: Annotation | None
    span: Span = _span()


@dataclass(frozen=True)
class ProgramAst:
    decls: tuple
    functions: tuple
