"""Terms, formulas, p-value records and test histories of belief Hoare logic.

Everything here is immutable.  Real constants are exact rationals; p-values
are :class:`~bhlcheck.pexpr.PExpr` values so that symbolic p-values returned
by test commands can flow through the same records as concrete ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Union

from bhlcheck import pexpr
from bhlcheck.pexpr import PExpr

# ---------------------------------------------------------------------------
# Errors


class LogicError(Exception):
    pass


class UnboundPlaceholder(LogicError):
    def __init__(self, name: str):
        super().__init__(f"no binding for placeholder {name!r}")
        self.name = name


class KindMismatch(LogicError):
    def __init__(self, name: str, expected: str, got: str):
        super().__init__(f"{name}: expected a {expected}, got a {got}")
        self.name = name
        self.expected = expected
        self.got = got


class IllFormed(LogicError):
    pass


# ---------------------------------------------------------------------------
# Populations and datasets


@dataclass(frozen=True)
class NormalD:
    mu: str = "_"
    sigma: str = "_"


@dataclass(frozen=True)
class UnknownD:
    pass


@dataclass(frozen=True)
class Population:
    id: str
    dist: Union[NormalD, UnknownD] = UnknownD()


@dataclass(frozen=True)
class Dataset:
    id: str
    source: str
    size: int | None = None

    def __post_init__(self):
        if self.size is not None and self.size < 2:
            raise ValueError(f"dataset {self.id}: size must be at least 2")


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", pexpr.to_fraction(self.value))


@dataclass(frozen=True)
class RealVar:
    name: str


@dataclass(frozen=True)
class PopRef:
    name: str


@dataclass(frozen=True)
class DataRef:
    name: str


@dataclass(frozen=True)
class Mean:
    of: Union[PopRef, DataRef, "Hole"]


@dataclass(frozen=True)
class PVal:
    """A p-value valued term, e.g. the argument of ``pvalue result``."""

    expr: PExpr


@dataclass(frozen=True)
class Hole:
    """Template placeholder, filled in by :func:`substitute`."""

    name: str
    kind: str


Term = Union[Const, RealVar, PopRef, DataRef, Mean, PVal, Hole]

KINDS = ("population", "dataset", "real")


def term_kind(t) -> str:
    if isinstance(t, (Const, RealVar, Mean, PVal)):
        return "real"
    if isinstance(t, PopRef):
        return "population"
    if isinstance(t, DataRef):
        return "dataset"
    if isinstance(t, Hole):
        return t.kind
    raise IllFormed(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Formulas

SIGNATURES: dict[str, tuple[str, ...]] = {
    "sampled": ("dataset", "population"),
    "is_empty": (),
    "non_paired": ("dataset", "dataset"),
    "paired": ("dataset", "dataset"),
    "is_normal": ("population",),
    "eq_var": ("population", "population"),
    "pvalue": ("real",),
    "lt": ("real", "real"),
    "gt": ("real", "real"),
    "leq": ("real", "real"),
    "geq": ("real", "real"),
    "eq": ("real", "real"),
    "neq": ("real", "real"),
}

COMPARISONS = ("lt", "gt", "leq", "geq", "eq", "neq")


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class Conj:
    parts: tuple

    def __init__(self, *parts):
        if len(parts) == 1 and isinstance(parts[0], (tuple, list)):
            parts = tuple(parts[0])
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class Disj:
    parts: tuple

    def __init__(self, *parts):
        if len(parts) == 1 and isinstance(parts[0], (tuple, list)):
            parts = tuple(parts[0])
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class Possible:
    body: "Formula"


@dataclass(frozen=True)
class Know:
    body: "Formula"


@dataclass(frozen=True)
class ExactP:
    p: PExpr

    def __post_init__(self):
        object.__setattr__(self, "p", _as_pvalue(self.p))


@dataclass(frozen=True)
class AtMostP:
    p: PExpr

    def __post_init__(self):
        object.__setattr__(self, "p", _as_pvalue(self.p))


PValueRecord = Union[ExactP, AtMostP]


def _as_pvalue(value) -> PExpr:
    if not isinstance(value, PExpr):
        value = pexpr.const(value)
    if value.is_const and not (0 <= value.value <= 1):
        raise ValueError(f"p-value {value} outside [0, 1]")
    return value


@dataclass(frozen=True)
class StatB:
    record: PValueRecord
    hyp: "Formula"


Formula = Union[Atom, Not, Conj, Disj, Possible, Know, StatB]


def atom(pred: str, *args) -> Atom:
    return Atom(pred, tuple(args))


def lt(a, b) -> Atom:
    return Atom("lt", (a, b))


def gt(a, b) -> Atom:
    return Atom("gt", (a, b))


def neq(a, b) -> Atom:
    return Atom("neq", (a, b))


IS_EMPTY = Atom("is_empty", ())


def is_modal_free(f) -> bool:
    if isinstance(f, Atom):
        return True
    if isinstance(f, Not):
        return is_modal_free(f.body)
    if isinstance(f, (Conj, Disj)):
        return all(is_modal_free(p) for p in f.parts)
    return False


def well_formed(f) -> bool:
    """Signature check for atoms plus the modality-free StatB payload rule."""
    if isinstance(f, Atom):
        sig = SIGNATURES.get(f.pred)
        if sig is None or len(sig) != len(f.args):
            return False
        try:
            return all(term_kind(a) == k for a, k in zip(f.args, sig))
        except IllFormed:
            return False
    if isinstance(f, (Not, Possible, Know)):
        return well_formed(f.body)
    if isinstance(f, (Conj, Disj)):
        return len(f.parts) > 0 and all(well_formed(p) for p in f.parts)
    if isinstance(f, StatB):
        return isinstance(f.record, (ExactP, AtMostP)) and is_modal_free(f.hyp) and well_formed(f.hyp)
    return False


def subformulas(f) -> Iterator:
    yield f
    if isinstance(f, (Not, Possible, Know)):
        yield from subformulas(f.body)
    elif isinstance(f, (Conj, Disj)):
        for p in f.parts:
            yield from subformulas(p)
    elif isinstance(f, StatB):
        yield from subformulas(f.hyp)


def atoms_of(f) -> frozenset:
    return frozenset(g for g in subformulas(f) if isinstance(g, Atom))


def modal_depth(f) -> int:
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return modal_depth(f.body)
    if isinstance(f, (Conj, Disj)):
        return max(modal_depth(p) for p in f.parts)
    if isinstance(f, (Possible, Know)):
        return 1 + modal_depth(f.body)
    return 1  # StatB payloads are modality-free


# ---------------------------------------------------------------------------
# Syntactic order and normalization


def term_key(t):
    if isinstance(t, Const):
        return (0, t.value)
    if isinstance(t, RealVar):
        return (1, t.name)
    if isinstance(t, PopRef):
        return (2, t.name)
    if isinstance(t, DataRef):
        return (3, t.name)
    if isinstance(t, Mean):
        return (4, term_key(t.of))
    if isinstance(t, PVal):
        return (5, t.expr.sort_key())
    if isinstance(t, Hole):
        return (6, t.name, t.kind)
    raise IllFormed(f"not a term: {t!r}")


def record_key(r):
    return (0 if isinstance(r, ExactP) else 1, r.p.sort_key())


def formula_key(f):
    if isinstance(f, Atom):
        return (0, f.pred, tuple(term_key(a) for a in f.args))
    if isinstance(f, Not):
        return (1, formula_key(f.body))
    if isinstance(f, Conj):
        return (2, tuple(formula_key(p) for p in f.parts))
    if isinstance(f, Disj):
        return (3, tuple(formula_key(p) for p in f.parts))
    if isinstance(f, Possible):
        return (4, formula_key(f.body))
    if isinstance(f, Know):
        return (5, formula_key(f.body))
    if isinstance(f, StatB):
        return (6, record_key(f.record), formula_key(f.hyp))
    raise IllFormed(f"not a formula: {f!r}")


def _flatten(kind, parts):
    for p in parts:
        if isinstance(p, kind):
            yield from p.parts
        else:
            yield p


def normalize(f):
    """Canonical form: no double negation; Conj/Disj flat, sorted, deduplicated."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        body = normalize(f.body)
        if isinstance(body, Not):
            return body.body
        return Not(body)
    if isinstance(f, (Conj, Disj)):
        kind = type(f)
        parts = list(_flatten(kind, (normalize(p) for p in f.parts)))
        unique = {formula_key(p): p for p in parts}
        ordered = [unique[k] for k in sorted(unique)]
        if len(ordered) == 1:
            return ordered[0]
        return kind(tuple(ordered))
    if isinstance(f, Possible):
        return Possible(normalize(f.body))
    if isinstance(f, Know):
        return Know(normalize(f.body))
    if isinstance(f, StatB):
        return StatB(f.record, normalize(f.hyp))
    raise IllFormed(f"not a formula: {f!r}")


def hypothesis_equal(f, g) -> bool:
    return normalize(f) == normalize(g)


# ---------------------------------------------------------------------------
# Substitution


def _bound_term(name: str, kind: str, value):
    if isinstance(value, Population):
        value = PopRef(value.id)
    elif isinstance(value, Dataset):
        value = DataRef(value.id)
    elif isinstance(value, (int, Fraction, float)) and not isinstance(value, bool):
        value = Const(value)
    got = term_kind(value)
    if got != kind:
        raise KindMismatch(name, kind, got)
    return value


def substitute_term(t, binding: Mapping[str, object]):
    if isinstance(t, Hole):
        if t.name not in binding:
            raise UnboundPlaceholder(t.name)
        return _bound_term(t.name, t.kind, binding[t.name])
    if isinstance(t, Mean):
        inner = substitute_term(t.of, binding)
        if term_kind(inner) not in ("population", "dataset"):
            raise KindMismatch("mean", "population or dataset", term_kind(inner))
        return Mean(inner)
    return t


def substitute(f, binding: Mapping[str, object]):
    """Replace every :class:`Hole` in ``f`` by its binding."""
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(substitute_term(a, binding) for a in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.body, binding))
    if isinstance(f, Conj):
        return Conj(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Disj):
        return Disj(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Possible):
        return Possible(substitute(f.body, binding))
    if isinstance(f, Know):
        return Know(substitute(f.body, binding))
    if isinstance(f, StatB):
        return StatB(f.record, substitute(f.hyp, binding))
    raise IllFormed(f"not a formula: {f!r}")


def map_records(f, fn):
    """Rebuild ``f`` with every p-value payload passed through ``fn``."""
    if isinstance(f, Atom):
        args = tuple(PVal(fn(a.expr)) if isinstance(a, PVal) else a for a in f.args)
        return Atom(f.pred, args)
    if isinstance(f, (Not, Possible, Know)):
        return type(f)(map_records(f.body, fn))
    if isinstance(f, (Conj, Disj)):
        return type(f)(tuple(map_records(p, fn) for p in f.parts))
    if isinstance(f, StatB):
        return StatB(type(f.record)(fn(f.record.p)), map_records(f.hyp, fn))
    raise IllFormed(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Histories and worlds


@dataclass(frozen=True)
class HistoryEntry:
    test_name: str
    hypothesis: Formula
    pvalue: PValueRecord

    def __post_init__(self):
        object.__setattr__(self, "hypothesis", normalize(self.hypothesis))


@dataclass(frozen=True)
class TestHistory:
    """Executed tests, newest first.

    ``closed`` says whether the list is the whole history.  An open history
    only knows its newest entries; whatever was recorded before the current
    function started is unknown.
    """

    entries: tuple[HistoryEntry, ...] = ()
    closed: bool = True

    __test__ = False  # not a pytest class

    def cons(self, entry: HistoryEntry) -> "TestHistory":
        return TestHistory((entry,) + self.entries, self.closed)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


EMPTY_HISTORY = TestHistory()


@dataclass(frozen=True)
class World:
    history: TestHistory
    interp: str = field(default="interp")
