"""Symbolic p-value expressions.

Every expression is kept in a canonical form: the minimum of a set of linear
forms ``c + a1*p1 + ... + ak*pk`` over p-value symbols.  Symbols always range
over [0, 1], which is what makes the pruning of dominated forms sound.  Sums
distribute over minima, so ``+`` and ``min`` are closed over this form.

All coefficients are exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

__all__ = [
    "Linear",
    "PExpr",
    "const",
    "symbol",
    "add",
    "total",
    "minimum",
    "cap",
    "le",
    "equivalent",
    "to_fraction",
]


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # go through repr so 0.05 becomes 1/20, not the binary expansion
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class Linear:
    const: Fraction
    coeffs: tuple[tuple[str, Fraction], ...] = ()

    def __add__(self, other: "Linear") -> "Linear":
        merged = dict(self.coeffs)
        for name, c in other.coeffs:
            merged[name] = merged.get(name, Fraction(0)) + c
        return Linear(
            self.const + other.const,
            tuple(sorted((n, c) for n, c in merged.items() if c != 0)),
        )

    def scale(self, k: Fraction) -> "Linear":
        if k == 0:
            return Linear(Fraction(0))
        return Linear(self.const * k, tuple((n, c * k) for n, c in self.coeffs))

    def dominated_by(self, other: "Linear") -> bool:
        """True iff ``other <= self`` everywhere on the unit box."""
        mine = dict(self.coeffs)
        theirs = dict(other.coeffs)
        low = self.const - other.const
        for name in mine.keys() | theirs.keys():
            d = mine.get(name, Fraction(0)) - theirs.get(name, Fraction(0))
            if d < 0:
                low += d
        return low >= 0

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        return self.const + sum((c * values[n] for n, c in self.coeffs), Fraction(0))

    def sort_key(self):
        return (len(self.coeffs), self.coeffs, self.const)

    def __str__(self) -> str:
        parts = []
        for name, c in self.coeffs:
            parts.append(name if c == 1 else f"{_fmt(c)}*{name}")
        if self.const != 0 or not parts:
            parts.append(_fmt(self.const))
        return " + ".join(parts)


def _fmt(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _prune(forms: Iterable[Linear]) -> tuple[Linear, ...]:
    unique = sorted(set(forms), key=Linear.sort_key)
    kept = []
    for f in unique:
        if any(g is not f and f.dominated_by(g) for g in unique):
            continue
        kept.append(f)
    return tuple(kept)


@dataclass(frozen=True)
class PExpr:
    """``min`` over ``forms``; a single form is a plain linear expression."""

    forms: tuple[Linear, ...]

    def __post_init__(self):
        if not self.forms:
            raise ValueError("empty p-value expression")

    @property
    def is_const(self) -> bool:
        return len(self.forms) == 1 and not self.forms[0].coeffs

    @property
    def value(self) -> Fraction:
        if not self.is_const:
            raise ValueError(f"{self} is not a constant")
        return self.forms[0].const

    def symbols(self) -> frozenset[str]:
        return frozenset(n for f in self.forms for n, _ in f.coeffs)

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        return min(f.evaluate(values) for f in self.forms)

    def substitute(self, mapping: Mapping[str, "PExpr"]) -> "PExpr":
        """Simultaneously replace symbols by expressions."""
        result = None
        for form in self.forms:
            acc = const(form.const)
            for name, c in form.coeffs:
                term = mapping.get(name)
                if term is None:
                    term = symbol(name)
                acc = add(acc, _scale(term, c))
            result = acc if result is None else minimum(result, acc)
        return result

    def sort_key(self):
        return tuple(f.sort_key() for f in self.forms)

    def __str__(self) -> str:
        if len(self.forms) == 1:
            return str(self.forms[0])
        return "min(" + ", ".join(str(f) for f in self.forms) + ")"


def _scale(e: PExpr, k: Fraction) -> PExpr:
    if k < 0:
        raise ValueError("negative coefficients are not p-value expressions")
    return PExpr(_prune(f.scale(k) for f in e.forms))


def const(value) -> PExpr:
    return PExpr((Linear(to_fraction(value)),))


def symbol(name: str) -> PExpr:
    return PExpr((Linear(Fraction(0), ((name, Fraction(1)),)),))


def add(a: PExpr, b: PExpr) -> PExpr:
    return PExpr(_prune(f + g for f in a.forms for g in b.forms))


def total(exprs: Iterable[PExpr]) -> PExpr:
    acc = const(0)
    for e in exprs:
        acc = add(acc, e)
    return acc


def minimum(*exprs: PExpr) -> PExpr:
    return PExpr(_prune(f for e in exprs for f in e.forms))


def cap(e: PExpr) -> PExpr:
    """``min(1, e)``: a p-value bound above one says nothing."""
    return minimum(e, const(1))


def le(a: PExpr, b: PExpr) -> bool:
    """Sound (incomplete) check that ``a <= b`` for all symbol values in [0, 1]."""
    return all(any(bf.dominated_by(af) for af in a.forms) for bf in b.forms)


def equivalent(a: PExpr, b: PExpr) -> bool:
    return a == b or (le(a, b) and le(b, a))
