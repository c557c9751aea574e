"""SMT-LIB2 rendering of verification conditions, for cross-checking.

Atoms become uninterpreted Booleans and p-value symbols become Reals in
[0, 1].  Modal subformulas are opaque Booleans constrained by one pass of
axioms (T, the Possible/Know duality, S5 collapse of nested modalities,
StatB weakening and what the history supports).  The goal is asserted
negated, so ``unsat`` means the VC holds.
"""

from __future__ import annotations

from fractions import Fraction

from bhlcheck import pexpr
from bhlcheck.entail import PValueGoal, nnf
from bhlcheck.frontend.printer import pretty_print, pretty_record
from bhlcheck.logic import (
    AtMostP,
    Atom,
    Conj,
    Disj,
    ExactP,
    Know,
    Not,
    Possible,
    PVal,
    StatB,
    TestHistory,
    is_modal_free,
    normalize,
    subformulas,
)
from bhlcheck.specs import (
    OpenHistory,
    UnmatchedHypothesis,
    _compose,
    candidate_subhistories,
    compose_pvs,
    implies,
    refutes,
)

MAX_HISTORY_CASES = 64


class UnsupportedConstruct(Exception):
    pass


def smt_filename(vc) -> str:
    safe = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in vc.function)
    return f"vc_{safe}_{vc.index}.smt2"


def _num(q: Fraction) -> str:
    if q.denominator == 1:
        return f"{q.numerator}.0"
    return f"(/ {q.numerator}.0 {q.denominator}.0)"


class _Encoder:
    def __init__(self, history: TestHistory):
        self.history = history
        self.bools: dict = {}
        self.reals: dict[str, str] = {}
        self.comments: list[str] = []
        self.axioms: list[str] = []

    # -- p-values ----------------------------------------------------------

    def real(self, name: str) -> str:
        if name not in self.reals:
            self.reals[name] = f"|p:{name}|"
        return self.reals[name]

    def linear(self, f: pexpr.Linear) -> str:
        terms = [_num(f.const)] if f.const != 0 or not f.coeffs else []
        for name, c in f.coeffs:
            v = self.real(name)
            terms.append(v if c == 1 else f"(* {_num(c)} {v})")
        return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"

    def pexpr(self, e: pexpr.PExpr) -> str:
        parts = [self.linear(f) for f in e.forms]
        acc = parts[0]
        for p in parts[1:]:
            acc = f"(ite (<= {acc} {p}) {acc} {p})"
        return acc

    # -- formulas ----------------------------------------------------------

    def var(self, f) -> str:
        if f not in self.bools:
            k = len(self.bools)
            prefix = "a" if isinstance(f, Atom) else "m"
            name = f"{prefix}{k}"
            self.bools[f] = name
            self.comments.append(f"; {name} := {pretty_print(f)}")
        return self.bools[f]

    def enc(self, f) -> str:
        if isinstance(f, Atom):
            if f.pred == "pvalue":
                (arg,) = f.args
                if isinstance(arg, PVal):
                    e = self.pexpr(arg.expr)
                    return f"(and (<= 0.0 {e}) (<= {e} 1.0))"
            return self.var(f)
        if isinstance(f, Not):
            return f"(not {self.enc(f.body)})"
        if isinstance(f, Conj):
            return f"(and {' '.join(self.enc(p) for p in f.parts)})"
        if isinstance(f, Disj):
            return f"(or {' '.join(self.enc(p) for p in f.parts)})"
        if isinstance(f, StatB):
            if not is_modal_free(f.hyp):
                raise UnsupportedConstruct(f"StatB over a modal formula: {pretty_print(f)}")
            return self.var(f)
        if isinstance(f, (Know, Possible)):
            return self.var(f)
        raise UnsupportedConstruct(f"not a formula: {f!r}")

    # -- axioms ------------------------------------------------------------

    def saturate(self):
        """One pass of modal and history axioms over the opaque symbols seen so far."""
        done = set()
        while True:
            pending = [f for f in self.bools if f not in done]
            if not pending:
                break
            for f in pending:
                done.add(f)
                self._axioms_for(f)

    def _axioms_for(self, f):
        v = self.bools[f]
        if isinstance(f, Atom) and f.pred == "is_empty":
            if len(self.history) > 0:
                self.axioms.append(f"(not {v})")
            elif self.history.closed:
                self.axioms.append(v)
        elif isinstance(f, Know):
            self.axioms.append(f"(=> {v} {self.enc(f.body)})")
            dual = Possible(normalize(nnf(f.body, negate=True)))
            self.axioms.append(f"(= {v} (not {self.enc(dual)}))")
            if isinstance(f.body, (Know, Possible)):
                self.axioms.append(f"(= {v} {self.enc(f.body)})")
        elif isinstance(f, Possible):
            self.axioms.append(f"(=> {self.enc(f.body)} {v})")
            if isinstance(f.body, (Know, Possible)):
                self.axioms.append(f"(= {v} {self.enc(f.body)})")
        elif isinstance(f, StatB):
            self._statb(f, v)

    def _statb(self, f: StatB, v: str):
        for g, w in list(self.bools.items()):
            if g is f or not isinstance(g, StatB) or g.hyp != f.hyp:
                continue
            if implies(f.record, g.record):
                self.axioms.append(f"(=> {v} {w})")
            if implies(g.record, f.record):
                self.axioms.append(f"(=> {w} {v})")
        if refutes(self.history, f.record, f.hyp):
            self.axioms.append(f"(not {v})")
            return
        want = self.pexpr(f.record.p)
        for n, sub in enumerate(candidate_subhistories(f.hyp, self.history)):
            if n >= MAX_HISTORY_CASES:
                break
            try:
                got = _compose(normalize(f.hyp), sub)
            except UnmatchedHypothesis:
                continue
            have = self.pexpr(got.p)
            if isinstance(f.record, ExactP):
                if isinstance(got, ExactP):
                    self.axioms.append(f"(=> (= {have} {want}) {v})")
            else:
                self.axioms.append(f"(=> (<= {have} {want}) {v})")


def _record_goal(enc: _Encoder, goal: PValueGoal, history: TestHistory) -> str:
    try:
        got = compose_pvs(goal.hypothesis, history)
    except (OpenHistory, UnmatchedHypothesis):
        return "false"
    if isinstance(got, ExactP) != isinstance(goal.claimed, ExactP):
        return "false"
    if isinstance(got, AtMostP):
        a = enc.pexpr(pexpr.cap(got.p))
        b = enc.pexpr(pexpr.cap(goal.claimed.p))
    else:
        a, b = enc.pexpr(got.p), enc.pexpr(goal.claimed.p)
    enc.comments.append(f"; goal: {pretty_record(goal.claimed)} = compose_pvs (...) gives {pretty_record(got)}")
    return f"(= {a} {b})"


def emit_formula_check(facts, history: TestHistory, goal, title: str = "vc") -> str:
    enc = _Encoder(history)
    fact_lines = [enc.enc(normalize(getattr(f, "formula", f))) for f in facts]
    if isinstance(goal, PValueGoal):
        goal_text = _record_goal(enc, goal, history)
    else:
        goal_text = enc.enc(normalize(goal))
    enc.saturate()

    out = [f"; {title}", "(set-logic QF_LRA)"]
    out += enc.comments
    for name in sorted(enc.bools.values(), key=lambda s: (s[0], int(s[1:]))):
        out.append(f"(declare-const {name} Bool)")
    for sym in sorted(enc.reals):
        v = enc.reals[sym]
        out.append(f"(declare-const {v} Real)")
        out.append(f"(assert (and (<= 0.0 {v}) (<= {v} 1.0)))")
    for ax in enc.axioms:
        out.append(f"(assert {ax})")
    for line in fact_lines:
        out.append(f"(assert {line})")
    out.append(f"(assert (not {goal_text}))")
    out.append("(check-sat)")
    return "\n".join(out) + "\n"


def emit_smtlib(vc) -> str:
    """Self-contained SMT-LIB2 script for one VC; ``unsat`` means proved."""
    for f in vc.facts:
        for g in subformulas(getattr(f, "formula", f)):
            if isinstance(g, StatB) and not is_modal_free(g.hyp):
                raise UnsupportedConstruct(f"StatB over a modal formula: {pretty_print(g)}")
    title = f"{vc.function} #{vc.index}: {vc.label}"
    return emit_formula_check(vc.facts, vc.history, vc.goal, title)
