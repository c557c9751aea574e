"""Discharging verification conditions.

``discharge`` decides ``facts ⊢ goal`` at the actual world, whose test history
is given.  It works in stages, cheapest first:

1. split conjunctive goals; close subgoals that are literally facts;
2. compute: evaluate ``compose_pvs`` and compare p-value records exactly;
3. StatB from the history (composition over recorded tests, then weakening);
4. a refutation tableau for S5: the negated goal is added to the facts in
   negation normal form, boxed formulas hold in every world of the
   equivalence class, each diamond gets a witness world.  World 0 is the
   actual world and is the only one whose history is known.

Every rule is valid in the Kripke semantics of :mod:`bhlcheck.kripke`, which
is what the oracle tests check.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from bhlcheck import pexpr
from bhlcheck.frontend.printer import pretty_pexpr, pretty_print, pretty_record
from bhlcheck.logic import (
    IS_EMPTY,
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
    normalize,
)
from bhlcheck.specs import (
    OpenHistory,
    UnmatchedHypothesis,
    belief_witness,
    compose_pvs,
    implies,
    refutes,
)

DEFAULT_DEPTH = 12

PROVED = "proved"
FAILED = "failed"
DEPTH_EXCEEDED = "depth-exceeded"
TIMEOUT = "timeout"


@dataclass(frozen=True)
class Fact:
    formula: object
    origin: object = None


@dataclass(frozen=True)
class PValueGoal:
    """``claimed = compose_pvs hypothesis st`` at the record level."""

    claimed: object
    hypothesis: object

    def __str__(self) -> str:
        return f"{pretty_record(self.claimed)} = compose_pvs ({pretty_print(self.hypothesis)}) !st"


@dataclass(frozen=True)
class DischargeResult:
    status: str
    trace: tuple[str, ...] = ()
    missing: tuple = ()
    used: frozenset = frozenset()
    detail: str = ""

    @property
    def proved(self) -> bool:
        return self.status == PROVED


class _Timeout(Exception):
    pass


def _coerce(facts) -> list[Fact]:
    out = []
    for f in facts:
        if isinstance(f, Fact):
            out.append(Fact(normalize(f.formula), f.origin))
        else:
            out.append(Fact(normalize(f), None))
    return out


def record_equal(a, b) -> bool:
    if isinstance(a, ExactP) != isinstance(b, ExactP):
        return False
    if isinstance(a, ExactP):
        return pexpr.equivalent(a.p, b.p)
    return pexpr.equivalent(pexpr.cap(a.p), pexpr.cap(b.p))


def uncapped(e: pexpr.PExpr) -> pexpr.PExpr:
    """``e`` without a vacuous ``min(1, ...)`` cap."""
    forms = tuple(f for f in e.forms if f != pexpr.Linear(Fraction(1)))
    if forms and len(forms) < len(e.forms):
        return pexpr.PExpr(forms)
    return e


def show_record(r) -> str:
    return pretty_record(type(r)(uncapped(r.p)))


# ---------------------------------------------------------------------------
# NNF


def nnf(f, negate: bool = False):
    if isinstance(f, (Atom, StatB)):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.body, not negate)
    if isinstance(f, Conj):
        parts = tuple(nnf(p, negate) for p in f.parts)
        return Disj(parts) if negate else Conj(parts)
    if isinstance(f, Disj):
        parts = tuple(nnf(p, negate) for p in f.parts)
        return Conj(parts) if negate else Disj(parts)
    if isinstance(f, Know):
        return Possible(nnf(f.body, True)) if negate else Know(nnf(f.body))
    if isinstance(f, Possible):
        return Know(nnf(f.body, True)) if negate else Possible(nnf(f.body))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Tableau


class _Branch:
    __slots__ = ("lits", "seen", "boxes", "alpha", "diamonds", "betas", "trace", "exceeded")

    def __init__(self):
        self.lits: list[dict] = []
        self.seen: list[set] = []
        self.boxes: list[tuple] = []
        self.alpha: deque = deque()
        self.diamonds: deque = deque()
        self.betas: deque = deque()
        self.trace: list[str] = []
        self.exceeded = False

    def clone(self) -> "_Branch":
        b = _Branch()
        b.lits = [dict(d) for d in self.lits]
        b.seen = [set(s) for s in self.seen]
        b.boxes = list(self.boxes)
        b.alpha = deque(self.alpha)
        b.diamonds = deque(self.diamonds)
        b.betas = deque(self.betas)
        b.trace = []
        b.exceeded = self.exceeded
        return b

    def new_world(self) -> int:
        self.lits.append({})
        self.seen.append(set())
        return len(self.lits) - 1


@dataclass
class _Closed:
    closed: bool
    trace: list = field(default_factory=list)
    used: frozenset = frozenset()
    exceeded: bool = False


def _literal_text(lit) -> str:
    return pretty_print(lit)


class _Tableau:
    def __init__(self, facts: Sequence[Fact], history: TestHistory, history_origin, depth_limit: int, deadline):
        self.facts = facts
        self.history = history
        self.history_origin = history_origin
        self.depth_limit = depth_limit
        self.deadline = deadline
        self.steps = 0

    def refute(self, negated_goal) -> _Closed:
        br = _Branch()
        br.new_world()
        for fact in self.facts:
            br.alpha.append((0, nnf(fact.formula), frozenset() if fact.origin is None else frozenset([fact.origin])))
        br.alpha.append((0, negated_goal, frozenset(["<goal>"])))
        br.trace.append("negate-goal")
        return self._run(br)

    def _tick(self):
        self.steps += 1
        if self.deadline is not None and self.steps % 64 == 1 and time.monotonic() > self.deadline:
            raise _Timeout()

    def _run(self, br: _Branch) -> _Closed:
        while True:
            self._tick()
            if br.alpha:
                w, f, o = br.alpha.popleft()
                clash = self._add(br, w, f, o)
                if clash is not None:
                    return _Closed(True, br.trace, clash)
            elif br.diamonds:
                w, f, o = br.diamonds.popleft()
                self._diamond(br, f, o)
            elif br.betas:
                w, f, o = br.betas.popleft()
                if any(p in br.seen[w] for p in f.parts):
                    continue
                br.trace.append(f"or-split({len(f.parts)})")
                trace = list(br.trace)
                used = frozenset()
                for part in f.parts:
                    child = br.clone()
                    child.alpha.append((w, part, o))
                    res = self._run(child)
                    if not res.closed:
                        return res
                    trace += res.trace
                    used |= res.used
                return _Closed(True, trace, used)
            else:
                return _Closed(False, br.trace, frozenset(), br.exceeded)

    def _diamond(self, br: _Branch, f, o):
        body = f.body
        if any(body in s for s in br.seen):
            return
        if len(br.lits) - 1 >= self.depth_limit:
            br.exceeded = True
            return
        v = br.new_world()
        br.trace.append("P-witness")
        br.alpha.append((v, body, o))
        for x, ox in br.boxes:
            br.alpha.append((v, x, ox))

    def _add(self, br: _Branch, w: int, f, o):
        seen = br.seen[w]
        if f in seen:
            return None
        seen.add(f)
        if isinstance(f, Conj):
            for p in f.parts:
                br.alpha.append((w, p, o))
            return None
        if isinstance(f, Disj):
            br.betas.append((w, f, o))
            return None
        if isinstance(f, Know):
            br.boxes.append((f.body, o))
            for v in range(len(br.lits)):
                br.alpha.append((v, f.body, o))
            br.trace.append("T" if len(br.lits) == 1 else "K-propagate")
            return None
        if isinstance(f, Possible):
            br.diamonds.append((w, f, o))
            return None
        return self._literal(br, w, f, o)

    def _literal(self, br: _Branch, w: int, lit, o):
        lits = br.lits[w]
        negative = isinstance(lit, Not)
        core = lit.body if negative else lit
        other = core if negative else Not(core)
        if other in lits:
            br.trace.append(f"clash({_literal_text(core)})")
            return (o | lits[other]) - {"<goal>"}

        if isinstance(core, StatB):
            for seen_lit, so in lits.items():
                s_neg = isinstance(seen_lit, Not)
                s_core = seen_lit.body if s_neg else seen_lit
                if not isinstance(s_core, StatB) or s_neg == negative or s_core.hyp != core.hyp:
                    continue
                pos, neg = (s_core, core) if negative else (core, s_core)
                if implies(pos.record, neg.record):
                    br.trace.append(f"weaken({pretty_pexpr(pos.record.p)} <= {pretty_pexpr(neg.record.p)})")
                    br.trace.append(f"clash({_literal_text(neg)})")
                    return (o | so) - {"<goal>"}

        if negative and isinstance(core, Atom) and core.pred == "pvalue":
            (arg,) = core.args
            if isinstance(arg, PVal) and _in_unit(arg.expr):
                br.trace.append("unfold(pvalue)")
                return o - {"<goal>"}

        if w == 0:
            clash = self._history_clash(br, core, negative)
            if clash is not None:
                return (o | clash) - {"<goal>"}

        lits[lit] = o
        return None

    def _history_clash(self, br: _Branch, core, negative: bool):
        st = self.history
        origin = frozenset() if self.history_origin is None else frozenset([self.history_origin])
        if isinstance(core, StatB):
            if negative:
                hit = belief_witness(st, core.record, core.hyp)
                if hit is not None:
                    sub, got = hit
                    br.trace.append(f"history-lookup({len(sub)})")
                    br.trace.append("compose_pvs")
                    if isinstance(core.record, AtMostP):
                        br.trace.append(f"weaken({pretty_pexpr(uncapped(got.p))} <= {pretty_pexpr(core.record.p)})")
                    return frozenset()
            elif refutes(st, core.record, core.hyp):
                br.trace.append("history-refute")
                return origin
        elif isinstance(core, Atom) and core.pred == "is_empty":
            if not negative and len(st) > 0:
                br.trace.append("history-nonempty")
                return frozenset()
            if negative and st.closed and len(st) == 0:
                br.trace.append("history-empty")
                return origin
        return None


def _in_unit(e) -> bool:
    return pexpr.le(pexpr.const(0), e) and pexpr.le(e, pexpr.const(1))


# ---------------------------------------------------------------------------
# Stages


def _split(goal) -> list:
    if isinstance(goal, Conj):
        return list(goal.parts)
    return [goal]


class _Prover:
    def __init__(self, facts, history, history_origin, depth_limit, deadline):
        self.facts = facts
        self.index = {}
        for f in facts:
            self.index.setdefault(f.formula, f.origin)
        self.history = history
        self.history_origin = history_origin
        self.depth_limit = depth_limit
        self.deadline = deadline

    def _used(self, *origins) -> frozenset:
        return frozenset(o for o in origins if o is not None)

    def one(self, goal) -> DischargeResult:
        if goal in self.index:
            return DischargeResult(PROVED, ("member",), used=self._used(self.index[goal]))

        st = self.history
        if isinstance(goal, StatB):
            hit = belief_witness(st, goal.record, goal.hyp)
            if hit is not None:
                sub, got = hit
                trace = [f"history-lookup({len(sub)})", "compose_pvs"]
                if isinstance(goal.record, AtMostP):
                    trace.append(f"weaken({pretty_pexpr(uncapped(got.p))} <= {pretty_pexpr(goal.record.p)})")
                return DischargeResult(PROVED, tuple(trace))
        if goal == IS_EMPTY and st.closed and len(st) == 0:
            return DischargeResult(PROVED, ("history-empty",), used=self._used(self.history_origin))
        if isinstance(goal, Atom) and goal.pred == "pvalue":
            (arg,) = goal.args
            if isinstance(arg, PVal) and _in_unit(arg.expr):
                return DischargeResult(PROVED, ("unfold(pvalue)",))

        tab = _Tableau(self.facts, st, self.history_origin, self.depth_limit, self.deadline)
        res = tab.refute(nnf(goal, negate=True))
        if res.closed:
            return DischargeResult(PROVED, tuple(res.trace), used=res.used)
        return DischargeResult(DEPTH_EXCEEDED if res.exceeded else FAILED)

    def formula(self, goal) -> DischargeResult:
        parts = _split(goal)
        if len(parts) == 1:
            return self.one(goal)
        trace, used, status = ["split"], frozenset(), PROVED
        for p in parts:
            r = self.one(p)
            if not r.proved:
                if status == PROVED or r.status == DEPTH_EXCEEDED:
                    status = r.status
                continue
            trace += r.trace
            used |= r.used
        if status != PROVED:
            return DischargeResult(status)
        return DischargeResult(PROVED, tuple(trace), used=used)

    def pvalue_goal(self, goal: PValueGoal) -> DischargeResult:
        try:
            got = compose_pvs(goal.hypothesis, self.history)
        except OpenHistory as e:
            return DischargeResult(FAILED, missing=(IS_EMPTY,), detail=str(e))
        except UnmatchedHypothesis as e:
            return DischargeResult(
                FAILED,
                missing=(e.hypothesis,),
                detail=f"hypothesis never tested: {pretty_print(e.hypothesis)}",
            )
        trace = ("compute(compose_pvs)", f"record-eq({show_record(got)} = {show_record(goal.claimed)})")
        if record_equal(got, goal.claimed):
            return DischargeResult(PROVED, trace, used=self._used(self.history_origin))
        return DischargeResult(
            FAILED,
            missing=(goal,),
            detail=f"compose_pvs gives {show_record(got)} but the program reports {show_record(goal.claimed)}",
        )


def _discharge(facts, history, goal, depth_limit, history_origin, deadline) -> DischargeResult:
    prover = _Prover(facts, history, history_origin, depth_limit, deadline)
    try:
        if isinstance(goal, PValueGoal):
            return prover.pvalue_goal(goal)
        return prover.formula(normalize(goal))
    except _Timeout:
        return DischargeResult(TIMEOUT, detail="timeout")


def discharge(
    facts: Iterable,
    history: TestHistory,
    goal,
    depth_limit: int = DEFAULT_DEPTH,
    *,
    history_origin=None,
    timeout: float | None = None,
) -> DischargeResult:
    """Decide ``facts ⊢ goal`` at the actual world with test history ``history``.

    ``facts`` may be formulas or :class:`Fact` values; origins of the facts a
    proof consumed are reported in ``used``.  ``history_origin`` is reported
    when a proof relies on the history being complete.
    """
    facts = _coerce(facts)
    deadline = None if timeout is None else time.monotonic() + timeout
    res = _discharge(facts, history, goal, depth_limit, history_origin, deadline)
    if res.status == FAILED and not res.missing:
        missing = _frontier(facts, history, goal, depth_limit, history_origin, deadline)
        res = DischargeResult(res.status, res.trace, tuple(missing), res.used, res.detail)
    return res


def _frontier(facts, history, goal, depth_limit, history_origin, deadline) -> list:
    goal = normalize(goal)
    failed = [
        p for p in _split(goal) if not _discharge(facts, history, p, depth_limit, history_origin, deadline).proved
    ]

    def enough(cands) -> bool:
        extra = facts + [Fact(c, None) for c in cands]
        return _discharge(extra, history, goal, depth_limit, history_origin, deadline).proved

    if not enough(failed):
        return failed
    kept = list(failed)
    for c in list(failed):
        trial = [k for k in kept if k != c]
        if enough(trial):
            kept = trial
    return kept


def minimal_missing(facts: Iterable, history: TestHistory, goal, depth_limit: int = DEFAULT_DEPTH) -> list:
    """Subgoals that, added as facts, make ``goal`` provable (empty if it already is)."""
    res = discharge(facts, history, goal, depth_limit)
    if res.proved:
        return []
    return list(res.missing)
