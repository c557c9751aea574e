"""Name resolution and kind checking.

Turns a :class:`~bhlcheck.frontend.ast.ProgramAst` into a checked program:
command calls are bound to their specifications with kind-correct
arguments, hypothesis abbreviations are expanded, folds are unrolled and
annotation formulas become :mod:`bhlcheck.logic` formulas.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from bhlcheck import pexpr
from bhlcheck.frontend import ast as A
from bhlcheck.frontend.errors import (
    DuplicateDefinition,
    KindError,
    Span,
    UnannotatedFunction,
    UndeclaredPopulation,
    UnknownCommand,
    UnresolvedIdentifier,
    UnsupportedConstruct,
)
from bhlcheck.logic import (
    IS_EMPTY,
    AtMostP,
    Atom,
    Conj,
    Const,
    DataRef,
    Dataset,
    Disj,
    ExactP,
    Know,
    Mean,
    NormalD,
    Not,
    PopRef,
    Population,
    Possible,
    PVal,
    RealVar,
    StatB,
    UnknownD,
    atom,
    is_modal_free,
    normalize,
)
from bhlcheck.specs import Alt, CommandSpec, builtin_specs


@dataclass(frozen=True)
class CommandCall:
    spec: CommandSpec
    args: tuple
    span: Span = field(default=A.NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class PValueGoalSpec:
    """``claimed = compose_pvs hypothesis st`` with ``st`` the final or initial history."""

    claimed: object
    hypothesis: object
    state: str = "final"


@dataclass(frozen=True)
class Clause:
    item: object  # Formula or PValueGoalSpec
    span: Span = field(default=A.NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class CheckedFunction:
    name: str
    params: tuple
    body: object
    results: tuple[str, ...]
    requires: tuple[Clause, ...]
    ensures: tuple[Clause, ...]
    span: Span = field(default=A.NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class CheckedProgram:
    populations: dict
    datasets: dict
    reals: frozenset
    hyps: dict
    groups: dict
    functions: tuple

    def function(self, name: str) -> CheckedFunction:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def declaration_facts(self) -> list[tuple[str, object]]:
        """Facts that follow from population declarations, with their origin tag."""
        out = []
        normal = [p for p in self.populations.values() if isinstance(p.dist, NormalD)]
        for p in normal:
            out.append((f"decl:{p.id}", atom("is_normal", PopRef(p.id))))
        for p in normal:
            out.append((f"decl:{p.id}", atom("eq_var", PopRef(p.id), PopRef(p.id))))
        for p, q in itertools.permutations(normal, 2):
            if p.dist.sigma != "_" and p.dist.sigma == q.dist.sigma:
                out.append((f"decl:{p.id},{q.id}", atom("eq_var", PopRef(p.id), PopRef(q.id))))
        return out


# kinds of scope entries
POP, DATA, REAL, PVAR, HYP, GROUPS = "population", "dataset", "real", "p-value", "hypothesis", "groups"


class Scope:
    def __init__(self, parent: "Scope | None" = None):
        self.parent = parent
        self.names: dict[str, tuple[str, object]] = {}

    def lookup(self, name: str):
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None

    def define(self, name: str, kind: str, value, span: Span, *, shadow: bool = False):
        if not shadow and name in self.names:
            raise DuplicateDefinition(name, span)
        self.names[name] = (kind, value)


def _kind_error(expected: str, got: str, name: str, span: Span) -> KindError:
    return KindError(f"{name}: expected a {expected}, found a {got}", span)


# ---------------------------------------------------------------------------
# Formulas


def _span(node) -> Span:
    return getattr(node, "span", A.NOSPAN)


def bind_term(t, scope: Scope, expected: str):
    if isinstance(t, A.Number):
        if expected != REAL:
            raise _kind_error(expected, REAL, str(t.value), t.span)
        return Const(t.value)
    if isinstance(t, A.MeanOf):
        if expected != REAL:
            raise _kind_error(expected, REAL, "mean", t.span)
        inner = t.arg
        if not isinstance(inner, A.Name):
            raise KindError("mean takes a population or dataset", _span(inner))
        hit = scope.lookup(inner.name)
        if hit is None:
            raise UnresolvedIdentifier(inner.name, inner.span)
        kind, _ = hit
        if kind == POP:
            return Mean(PopRef(inner.name))
        if kind == DATA:
            return Mean(DataRef(inner.name))
        raise _kind_error("population or dataset", kind, inner.name, inner.span)
    if isinstance(t, A.ConstTerm):
        return bind_term(t.arg, scope, expected)
    if isinstance(t, A.Name):
        hit = scope.lookup(t.name)
        if hit is None:
            raise UnresolvedIdentifier(t.name, t.span)
        kind, _ = hit
        if kind == PVAR and expected == REAL:
            return PVal(pexpr.symbol(t.name))
        if kind != expected:
            raise _kind_error(expected, kind, t.name, t.span)
        if kind == POP:
            return PopRef(t.name)
        if kind == DATA:
            return DataRef(t.name)
        return RealVar(t.name)
    raise KindError("not a term", _span(t))


def bind_pexpr(e, scope: Scope) -> pexpr.PExpr:
    if isinstance(e, A.Number):
        return pexpr.const(e.value)
    if isinstance(e, A.Name):
        hit = scope.lookup(e.name)
        if hit is None:
            raise UnresolvedIdentifier(e.name, e.span)
        if hit[0] != PVAR:
            raise _kind_error(PVAR, hit[0], e.name, e.span)
        return pexpr.symbol(e.name)
    if isinstance(e, A.PAdd):
        return pexpr.add(bind_pexpr(e.left, scope), bind_pexpr(e.right, scope))
    if isinstance(e, A.PMin):
        return pexpr.minimum(bind_pexpr(e.left, scope), bind_pexpr(e.right, scope))
    if isinstance(e, A.PScale):
        return pexpr._scale(bind_pexpr(e.arg, scope), e.factor)
    raise KindError("not a p-value expression", _span(e))


def bind_record(r: A.Record, scope: Scope):
    p = bind_pexpr(r.expr, scope)
    try:
        return ExactP(p) if r.kind == "Eq" else AtMostP(p)
    except ValueError as err:
        raise KindError(str(err), r.span) from None


def _groups(g, scope: Scope) -> tuple:
    if isinstance(g, A.Name):
        hit = scope.lookup(g.name)
        if hit is None:
            raise UnresolvedIdentifier(g.name, g.span)
        if hit[0] != GROUPS:
            raise _kind_error(GROUPS, hit[0], g.name, g.span)
        return hit[1]
    out = []
    for pop, data in g.items:
        for n, want in ((pop, POP), (data, DATA)):
            hit = scope.lookup(n.name)
            if hit is None:
                raise UnresolvedIdentifier(n.name, n.span)
            if hit[0] != want:
                raise _kind_error(want, hit[0], n.name, n.span)
        out.append((pop.name, data.name))
    return tuple(out)


def _fold(f: A.FFold, scope: Scope):
    groups = _groups(f.groups, scope)
    k = len(groups)
    if f.control is None:
        pairs = list(itertools.combinations(range(k), 2))
    else:
        c = int(f.control.value)
        if not 0 <= c < k:
            raise KindError(f"control index {c} out of range for {k} groups", f.control.span)
        pairs = [(i, c) for i in range(k) if i != c]
    if not pairs:
        raise KindError("folding needs at least 2 groups", f.span)
    (x, dx), (y, dy) = f.binders
    parts = []
    for i, j in pairs:
        inner = Scope(scope)
        inner.define(x, POP, groups[i][0], f.span)
        inner.define(dx, DATA, groups[i][1], f.span)
        inner.define(y, POP, groups[j][0], f.span, shadow=True)
        inner.define(dy, DATA, groups[j][1], f.span, shadow=True)
        alias = {x: groups[i][0], dx: groups[i][1], y: groups[j][0], dy: groups[j][1]}
        parts.append(_rename(bind_formula(f.body, inner), alias))
    kind = Conj if f.op in ("for_all_pairs", "for_each_vs_control") else Disj
    return kind(tuple(parts)) if len(parts) > 1 else parts[0]


def _rename(f, alias: dict):
    """Replace fold binders by the group members they stand for."""

    def term(t):
        if isinstance(t, PopRef) and t.name in alias:
            return PopRef(alias[t.name])
        if isinstance(t, DataRef) and t.name in alias:
            return DataRef(alias[t.name])
        if isinstance(t, Mean):
            return Mean(term(t.of))
        return t

    if isinstance(f, Atom):
        return Atom(f.pred, tuple(term(a) for a in f.args))
    if isinstance(f, (Not, Possible, Know)):
        return type(f)(_rename(f.body, alias))
    if isinstance(f, (Conj, Disj)):
        return type(f)(tuple(_rename(p, alias) for p in f.parts))
    if isinstance(f, StatB):
        return StatB(f.record, _rename(f.hyp, alias))
    return f


_ARG_KINDS = {
    "sampled": (DATA, POP),
    "non_paired": (DATA, DATA),
    "paired": (DATA, DATA),
    "is_normal": (POP,),
    "eq_var": (POP, POP),
}


def bind_formula(f, scope: Scope):
    if isinstance(f, A.FPred):
        if f.pred == "is_empty":
            return IS_EMPTY
        if f.pred == "pvalue":
            return Atom("pvalue", (PVal(bind_pexpr(f.args[0], scope)),))
        kinds = _ARG_KINDS[f.pred]
        return Atom(f.pred, tuple(bind_term(a, scope, k) for a, k in zip(f.args, kinds)))
    if isinstance(f, A.FCmp):
        return Atom(f.op, (bind_term(f.left, scope, REAL), bind_term(f.right, scope, REAL)))
    if isinstance(f, A.FHyp):
        hit = scope.lookup(f.name)
        if hit is None:
            raise UnresolvedIdentifier(f.name, f.span)
        if hit[0] != HYP:
            raise _kind_error(HYP, hit[0], f.name, f.span)
        return hit[1]
    if isinstance(f, A.FNot):
        return Not(bind_formula(f.body, scope))
    if isinstance(f, A.FConj):
        return Conj(tuple(bind_formula(p, scope) for p in f.parts))
    if isinstance(f, A.FDisj):
        return Disj(tuple(bind_formula(p, scope) for p in f.parts))
    if isinstance(f, A.FPossible):
        return Possible(bind_formula(f.body, scope))
    if isinstance(f, A.FKnow):
        return Know(bind_formula(f.body, scope))
    if isinstance(f, A.FStatB):
        hyp = bind_formula(f.body, scope)
        if not is_modal_free(hyp):
            raise UnsupportedConstruct("the hypothesis of StatB must not contain modalities", f.span)
        return StatB(bind_record(f.record, scope), hyp)
    if isinstance(f, A.FFold):
        return _fold(f, scope)
    raise KindError("not a formula", _span(f))


# ---------------------------------------------------------------------------
# Programs


def _arg(spec: CommandSpec, pname: str, kind: str, a, scope: Scope):
    def named(want):
        if not isinstance(a, A.Var):
            raise KindError(f"{spec.name}: argument {pname} must be a {want}", _span(a))
        hit = scope.lookup(a.name)
        if hit is None:
            raise UnresolvedIdentifier(a.name, a.span)
        if hit[0] != want:
            raise _kind_error(want, hit[0], a.name, a.span)
        return hit

    if kind == POP:
        named(POP)
        return PopRef(a.name)
    if kind == DATA:
        named(DATA)
        return DataRef(a.name)
    if kind == REAL:
        if isinstance(a, A.Lit):
            return Const(a.value)
        named(REAL)
        return RealVar(a.name)
    if kind == "alt":
        if not isinstance(a, A.AltLit):
            raise KindError(f"{spec.name}: argument {pname} must be Two, Up or Low", _span(a))
        return Alt(a.name)
    if kind == "dataset_pair":
        if not (isinstance(a, A.TupleExpr) and len(a.items) == 2):
            raise KindError(f"{spec.name}: argument {pname} must be a pair of datasets", _span(a))
        return tuple(_arg(spec, pname, DATA, x, scope) for x in a.items)
    if kind == "groups":
        if isinstance(a, A.Var):
            g = named(GROUPS)[1]
        elif isinstance(a, A.GroupList):
            g = _groups(a, scope)
        else:
            raise KindError(f"{spec.name}: argument {pname} must be a group list", _span(a))
        return tuple((PopRef(p), DataRef(d)) for p, d in g)
    if kind == "control":
        if not (isinstance(a, A.Lit) and a.value.denominator == 1):
            raise KindError(f"{spec.name}: argument {pname} must be a group index", _span(a))
        return int(a.value)
    raise KindError(f"unsupported parameter kind {kind}", _span(a))


class Binder:
    def __init__(self, specs: dict | None = None):
        self.specs = builtin_specs() if specs is None else specs
        self.globals = Scope()
        self.populations: dict[str, Population] = {}
        self.datasets: dict[str, Dataset] = {}
        self.reals: set[str] = set()
        self.hyps: dict[str, object] = {}
        self.groups: dict[str, tuple] = {}

    def declare(self, d):
        g = self.globals
        if isinstance(d, A.PopulationDecl):
            if d.dist == "NormalD":
                dist = NormalD(*d.params) if d.params else NormalD()
            else:
                dist = UnknownD()
            self.populations[d.name] = Population(d.name, dist)
            g.define(d.name, POP, self.populations[d.name], d.span)
        elif isinstance(d, A.DatasetDecl):
            if d.population not in self.populations:
                raise UndeclaredPopulation(d.population, d.span)
            try:
                self.datasets[d.name] = Dataset(d.name, d.population, d.size)
            except ValueError as err:
                raise KindError(str(err), d.span) from None
            g.define(d.name, DATA, self.datasets[d.name], d.span)
        elif isinstance(d, A.RealDecl):
            self.reals.add(d.name)
            g.define(d.name, REAL, RealVar(d.name), d.span)
        elif isinstance(d, A.HypDecl):
            h = normalize(bind_formula(d.formula, g))
            self.hyps[d.name] = h
            g.define(d.name, HYP, h, d.span)
        elif isinstance(d, A.GroupsDecl):
            grp = _groups(d.groups, g)
            if len(grp) < 2:
                raise KindError("a group list needs at least 2 groups", d.span)
            self.groups[d.name] = grp
            g.define(d.name, GROUPS, grp, d.span)

    def expr(self, e, scope: Scope, bound: list):
        if isinstance(e, A.LetIn):
            value = self.expr(e.value, scope, bound)
            inner = Scope(scope)
            for n in e.pattern:
                if n != "_":
                    inner.define(n, PVAR, n, e.span, shadow=True)
                    bound.append(n)
            return A.LetIn(e.pattern, value, self.expr(e.body, inner, bound), e.span)
        if isinstance(e, A.Apply):
            spec = self.specs.get(e.func)
            if spec is None:
                raise UnknownCommand(e.func, e.span)
            if len(e.args) != len(spec.params):
                raise KindError(f"{spec.name} takes {len(spec.params)} arguments, got {len(e.args)}", e.span)
            args = tuple(_arg(spec, n, k, a, scope) for (n, k), a in zip(spec.params, e.args))
            return CommandCall(spec, args, e.span)
        if isinstance(e, A.Var):
            hit = scope.lookup(e.name)
            if hit is None:
                raise UnresolvedIdentifier(e.name, e.span)
            if hit[0] != PVAR:
                raise UnsupportedConstruct(f"{e.name} is a {hit[0]}; only p-values can be returned or combined", e.span)
            return e
        if isinstance(e, A.Lit):
            return e
        if isinstance(e, (A.AddExpr, A.MinExpr)):
            return type(e)(self.expr(e.left, scope, bound), self.expr(e.right, scope, bound), e.span)
        if isinstance(e, A.TupleExpr):
            return A.TupleExpr(tuple(self.expr(x, scope, bound) for x in e.items), e.span)
        raise UnsupportedConstruct("unsupported expression", _span(e))

    def function(self, fn: A.FunctionDef) -> CheckedFunction:
        if fn.annotation is None:
            raise UnannotatedFunction(fn.name, fn.span)
        scope = Scope(self.globals)
        params = []
        for p in fn.params:
            hit = self.globals.lookup(p)
            if hit is not None and hit[0] in (POP, DATA):
                params.append(hit[1])
                continue
            ds = Dataset(p, "?")
            scope.define(p, DATA, ds, fn.span)
            params.append(ds)
        bound: list[str] = []
        body = self.expr(fn.body, scope, bound)

        ann = fn.annotation
        if ann.pattern is not None:
            results = ann.pattern
        elif not fn.params:
            results = (fn.name,)
        else:
            results = ("result",)

        requires = []
        for item in ann.requires:
            if isinstance(item, A.PValueGoalAst):
                raise UnsupportedConstruct("compose_pvs goals are only allowed in ensures", item.span)
            requires.append(Clause(normalize(bind_formula(item, scope)), _span(item)))

        post = Scope(scope)
        for n in list(bound) + list(results):
            if n != "_":
                post.define(n, PVAR, n, ann.span, shadow=True)
        ensures = []
        for item in ann.ensures:
            if isinstance(item, A.PValueGoalAst):
                goal = PValueGoalSpec(
                    bind_record(item.record, post), normalize(bind_formula(item.hyp, post)), item.state
                )
                ensures.append(Clause(goal, item.span))
            else:
                ensures.append(Clause(normalize(bind_formula(item, post)), _span(item)))
        return CheckedFunction(fn.name, tuple(params), body, tuple(results), tuple(requires), tuple(ensures), fn.span)

    def program(self, prog: A.ProgramAst) -> CheckedProgram:
        for d in prog.decls:
            self.declare(d)
        names = set()
        funcs = []
        for fn in prog.functions:
            if fn.name in names:
                raise DuplicateDefinition(fn.name, fn.span)
            names.add(fn.name)
            funcs.append(self.function(fn))
        return CheckedProgram(
            dict(self.populations),
            dict(self.datasets),
            frozenset(self.reals),
            dict(self.hyps),
            dict(self.groups),
            tuple(funcs),
        )


def bind_and_check(prog: A.ProgramAst, specs: dict | None = None) -> CheckedProgram:
    return Binder(specs).program(prog)


def scope_for(populations=(), datasets=(), reals=(), pvars=(), hyps=None) -> Scope:
    """A standalone scope, e.g. for parsing formulas outside a program."""
    s = Scope()
    for n in populations:
        s.define(n, POP, Population(n), A.NOSPAN)
    for n in datasets:
        s.define(n, DATA, Dataset(n, "?"), A.NOSPAN)
    for n in reals:
        s.define(n, REAL, RealVar(n), A.NOSPAN)
    for n in pvars:
        s.define(n, PVAR, n, A.NOSPAN)
    for n, f in (hyps or {}).items():
        s.define(n, HYP, f, A.NOSPAN)
    return s
