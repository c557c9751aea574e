"""Forward symbolic execution of checked functions into verification conditions.

The state threads a symbolic test history, the fact base and an environment
of symbolic p-values.  Each command call yields one VC per instantiated
requirement and then conses its history entries; the exit yields one VC per
ensures conjunct.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from bhlcheck import pexpr
from bhlcheck.entail import DEFAULT_DEPTH, DischargeResult, Fact, PValueGoal, discharge
from bhlcheck.frontend import ast as A
from bhlcheck.frontend.binder import (
    CheckedFunction,
    CheckedProgram,
    CommandCall,
    PValueGoalSpec,
)
from bhlcheck.frontend.errors import Span
from bhlcheck.frontend.printer import pretty_print
from bhlcheck.logic import IS_EMPTY, Conj, TestHistory, map_records, normalize
from bhlcheck.specs import CommandSpec, instantiate


class VcgenError(Exception):
    pass


class UnknownCommand(VcgenError):
    pass


class NonPValueExpression(VcgenError):
    pass


class UnsupportedStatement(VcgenError):
    pass


@dataclass(frozen=True)
class VerifCondition:
    index: int
    function: str
    label: str
    facts: tuple[Fact, ...]
    history: TestHistory
    goal: object
    loc: Span = field(compare=False)
    kind: str = "requires"  # "requires" (at a call) | "ensures" (at exit)
    history_origin: object = None

    @property
    def goal_text(self) -> str:
        if isinstance(self.goal, PValueGoal):
            return str(self.goal)
        return pretty_print(self.goal)


@dataclass(frozen=True)
class SymbolicState:
    history: TestHistory
    facts: tuple[Fact, ...]
    env: dict = field(hash=False)
    used_names: frozenset = frozenset()
    history_origin: object = None


def requires_conjuncts(fn: CheckedFunction) -> list:
    """The function's requires clause split into normalized conjuncts.

    Their positions are the origins reported in ``DischargeResult.used``.
    """
    parts = []
    for clause in fn.requires:
        f = normalize(clause.item)
        parts.extend(f.parts if isinstance(f, Conj) else [f])
    out = []
    for p in parts:
        if p not in out:
            out.append(p)
    return out


def initial_state(fn: CheckedFunction, program: CheckedProgram, requires=None) -> SymbolicState:
    conj = requires_conjuncts(fn) if requires is None else list(requires)
    facts, closed, origin = [], False, None
    for i, f in enumerate(conj):
        if f == IS_EMPTY:
            closed, origin = True, i
        else:
            facts.append(Fact(f, i))
    for tag, f in program.declaration_facts():
        facts.append(Fact(normalize(f), tag))
    return SymbolicState(TestHistory((), closed), tuple(facts), {}, frozenset(), origin)


def pvalue_expr_eval(env: dict, expr) -> pexpr.PExpr:
    """Symbolic value of a p-value expression (``p1 +. p2``, ``min p1 p2``, literals)."""
    if isinstance(expr, A.Lit):
        return pexpr.const(expr.value)
    if isinstance(expr, A.Var):
        v = env.get(expr.name)
        if not isinstance(v, pexpr.PExpr):
            raise NonPValueExpression(f"{expr.name} is not a p-value")
        return v
    if isinstance(expr, A.AddExpr):
        return pexpr.add(pvalue_expr_eval(env, expr.left), pvalue_expr_eval(env, expr.right))
    if isinstance(expr, A.MinExpr):
        return pexpr.minimum(pvalue_expr_eval(env, expr.left), pvalue_expr_eval(env, expr.right))
    raise NonPValueExpression(f"not a p-value expression: {expr!r}")


def _fresh(name: str, used: set) -> str:
    if name not in used:
        return name
    k = 2
    while f"{name}#{k}" in used:
        k += 1
    return f"{name}#{k}"


def step_command(
    state: SymbolicState,
    call: CommandCall,
    spec: CommandSpec | None = None,
    *,
    names: tuple | None = None,
    function: str = "<main>",
    start_index: int = 0,
    call_number: int = 1,
):
    """Execute one command call: returns (new state, VCs, symbolic result).

    The result is one p-value symbol, or a tuple of them for multiple
    comparison commands, named after ``names`` when they fit.
    """
    if spec is not None and spec.name != call.spec.name:
        raise UnknownCommand(f"call to {call.spec.name} checked against {spec.name}")
    spec = call.spec
    used = set(state.used_names)
    n = len(instantiate(spec, call.args).comparisons)
    if names is not None and len(names) == n and "_" not in names:
        bases = list(names)
    elif n == 1:
        bases = [f"{spec.test_name}_{call_number}"]
    else:
        bases = [f"{spec.test_name}_{call_number}_{k}" for k in range(n)]
    symbols = []
    for b in bases:
        s = _fresh(b, used)
        used.add(s)
        symbols.append(s)
    inst = instantiate(spec, call.args, [pexpr.symbol(s) for s in symbols])
    vcs = [
        VerifCondition(
            start_index + k, function, req.label, state.facts, state.history, req.formula,
            call.span, "requires", state.history_origin,
        )
        for k, req in enumerate(inst.requires)
    ]
    hist = state.history
    for entry in inst.entries:
        hist = hist.cons(entry)
    values = tuple(pexpr.symbol(s) for s in symbols)
    new = replace(state, history=hist, used_names=frozenset(used))
    return new, vcs, values[0] if n == 1 else values


class _Executor:
    def __init__(self, fn: CheckedFunction, program: CheckedProgram, requires=None, start_index: int = 0):
        self.fn = fn
        self.program = program
        self.state = initial_state(fn, program, requires)
        self.vcs: list[VerifCondition] = []
        self.next_index = start_index
        self.calls = 0

    def emit(self, label, goal, loc, kind, history=None):
        st = self.state
        self.vcs.append(
            VerifCondition(
                self.next_index,
                self.fn.name,
                label,
                st.facts,
                st.history if history is None else history,
                goal,
                loc,
                kind,
                st.history_origin,
            )
        )
        self.next_index += 1

    def step_command(self, call: CommandCall, names: tuple | None):
        self.calls += 1
        self.state, vcs, value = step_command(
            self.state, call, names=names, function=self.fn.name, start_index=self.next_index, call_number=self.calls
        )
        self.vcs += vcs
        self.next_index += len(vcs)
        return value

    def eval(self, e, names: tuple | None = None):
        if isinstance(e, A.LetIn):
            v = self.eval(e.value, e.pattern)
            env = dict(self.state.env)
            if len(e.pattern) == 1:
                env[e.pattern[0]] = v
            else:
                if not (isinstance(v, tuple) and len(v) == len(e.pattern)):
                    raise UnsupportedStatement(f"cannot destructure into {len(e.pattern)} names")
                env.update(zip(e.pattern, v))
            env.pop("_", None)
            self.state = replace(self.state, env=env)
            return self.eval(e.body, names)
        if isinstance(e, CommandCall):
            return self.step_command(e, names)
        if isinstance(e, A.TupleExpr):
            return tuple(self.eval(x) for x in e.items)
        if isinstance(e, A.Var):
            return self.state.env[e.name]
        return pvalue_expr_eval(self.state.env, e)

    def run(self, initial_history: TestHistory) -> list[VerifCondition]:
        result = self.eval(self.fn.body, self.fn.results)
        env = dict(self.state.env)
        results = self.fn.results
        if len(results) == 1:
            env[results[0]] = result
        elif isinstance(result, tuple) and len(result) == len(results):
            env.update(zip(results, result))
        else:
            raise UnsupportedStatement(f"function returns {result!r}, annotation binds {len(results)} names")
        mapping = {k: v for k, v in env.items() if isinstance(v, pexpr.PExpr)}
        sub = lambda p: p.substitute(mapping)  # noqa: E731
        for clause in self.fn.ensures:
            item = clause.item
            if isinstance(item, PValueGoalSpec):
                claimed = type(item.claimed)(sub(item.claimed.p))
                hist = initial_history if item.state == "old" else self.state.history
                goal = PValueGoal(claimed, item.hypothesis)
                self.emit(f"postcondition: {goal}", goal, clause.span, "ensures", history=hist)
                continue
            f = normalize(map_records(item, sub))
            parts = f.parts if isinstance(f, Conj) else (f,)
            for p in parts:
                self.emit(f"postcondition: {pretty_print(p)}", p, clause.span, "ensures")
        return self.vcs


def generate_vcs(fn: CheckedFunction, program: CheckedProgram, *, requires=None, start_index: int = 0) -> list[VerifCondition]:
    """VCs of one function.  ``requires`` overrides its requires conjuncts."""
    ex = _Executor(fn, program, requires, start_index)
    return ex.run(ex.state.history)


def generate_program_vcs(program: CheckedProgram) -> list[VerifCondition]:
    out = []
    for fn in program.functions:
        out += generate_vcs(fn, program, start_index=len(out))
    return out


def discharge_vc(vc: VerifCondition, depth: int = DEFAULT_DEPTH, timeout: float | None = None) -> DischargeResult:
    return discharge(vc.facts, vc.history, vc.goal, depth, history_origin=vc.history_origin, timeout=timeout)


def discharge_all(vcs, depth: int = DEFAULT_DEPTH, timeout: float | None = None, jobs: int = 1) -> list[DischargeResult]:
    """Results in VC order, whatever the number of workers."""
    if jobs <= 1:
        return [discharge_vc(vc, depth, timeout) for vc in vcs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda vc: discharge_vc(vc, depth, timeout), vcs))


def verify_function(fn: CheckedFunction, program: CheckedProgram, depth: int = DEFAULT_DEPTH, timeout: float | None = None):
    vcs = generate_vcs(fn, program)
    return list(zip(vcs, discharge_all(vcs, depth, timeout)))


def verify_program(program: CheckedProgram, depth: int = DEFAULT_DEPTH, timeout: float | None = None, jobs: int = 1):
    vcs = generate_program_vcs(program)
    return list(zip(vcs, discharge_all(vcs, depth, timeout, jobs)))
