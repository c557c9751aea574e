"""Specifications of the hypothesis-testing commands and p-value composition."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from bhlcheck import pexpr
from bhlcheck.logic import (
    AtMostP,
    Conj,
    Const,
    DataRef,
    Dataset,
    Disj,
    ExactP,
    HistoryEntry,
    Hole,
    LogicError,
    Mean,
    Not,
    PopRef,
    Population,
    Possible,
    RealVar,
    TestHistory,
    atom,
    normalize,
    substitute,
)
from bhlcheck.pexpr import PExpr


class SpecError(LogicError):
    pass


class ArityMismatch(SpecError):
    pass


class ArgKindMismatch(SpecError):
    pass


class UnmatchedHypothesis(SpecError):
    def __init__(self, hypothesis):
        super().__init__(f"hypothesis never tested: {hypothesis!r}")
        self.hypothesis = hypothesis


class OpenHistory(SpecError):
    """compose_pvs needs the whole history, but only its newest entries are known."""


class MissingControl(SpecError):
    pass


class TooFewGroups(SpecError):
    pass


class Alt(enum.Enum):
    TWO = "Two"
    UP = "Up"
    LOW = "Low"


class Method(enum.Enum):
    TUKEY_HSD = "TukeyHSD"
    DUNNETT = "Dunnett"
    WILLIAMS = "Williams"
    STEEL_DWASS = "SteelDwass"
    STEEL = "Steel"


ALL_PAIRS = frozenset({Method.TUKEY_HSD, Method.STEEL_DWASS})
VS_CONTROL = frozenset({Method.DUNNETT, Method.WILLIAMS, Method.STEEL})
PARAMETRIC = frozenset({Method.TUKEY_HSD, Method.DUNNETT, Method.WILLIAMS})


@dataclass(frozen=True)
class Requirement:
    label: str
    formula: object


@dataclass(frozen=True)
class CommandSpec:
    name: str
    test_name: str
    params: tuple[tuple[str, str], ...]
    requires: Mapping[Alt, tuple[Requirement, ...]] = field(hash=False)
    hypothesis: Mapping[Alt, object] = field(hash=False)
    method: Method | None = None

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.params)


# ---------------------------------------------------------------------------
# Requirement templates

P, MU, Y = Hole("P", "population"), Hole("MU", "real"), Hole("Y", "dataset")
P1, P2 = Hole("P1", "population"), Hole("P2", "population")
Y1, Y2 = Hole("Y1", "dataset"), Hole("Y2", "dataset")

# orientation of the alternative: Up means "left > right"
_ALT_PRED = {Alt.TWO: "neq", Alt.UP: "gt", Alt.LOW: "lt"}
_COMPLEMENT = {Alt.UP: "leq", Alt.LOW: "geq"}


def _tails(left, right, alt: Alt, what: str) -> tuple[Requirement, ...]:
    if alt is Alt.TWO:
        return (
            Requirement(f"prior belief: lower tail possible ({what} <)", Possible(atom("lt", left, right))),
            Requirement(f"prior belief: upper tail possible ({what} >)", Possible(atom("gt", left, right))),
        )
    h = atom(_ALT_PRED[alt], left, right)
    hc = atom(_COMPLEMENT[alt], left, right)
    side = "upper" if alt is Alt.UP else "lower"
    return (
        Requirement(f"prior belief: {side}-tailed alternative possible ({what})", Possible(h)),
        Requirement(f"prior belief: complement of the alternative impossible ({what})", Not(Possible(hc))),
    )


def _sampled(y, p) -> Requirement:
    return Requirement(f"sampled: dataset {{{y.name}}} drawn from population {{{p.name}}}", atom("sampled", y, p))


def _normal(p) -> Requirement:
    return Requirement(f"normality of population {{{p.name}}}", atom("is_normal", p))


def _one_sample() -> CommandSpec:
    requires, hyp = {}, {}
    for alt in Alt:
        requires[alt] = (_sampled(Y, P), _normal(P)) + _tails(Mean(P), MU, alt, "mean({P}) vs {MU}")
        hyp[alt] = atom(_ALT_PRED[alt], Mean(P), MU)
    return CommandSpec(
        "exec_ttest_1samp",
        "ttest_1samp",
        (("P", "population"), ("MU", "real"), ("Y", "dataset"), ("ALT", "alt")),
        requires,
        hyp,
    )


def _pair_requirements(alt: Alt, *, paired: bool, parametric: bool, eq_var: bool):
    reqs = [_sampled(Y1, P1), _sampled(Y2, P2)]
    if parametric:
        reqs += [_normal(P1), _normal(P2)]
    if eq_var:
        reqs.append(Requirement("equal variances of populations {P1} and {P2}", atom("eq_var", P1, P2)))
    if paired:
        reqs.append(Requirement("paired datasets {Y1} and {Y2}", atom("paired", Y1, Y2)))
    else:
        reqs.append(Requirement("non-paired datasets {Y1} and {Y2}", atom("non_paired", Y1, Y2)))
    reqs += _tails(Mean(P1), Mean(P2), alt, "mean({P1}) vs mean({P2})")
    return tuple(reqs)


def _two_sample(name: str, test_name: str, *, paired: bool) -> CommandSpec:
    requires, hyp = {}, {}
    for alt in Alt:
        requires[alt] = _pair_requirements(alt, paired=paired, parametric=True, eq_var=not paired)
        hyp[alt] = atom(_ALT_PRED[alt], Mean(P1), Mean(P2))
    return CommandSpec(
        name,
        test_name,
        (("P1", "population"), ("P2", "population"), ("YS", "dataset_pair"), ("ALT", "alt")),
        requires,
        hyp,
    )


_MC_NAMES = {
    Method.TUKEY_HSD: ("exec_tukey_hsd", "tukey_hsd"),
    Method.DUNNETT: ("exec_dunnett", "dunnett"),
    Method.WILLIAMS: ("exec_williams", "williams"),
    Method.STEEL_DWASS: ("exec_steel_dwass", "steel_dwass"),
    Method.STEEL: ("exec_steel", "steel"),
}


def _multiple(method: Method) -> CommandSpec:
    parametric = method in PARAMETRIC
    requires, hyp = {}, {}
    for alt in Alt:
        requires[alt] = _pair_requirements(alt, paired=False, parametric=parametric, eq_var=parametric)
        hyp[alt] = atom(_ALT_PRED[alt], Mean(P1), Mean(P2))
    params = [("GROUPS", "groups")]
    if method in VS_CONTROL:
        params.append(("CONTROL", "control"))
    params.append(("ALT", "alt"))
    name, test_name = _MC_NAMES[method]
    return CommandSpec(name, test_name, tuple(params), requires, hyp, method)


@lru_cache(maxsize=None)
def _builtin() -> dict[str, CommandSpec]:
    specs = [
        _one_sample(),
        _two_sample("exec_ttest_ind_eq", "ttest_ind_eq", paired=False),
        _two_sample("exec_ttest_paired", "ttest_paired", paired=True),
    ]
    specs += [_multiple(m) for m in Method]
    return {s.name: s for s in specs}


def builtin_specs() -> dict[str, CommandSpec]:
    return dict(_builtin())


# ---------------------------------------------------------------------------
# Instantiation


@dataclass(frozen=True)
class Comparison:
    """One executed test: its labelled requirements, hypothesis and history entry."""

    left: int
    right: int
    requires: tuple[Requirement, ...]
    hypothesis: object
    entry: HistoryEntry


@dataclass(frozen=True)
class Instance:
    spec: CommandSpec
    alt: Alt
    comparisons: tuple[Comparison, ...]

    @property
    def requires(self) -> tuple[Requirement, ...]:
        seen, out = set(), []
        for c in self.comparisons:
            for r in c.requires:
                if r.formula not in seen:
                    seen.add(r.formula)
                    out.append(r)
        return tuple(out)

    @property
    def hypothesis(self):
        if len(self.comparisons) != 1:
            raise SpecError(f"{self.spec.name} performs {len(self.comparisons)} comparisons")
        return self.comparisons[0].hypothesis

    @property
    def entry(self) -> HistoryEntry:
        if len(self.comparisons) != 1:
            raise SpecError(f"{self.spec.name} performs {len(self.comparisons)} comparisons")
        return self.comparisons[0].entry

    @property
    def entries(self) -> tuple[HistoryEntry, ...]:
        return tuple(c.entry for c in self.comparisons)


def _name_of(v) -> str:
    if isinstance(v, (Population, Dataset)):
        return v.id
    if isinstance(v, (PopRef, DataRef, RealVar)):
        return v.name
    if isinstance(v, Const):
        return format_number(v.value)
    if isinstance(v, (int, float, Fraction)):
        return format_number(pexpr.to_fraction(v))
    return str(v)


def format_number(q: Fraction) -> str:
    """Decimal when the expansion terminates (``1.0``, ``0.05``), else ``a/b``."""
    q = pexpr.to_fraction(q)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives, 1)
    scaled = abs(q) * 10**digits
    sign = "-" if q < 0 else ""
    whole, frac = divmod(int(scaled), 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def _as_kind(spec: CommandSpec, pname: str, kind: str, value):
    if kind == "population" and isinstance(value, (Population, PopRef)):
        return value
    if kind == "dataset" and isinstance(value, (Dataset, DataRef)):
        return value
    if kind == "real":
        if isinstance(value, (Const, RealVar)):
            return value
        if isinstance(value, (int, float, Fraction)) and not isinstance(value, bool):
            return Const(value)
    if kind == "alt":
        if isinstance(value, Alt):
            return value
        if isinstance(value, str) and value in Alt._value2member_map_:
            return Alt(value)
    if kind == "dataset_pair" and isinstance(value, (tuple, list)) and len(value) == 2:
        return tuple(_as_kind(spec, pname, "dataset", v) for v in value)
    if kind == "groups" and isinstance(value, (tuple, list)):
        groups = []
        for g in value:
            if not (isinstance(g, (tuple, list)) and len(g) == 2):
                raise ArgKindMismatch(f"{spec.name}: {pname} must be a list of (population, dataset)")
            groups.append((_as_kind(spec, pname, "population", g[0]), _as_kind(spec, pname, "dataset", g[1])))
        return tuple(groups)
    if kind == "control" and (value is None or (isinstance(value, int) and not isinstance(value, bool))):
        return value
    raise ArgKindMismatch(f"{spec.name}: argument {pname} must be a {kind}, got {value!r}")


def _instantiate_pair(spec, alt, binding, pvalue: PExpr, left=0, right=1) -> Comparison:
    names = {k: _name_of(v) for k, v in binding.items()}
    reqs = tuple(
        Requirement(r.label.format(**names), normalize(substitute(r.formula, binding)))
        for r in spec.requires[alt]
    )
    h = normalize(substitute(spec.hypothesis[alt], binding))
    return Comparison(left, right, reqs, h, HistoryEntry(spec.test_name, h, ExactP(pvalue)))


def instantiate(spec: CommandSpec, args: Sequence, pvalues: Sequence[PExpr] | None = None) -> Instance:
    """Fill a command's templates with concrete arguments.

    ``pvalues`` names the symbolic p-value of each comparison performed (one
    for the t-tests, one per pair for multiple comparison commands).  Fresh
    symbols ``result``/``result_i`` are used when omitted.
    """
    if len(args) != len(spec.params):
        raise ArityMismatch(f"{spec.name} takes {len(spec.params)} arguments, got {len(args)}")
    values = {n: _as_kind(spec, n, k, a) for (n, k), a in zip(spec.params, args)}
    alt = values["ALT"]

    if spec.method is not None:
        comps = expand_comparisons(
            spec.method, values["GROUPS"], values.get("CONTROL"), alt=alt, pvalues=pvalues
        )
        return Instance(spec, alt, tuple(comps))

    pv = pvalues[0] if pvalues else pexpr.symbol("result")
    if "YS" in values:
        y1, y2 = values["YS"]
        binding = {"P1": values["P1"], "P2": values["P2"], "Y1": y1, "Y2": y2}
    else:
        binding = {"P": values["P"], "MU": values["MU"], "Y": values["Y"]}
    return Instance(spec, alt, (_instantiate_pair(spec, alt, binding, pv),))


def expand_comparisons(
    method: Method,
    groups: Sequence,
    control: int | None = None,
    *,
    alt: Alt = Alt.TWO,
    pvalues: Sequence[PExpr] | None = None,
) -> list[Comparison]:
    """Pairwise comparisons performed by a multiple comparison method.

    All-pairs methods compare ``(i, j)`` for ``i < j``; control methods compare
    each other group (left) against the control (right), in index order.
    """
    k = len(groups)
    if k < 2:
        raise TooFewGroups(f"{method.value} needs at least 2 groups, got {k}")
    if method in ALL_PAIRS:
        pairs = list(itertools.combinations(range(k), 2))
    else:
        if control is None:
            raise MissingControl(f"{method.value} compares against a control group")
        if not 0 <= control < k:
            raise MissingControl(f"control index {control} out of range for {k} groups")
        pairs = [(i, control) for i in range(k) if i != control]
    if pvalues is not None and len(pvalues) != len(pairs):
        raise ArityMismatch(f"{len(pairs)} comparisons but {len(pvalues)} p-value names")

    spec = _builtin()[_MC_NAMES[method][0]]
    out = []
    for n, (i, j) in enumerate(pairs):
        (pi, yi), (pj, yj) = groups[i], groups[j]
        binding = {"P1": pi, "Y1": yi, "P2": pj, "Y2": yj}
        pv = pvalues[n] if pvalues is not None else pexpr.symbol(f"p_{i}_{j}")
        out.append(_instantiate_pair(spec, alt, binding, pv, i, j))
    return out


# ---------------------------------------------------------------------------
# p-value composition


def bound(record) -> PExpr:
    return record.p


def compose_pvs(h, st: TestHistory):
    """p-value record for believing ``h`` given every test recorded in ``st``.

    A hypothesis tested once keeps its record.  Several direct matches, or a
    disjunction, compose by the Bonferroni sum (capped at 1); a conjunction by
    the minimum.
    """
    if not st.closed:
        raise OpenHistory("the history before this function is unknown; require is_empty (!st)")
    return _compose(normalize(h), st.entries)


def _compose(h, entries):
    matches = [e.pvalue for e in entries if e.hypothesis == h]
    if len(matches) == 1:
        return matches[0]
    if matches:
        return AtMostP(pexpr.cap(pexpr.total(bound(m) for m in matches)))
    if isinstance(h, Disj):
        return AtMostP(pexpr.cap(pexpr.total(bound(_compose(x, entries)) for x in h.parts)))
    if isinstance(h, Conj):
        return AtMostP(pexpr.minimum(*(bound(_compose(x, entries)) for x in h.parts)))
    raise UnmatchedHypothesis(h)


def supports(got, want) -> bool:
    """Does a composed record ``got`` establish the claimed record ``want``?"""
    if isinstance(want, ExactP):
        return isinstance(got, ExactP) and pexpr.equivalent(got.p, want.p)
    return pexpr.le(got.p, want.p)


def implies(r1, r2) -> bool:
    """Belief at ``r1`` entails belief at ``r2`` for the same hypothesis."""
    if isinstance(r2, ExactP):
        return isinstance(r1, ExactP) and pexpr.equivalent(r1.p, r2.p)
    return pexpr.le(r1.p, r2.p)


def _components(h) -> set:
    out = {h}
    if isinstance(h, (Conj, Disj)):
        for p in h.parts:
            out |= _components(p)
    return out


SUBSET_SEARCH_LIMIT = 12


def candidate_subhistories(h, st: TestHistory) -> Iterable[tuple]:
    """Sub-histories worth trying when looking for a belief in ``h``.

    Only entries whose hypothesis is ``h`` or one of its Conj/Disj components
    can matter.  The full relevant set and the singletons come first; the
    remaining subsets are enumerated when there are at most
    ``SUBSET_SEARCH_LIMIT`` relevant entries.
    """
    h = normalize(h)
    comps = _components(h)
    rel = [i for i, e in enumerate(st.entries) if e.hypothesis in comps]
    if not rel:
        return
    seen = set()
    order = [tuple(rel)] + [(i,) for i in rel]
    if len(rel) <= SUBSET_SEARCH_LIMIT:
        order += [s for r in range(2, len(rel)) for s in itertools.combinations(rel, r)]
    for idx in order:
        if idx not in seen:
            seen.add(idx)
            yield tuple(st.entries[i] for i in idx)


def believes(st: TestHistory, record, h) -> bool:
    """Some set of recorded tests composes to a record supporting ``record`` for ``h``."""
    return belief_witness(st, record, h) is not None


def belief_witness(st: TestHistory, record, h):
    h = normalize(h)
    for sub in candidate_subhistories(h, st):
        try:
            got = _compose(h, sub)
        except UnmatchedHypothesis:
            continue
        if supports(got, record):
            return sub, got
    return None


def refutes(st: TestHistory, record, h) -> bool:
    """Certainly no sub-history supports ``record`` for ``h``.

    Decided only for closed histories whose relevant p-values are constants,
    where every subset can be checked exactly.
    """
    if not st.closed:
        return False
    h = normalize(h)
    comps = _components(h)
    rel = [e for e in st.entries if e.hypothesis in comps]
    if len(rel) > SUBSET_SEARCH_LIMIT:
        return False
    if not record.p.is_const or not all(e.pvalue.p.is_const for e in rel):
        return False
    for r in range(1, len(rel) + 1):
        for sub in itertools.combinations(rel, r):
            try:
                if supports(_compose(h, sub), record):
                    return False
            except UnmatchedHypothesis:
                continue
    return True


# ---------------------------------------------------------------------------
# Documentation export


def spec_library_json() -> dict:
    from bhlcheck.frontend.printer import pretty_print

    commands = []
    for spec in _builtin().values():
        alts = {}
        for alt in Alt:
            alts[alt.value] = {
                "requires": [
                    {"label": r.label, "formula": pretty_print(r.formula)} for r in spec.requires[alt]
                ],
                "hypothesis": pretty_print(spec.hypothesis[alt]),
            }
        entry = {
            "name": spec.name,
            "test_name": spec.test_name,
            "params": [{"name": n, "kind": k} for n, k in spec.params],
            "alternatives": alts,
        }
        if spec.method is not None:
            entry["method"] = spec.method.value
            entry["comparisons"] = "all pairs" if spec.method in ALL_PAIRS else "each group vs control"
        commands.append(entry)
    return {"schema": "bhlcheck-specs/1", "commands": commands}
