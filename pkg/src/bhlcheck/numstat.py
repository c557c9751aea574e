"""Numeric t-tests for running verified programs on real data.

Nothing here feeds back into verification; p-values are floats only in this
module.  The Student t distribution is evaluated through the regularized
incomplete beta function, computed with a continued fraction (modified
Lentz) and the usual symmetry switch for fast convergence.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from bhlcheck.frontend import ast as A
from bhlcheck.frontend.binder import CheckedFunction, CheckedProgram, CommandCall
from bhlcheck.logic import Const, DataRef
from bhlcheck.specs import ALL_PAIRS, PARAMETRIC, Alt


class NumstatError(Exception):
    pass


class DegenerateSample(NumstatError):
    pass


class InvalidDF(NumstatError):
    pass


class UnboundDataset(NumstatError):
    def __init__(self, name: str):
        super().__init__(f"no data bound for dataset {name!r}")
        self.name = name


@dataclass(frozen=True)
class SampleStats:
    n: int
    mean: float
    sd: float

    def __post_init__(self):
        if self.n < 2:
            raise DegenerateSample(f"need at least 2 observations, got {self.n}")
        if self.sd < 0:
            raise ValueError("negative standard deviation")


def sample_stats(y: Sequence[float]) -> SampleStats:
    n = len(y)
    if n < 2:
        raise DegenerateSample(f"need at least 2 observations, got {n}")
    m = math.fsum(y) / n
    var = math.fsum((v - m) ** 2 for v in y) / (n - 1)
    return SampleStats(n, m, math.sqrt(var))


def t_statistic(y: Sequence[float], mu0: float) -> float:
    s = sample_stats(y)
    if s.sd == 0:
        raise DegenerateSample("all observations are equal; the t statistic is undefined")
    return (s.mean - mu0) / (s.sd / math.sqrt(s.n))


# ---------------------------------------------------------------------------
# Incomplete beta and the t distribution

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumstatError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a, b > 0")
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _check_df(df) -> float:
    if isinstance(df, bool) or not isinstance(df, (int, float)) or not df >= 1 or math.isinf(df):
        raise InvalidDF(f"degrees of freedom must be >= 1, got {df!r}")
    return float(df)


def t_two_sided_pvalue(t: float, df) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    df = _check_df(df)
    if math.isnan(t):
        raise ValueError("t is NaN")
    if t == 0:
        return 1.0
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return min(1.0, max(0.0, betainc(df / 2.0, 0.5, x)))


def t_cdf(t: float, df) -> float:
    half = t_two_sided_pvalue(t, df) / 2.0
    return 1.0 - half if t > 0 else half


def t_pvalue(t: float, df, alt: Alt = Alt.TWO) -> float:
    """p-value for alternative ``alt``: Up means the statistic is large."""
    if alt is Alt.TWO:
        return t_two_sided_pvalue(t, df)
    half = t_two_sided_pvalue(t, df) / 2.0
    upper = half if t > 0 else 1.0 - half
    return upper if alt is Alt.UP else 1.0 - upper


# ---------------------------------------------------------------------------
# Tests


@dataclass(frozen=True)
class TestResult:
    test: str
    label: str
    t: float
    df: int
    p: float

    __test__ = False


def ttest_1samp(y: Sequence[float], mu0: float, alt: Alt = Alt.TWO) -> TestResult:
    t = t_statistic(y, mu0)
    df = len(y) - 1
    return TestResult("ttest_1samp", "", t, df, t_pvalue(t, df, alt))


def _pooled(stats: Sequence[SampleStats]) -> tuple[float, int]:
    df = sum(s.n for s in stats) - len(stats)
    ss = math.fsum((s.n - 1) * s.sd**2 for s in stats)
    return ss / df, df


def ttest_ind_eq(y1: Sequence[float], y2: Sequence[float], alt: Alt = Alt.TWO) -> TestResult:
    s1, s2 = sample_stats(y1), sample_stats(y2)
    mse, df = _pooled([s1, s2])
    se = math.sqrt(mse * (1 / s1.n + 1 / s2.n))
    if se == 0:
        raise DegenerateSample("both samples are constant")
    t = (s1.mean - s2.mean) / se
    return TestResult("ttest_ind_eq", "", t, df, t_pvalue(t, df, alt))


def ttest_paired(y1: Sequence[float], y2: Sequence[float], alt: Alt = Alt.TWO) -> TestResult:
    if len(y1) != len(y2):
        raise NumstatError(f"paired samples differ in length ({len(y1)} vs {len(y2)})")
    diffs = [a - b for a, b in zip(y1, y2)]
    r = ttest_1samp(diffs, 0.0, alt)
    return TestResult("ttest_paired", "", r.t, r.df, r.p)


def pairwise_pooled(groups: Sequence[Sequence[float]], pairs, alt: Alt = Alt.TWO) -> list[tuple[float, int, float]]:
    """Unadjusted pairwise t-tests sharing the pooled variance of all groups."""
    stats = [sample_stats(g) for g in groups]
    mse, df = _pooled(stats)
    out = []
    for i, j in pairs:
        se = math.sqrt(mse * (1 / stats[i].n + 1 / stats[j].n))
        if se == 0:
            raise DegenerateSample("all groups are constant")
        t = (stats[i].mean - stats[j].mean) / se
        out.append((t, df, t_pvalue(t, df, alt)))
    return out


# ---------------------------------------------------------------------------
# Data bindings


def read_csv_bindings(text: str) -> dict[str, list[float]]:
    """One column per dataset id; the header row is mandatory, blank cells are skipped."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise NumstatError("empty CSV: a header row naming the datasets is required")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header) or len(set(header)) != len(header):
        raise NumstatError("CSV header must name each column once")
    cols: dict[str, list[float]] = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], start=2):
        for h, cell in zip(header, row):
            cell = cell.strip()
            if not cell:
                continue
            try:
                cols[h].append(float(cell))
            except ValueError:
                raise NumstatError(f"line {lineno}, column {h}: not a number: {cell!r}") from None
    return cols


# ---------------------------------------------------------------------------
# Running programs


@dataclass
class DemoLine:
    command: str
    args: str
    t: float | None = None
    df: int | None = None
    p: float | None = None
    note: str = ""

    def render(self) -> str:
        if self.p is None:
            return f"  {self.command}({self.args}): {self.note}"
        return f"  {self.command}({self.args}): t = {self.t:.6g}, df = {self.df}, p = {self.p:.6g}"


@dataclass
class FunctionDemo:
    name: str
    lines: list[DemoLine] = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def render(self) -> str:
        out = [f"{self.name}:"] + [ln.render() for ln in self.lines]
        for k, v in self.results.items():
            out.append(f"  {k} = {_fmt(v)}")
        return "\n".join(out)


@dataclass
class DemoReport:
    functions: list[FunctionDemo]

    def render(self) -> str:
        return "\n".join(f.render() for f in self.functions)


def _fmt(v) -> str:
    if v is None:
        return "n/a (numeric engine not implemented)"
    if isinstance(v, tuple):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return f"{v:.6g}"


def _real(x) -> float:
    if isinstance(x, Const):
        return float(x.value)
    raise NumstatError(f"real argument {getattr(x, 'name', x)} has no numeric value")


class _Runner:
    def __init__(self, fn: CheckedFunction, bindings: Mapping[str, Sequence[float]]):
        self.fn = fn
        self.bindings = bindings
        self.demo = FunctionDemo(fn.name)
        self.env: dict = {}

    def data(self, ref: DataRef) -> list[float]:
        if ref.name not in self.bindings:
            raise UnboundDataset(ref.name)
        return list(self.bindings[ref.name])

    def call(self, c: CommandCall):
        spec, args = c.spec, c.args
        if spec.method is None:
            if spec.name == "exec_ttest_1samp":
                pop, mu, y, alt = args
                r = ttest_1samp(self.data(y), _real(mu), alt)
                text = f"{y.name}, mu0 = {float(mu.value):g}, {alt.value}"
            else:
                p1, p2, (y1, y2), alt = args
                fn = ttest_paired if spec.name == "exec_ttest_paired" else ttest_ind_eq
                r = fn(self.data(y1), self.data(y2), alt)
                text = f"{y1.name}, {y2.name}, {alt.value}"
            self.demo.lines.append(DemoLine(spec.test_name, text, r.t, r.df, r.p))
            return r.p
        groups, alt = args[0], args[-1]
        k = len(groups)
        if spec.method in ALL_PAIRS:
            pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
        else:
            control = args[1]
            pairs = [(i, control) for i in range(k) if i != control]
        names = [f"{groups[i][1].name} vs {groups[j][1].name}" for i, j in pairs]
        if spec.method not in PARAMETRIC:
            for n in names:
                self.demo.lines.append(DemoLine(spec.test_name, n, note="numeric engine not implemented"))
            return tuple(None for _ in pairs)
        res = pairwise_pooled([self.data(d) for _, d in groups], pairs, alt)
        for n, (t, df, p) in zip(names, res):
            self.demo.lines.append(DemoLine(spec.test_name, f"{n}, {alt.value}", t, df, p))
        return tuple(p for _, _, p in res)

    def eval(self, e):
        if isinstance(e, A.LetIn):
            v = self.eval(e.value)
            if len(e.pattern) == 1:
                self.env[e.pattern[0]] = v
            else:
                self.env.update(zip(e.pattern, v))
            return self.eval(e.body)
        if isinstance(e, CommandCall):
            return self.call(e)
        if isinstance(e, A.TupleExpr):
            return tuple(self.eval(x) for x in e.items)
        if isinstance(e, A.Var):
            return self.env[e.name]
        if isinstance(e, A.Lit):
            return float(e.value)
        if isinstance(e, (A.AddExpr, A.MinExpr)):
            a, b = self.eval(e.left), self.eval(e.right)
            if a is None or b is None:
                return None
            return a + b if isinstance(e, A.AddExpr) else min(a, b)
        raise NumstatError(f"cannot evaluate {e!r}")

    def run(self) -> FunctionDemo:
        v = self.eval(self.fn.body)
        if len(self.fn.results) == 1:
            self.demo.results[self.fn.results[0]] = v
        else:
            self.demo.results.update(zip(self.fn.results, v))
        return self.demo


def run_demo(program: CheckedProgram, bindings: Mapping[str, Sequence[float]]) -> DemoReport:
    """Execute every function on concrete data and report each test's p-value."""
    for fn in program.functions:
        for p in fn.params:
            if getattr(p, "source", None) is not None and p.id not in bindings:
                raise UnboundDataset(p.id)
    return DemoReport([_Runner(fn, bindings).run() for fn in program.functions])


__all__ = [
    "DegenerateSample",
    "InvalidDF",
    "SampleStats",
    "TestResult",
    "UnboundDataset",
    "betainc",
    "read_csv_bindings",
    "run_demo",
    "sample_stats",
    "t_statistic",
    "t_two_sided_pvalue",
    "t_pvalue",
    "ttest_1samp",
    "ttest_ind_eq",
    "ttest_paired",
]
