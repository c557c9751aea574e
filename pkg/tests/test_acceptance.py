"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line (visible even under
output capture) and then asserts the same condition.
"""

import random
import statistics
import subprocess
import sys
import time

import pytest
from conftest import CORPUS, ROOT, load, vcs_of
from oracles import compose_case, s5_counterexamples
from oracles import run as soundness_run

from bhlcheck import cli
from bhlcheck.entail import minimal_missing
from bhlcheck.frontend import pretty_print
from bhlcheck.logic import Const, DataRef, Mean, PopRef, Possible, atom
from bhlcheck.specs import Method, expand_comparisons
from bhlcheck.vcgen import (
    discharge_all,
    generate_vcs,
    requires_conjuncts,
    verify_program,
)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail

    return emit


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def cli_exit(path):
    return cli.main(["verify", "--format", "json", str(path)])


# -- 1 -------------------------------------------------------------------------


def test_criterion_1_missing_tail_priors(report, capsys):
    def run():
        missing = set()
        for vc in vcs_of("ttest_priors_missing.swl"):
            missing.update(minimal_missing(vc.facts, vc.history, vc.goal))
        return missing, cli_exit(CORPUS / "ttest_priors_missing.swl"), cli_exit(CORPUS / "ttest_priors_stated.swl")

    (missing, bad_code, good_code), secs = timed(run)
    capsys.readouterr()
    t_n = PopRef("t_n")
    expected = {Possible(atom("lt", Mean(t_n), Const(1))), Possible(atom("gt", Mean(t_n), Const(1)))}
    ok = missing == expected and bad_code == 1 and good_code == 0 and secs < 1.0
    shown = sorted(pretty_print(m) for m in missing)
    report(1, ok, f"missing={shown}, exits {bad_code}/{good_code}, {secs:.3f}s")


# -- 2 -------------------------------------------------------------------------


def test_criterion_2_repeated_test_min(report, capsys):
    def run():
        res = verify_program(load("repeated_test_min.swl"))
        return res, cli_exit(CORPUS / "repeated_test_sum.swl")

    (res, good_code), secs = timed(run)
    capsys.readouterr()
    ensures_failed = [r for vc, r in res if vc.kind == "ensures" and not r.proved]
    shows_bound = any("compose_pvs gives (Leq (p1 +. p2))" in r.detail for r in ensures_failed)
    ok = bool(ensures_failed) and shows_bound and good_code == 0 and secs < 1.0
    report(2, ok, f"{len(ensures_failed)} ensures VC(s) fail, bound shown={shows_bound}, corrected exit {good_code}, {secs:.3f}s")


# -- 3 -------------------------------------------------------------------------


def test_criterion_3_drugs_disjunctive_sum(report, capsys):
    codes, times = {}, {}
    for name in ("drugs_disjunctive_sum", "drugs_conjunctive_min", "drugs_conjunctive_sum"):
        codes[name], times[name] = timed(cli_exit, CORPUS / f"{name}.swl")
    capsys.readouterr()
    ok = (
        codes["drugs_disjunctive_sum"] == 0
        and codes["drugs_conjunctive_min"] == 0
        and codes["drugs_conjunctive_sum"] == 1
        and max(times.values()) < 1.0
    )
    report(3, ok, f"exits {codes}, slowest {max(times.values()):.3f}s")


# -- 4 -------------------------------------------------------------------------

EXPECTED_COUNTS = {
    Method.TUKEY_HSD: [1, 3, 6, 10, 15, 21],
    Method.STEEL_DWASS: [1, 3, 6, 10, 15, 21],
    Method.DUNNETT: [1, 2, 3, 4, 5, 6],
    Method.WILLIAMS: [1, 2, 3, 4, 5, 6],
    Method.STEEL: [1, 2, 3, 4, 5, 6],
}


def test_criterion_4_comparison_counts(report):
    got = {}
    for method in Method:
        counts = []
        for k in range(2, 8):
            groups = [(PopRef(f"g{i}"), DataRef(f"d{i}")) for i in range(k)]
            control = None if method in (Method.TUKEY_HSD, Method.STEEL_DWASS) else 0
            counts.append(len(expand_comparisons(method, groups, control)))
        got[method] = counts
    ok = got == EXPECTED_COUNTS
    report(4, ok, "; ".join(f"{m.value}={c}" for m, c in got.items()))


# -- 5 -------------------------------------------------------------------------


def scaling_program(n: int, kind: str) -> str:
    """n one-sided two-sample tests joined into one Disj (sum) or Conj (min) hypothesis."""
    lines = ["population ppl_new : NormalD(mu_new, sigma)"]
    lines += [f"population ppl_{i} : NormalD(mu_{i}, sigma)" for i in range(1, n + 1)]
    params = " ".join(["d_new"] + [f"d_{i}" for i in range(1, n + 1)])
    lines.append(f"\nlet compare {params} =")
    for i in range(1, n + 1):
        lines.append(f"  let p_{i} = exec_ttest_ind_eq ppl_new ppl_{i} (d_new, d_{i}) Up in")
    ps = [f"p_{i}" for i in range(1, n + 1)]
    if kind == "disj":
        result = " +. ".join(ps)
    else:
        result = ps[-1]
        for p in reversed(ps[:-1]):
            result = f"min {p} ({result})"
    lines.append(f"  {result}")
    req = ["is_empty (!st)", "sampled d_new ppl_new"]
    for i in range(1, n + 1):
        req += [
            f"sampled d_{i} ppl_{i}",
            f"non_paired d_new d_{i}",
            f"Possible (mean ppl_new >' mean ppl_{i})",
            f"Not (Possible (mean ppl_new <=' mean ppl_{i}))",
        ]
    op = " \\/ " if kind == "disj" else " /\\ "
    hyp = op.join(f"mean ppl_new >' mean ppl_{i}" for i in range(1, n + 1))
    lines.append(f"(*@ p = compare {params}")
    lines.append("  requires " + " /\\\n    ".join(req))
    lines.append(f"  ensures (Leq p) = compose_pvs ({hyp}) !st")
    lines.append(f"  ensures StatB (Leq p) ({hyp}) *)")
    return "\n".join(lines) + "\n"


def run_cli(path):
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "bhlcheck", "verify", str(path)], cwd=ROOT, capture_output=True, text=True
    )
    return proc.returncode, time.perf_counter() - t0


def test_criterion_5_scaling(report, tmp_path):
    walls, codes = {}, {}
    for kind in ("disj", "conj"):
        for n in range(2, 11):
            path = tmp_path / f"{kind}_{n}.swl"
            path.write_text(scaling_program(n, kind))
            runs = [run_cli(path) for _ in range(3)]
            codes[kind, n] = max(c for c, _ in runs)
            walls[kind, n] = statistics.median(s for _, s in runs)
    all_verify = all(c == 0 for c in codes.values())
    ratios = {kind: walls[kind, 10] / walls[kind, 2] for kind in ("disj", "conj")}
    slowest = max(walls.values())
    ok = all_verify and max(ratios.values()) <= 3.0 and slowest <= 10.0
    shown = ", ".join(f"{k} n=2 {walls[k, 2]:.3f}s n=10 {walls[k, 10]:.3f}s ratio {r:.2f}" for k, r in ratios.items())
    report(5, ok, f"all verify={all_verify}; {shown}; slowest {slowest:.3f}s")


# -- 6 -------------------------------------------------------------------------


def test_criterion_6_oracle_soundness(report):
    (checked, proved, bad), secs = timed(soundness_run)
    ok = not bad and proved > 0 and secs <= 60.0
    report(6, ok, f"{checked} entailment checks, {proved} proved, {len(bad)} counterexamples, {secs:.1f}s")


# -- 7 -------------------------------------------------------------------------


def test_criterion_7_s5_axioms(report):
    models, pairs, bad = s5_counterexamples(3)
    report(7, bad == 0, f"T, 4, 5 and duality over {models} models ({pairs} worlds): {bad} counterexamples")


# -- 8 -------------------------------------------------------------------------


def test_criterion_8_compose_properties(report):
    rng = random.Random(20240601)
    failures = [f for _ in range(1000) for f in compose_case(rng)]
    report(8, not failures, f"1000 randomized cases, {len(failures)} failures")


# -- 9 -------------------------------------------------------------------------


def mutation_kills(name):
    """(consumed, killed) requires-conjunct counts for one verifying corpus program."""
    prog = load(name)
    consumed = killed = 0
    survivors = []
    for fn in prog.functions:
        conj = requires_conjuncts(fn)
        vcs = generate_vcs(fn, prog)
        used = set()
        for r in discharge_all(vcs):
            used |= {o for o in r.used if isinstance(o, int)}
        for i in sorted(used):
            consumed += 1
            mutant = conj[:i] + conj[i + 1 :]
            if all(r.proved for r in discharge_all(generate_vcs(fn, prog, requires=mutant))):
                survivors.append((fn.name, pretty_print(conj[i])))
            else:
                killed += 1
    return consumed, killed, survivors


def test_criterion_9_mutation(report):
    programs = [p.name for p in sorted(CORPUS.glob("*.swl")) if all(r.proved for _, r in verify_program(load(p.name)))]
    consumed = killed = 0
    survivors = []
    for name in programs:
        c, k, s = mutation_kills(name)
        consumed += c
        killed += k
        survivors += [(name, *x) for x in s]
    ok = consumed > 0 and killed == consumed
    report(9, ok, f"{len(programs)} verifying programs, {killed}/{consumed} consumed conjuncts killed, survivors {survivors}")


# -- 10 ------------------------------------------------------------------------


def test_criterion_10_numstat_grid(report):
    stats = pytest.importorskip("scipy.stats")
    from bhlcheck.numstat import t_statistic, t_two_sided_pvalue

    worst = 0.0
    for df in [1, 2, 3, 4, 5, 7, 10, 15, 20, 30, 50, 100, 200, 1000]:
        for t in [0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0, 30.0, 100.0]:
            for s in (t, -t):
                worst = max(worst, abs(t_two_sided_pvalue(s, df) - 2 * stats.t.sf(abs(s), df)))
    rng = random.Random(5)
    for n in (2, 3, 5, 10, 40):
        y = [rng.gauss(1.0, 2.0) for _ in range(n)]
        ref = stats.ttest_1samp(y, 0.5).statistic
        worst = max(worst, abs(t_statistic(y, 0.5) - ref))
    exact_one = all(t_two_sided_pvalue(0.0, df) == 1.0 for df in (1, 2, 7, 1000))
    report(10, worst <= 1e-8 and exact_one, f"max abs error {worst:.2e} (tolerance 1e-8), p(t=0)=1 exactly: {exact_one}")
