import math

import numpy as np
import pytest
from conftest import load

from bhlcheck.numstat import (
    DegenerateSample,
    InvalidDF,
    NumstatError,
    UnboundDataset,
    betainc,
    read_csv_bindings,
    run_demo,
    t_pvalue,
    t_statistic,
    t_two_sided_pvalue,
    ttest_1samp,
    ttest_ind_eq,
    ttest_paired,
)
from bhlcheck.specs import Alt

stats = pytest.importorskip("scipy.stats")
special = pytest.importorskip("scipy.special")

DF_GRID = [1, 2, 3, 4, 5, 7, 10, 20, 30, 50, 100, 1000]
T_GRID = [0.0, 0.01, 0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 10.0, 50.0]

RNG = np.random.default_rng(20240601)
SAMPLES = [RNG.normal(loc, 1.0, n).round(4).tolist() for loc, n in [(0.3, 5), (1.0, 12), (-0.5, 30), (2.0, 3)]]


def test_known_values():
    assert t_statistic([1, 2, 3, 4, 5], 2) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert t_two_sided_pvalue(1.0, 1) == pytest.approx(0.5, abs=1e-14)


def test_zero_statistic_gives_exactly_one():
    for df in DF_GRID:
        assert t_two_sided_pvalue(0.0, df) == 1.0


@pytest.mark.parametrize("df", DF_GRID)
def test_two_sided_matches_reference(df):
    for t in T_GRID:
        ref = 2 * stats.t.sf(abs(t), df)
        got = t_two_sided_pvalue(t, df)
        assert abs(got - ref) <= 1e-8
        assert t_two_sided_pvalue(-t, df) == got


@pytest.mark.parametrize("a, b", [(0.5, 0.5), (2.0, 3.0), (10.0, 0.5), (0.5, 500.0)])
def test_betainc_matches_reference(a, b):
    for x in [0.0, 1e-6, 0.1, 0.5, 0.9, 0.999999, 1.0]:
        assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


def test_one_tailed_pvalues():
    for df in (3, 30):
        for t in (-2.0, 0.5, 2.0):
            assert t_pvalue(t, df, Alt.UP) == pytest.approx(stats.t.sf(t, df), abs=1e-10)
            assert t_pvalue(t, df, Alt.LOW) == pytest.approx(stats.t.cdf(t, df), abs=1e-10)


@pytest.mark.parametrize("y", SAMPLES)
def test_one_sample_against_reference(y):
    ref = stats.ttest_1samp(y, 0.7)
    got = ttest_1samp(y, 0.7)
    assert got.t == pytest.approx(ref.statistic, abs=1e-8)
    assert got.p == pytest.approx(ref.pvalue, abs=1e-8)


def test_two_sample_against_reference():
    a, b = SAMPLES[1], SAMPLES[2]
    ref = stats.ttest_ind(a, b, equal_var=True, alternative="greater")
    got = ttest_ind_eq(a, b, Alt.UP)
    assert got.t == pytest.approx(ref.statistic, abs=1e-8)
    assert got.p == pytest.approx(ref.pvalue, abs=1e-8)
    assert got.df == len(a) + len(b) - 2


def test_paired_against_reference():
    a = SAMPLES[1]
    b = [x + 0.1 * ((i % 3) - 1) + 0.05 for i, x in enumerate(a)]
    ref = stats.ttest_rel(a, b)
    got = ttest_paired(a, b)
    assert got.t == pytest.approx(ref.statistic, abs=1e-8)
    assert got.p == pytest.approx(ref.pvalue, abs=1e-8)


def test_errors():
    with pytest.raises(DegenerateSample):
        t_statistic([1.0], 0)
    with pytest.raises(DegenerateSample):
        t_statistic([2.0, 2.0, 2.0], 0)
    with pytest.raises(InvalidDF):
        t_two_sided_pvalue(1.0, 0)
    with pytest.raises(NumstatError):
        read_csv_bindings("d\n1\nx\n")


def test_csv_reading():
    cols = read_csv_bindings("a,b\n1,2\n3,\n5,6\n")
    assert cols == {"a": [1.0, 3.0, 5.0], "b": [2.0, 6.0]}


def test_demo_one_sample():
    y = SAMPLES[1]
    report = run_demo(load("ttest_priors_stated.swl"), {"d": y})
    text = report.render()
    ref = stats.ttest_1samp(y, 1.0)
    assert f"df = {len(y) - 1}" in text
    assert f"{ref.pvalue:.6g}" in text


def test_demo_needs_bound_datasets():
    with pytest.raises(UnboundDataset):
        run_demo(load("ttest_priors_stated.swl"), {})


def test_demo_bonferroni_sum():
    prog = load("drugs_disjunctive_sum.swl")
    data = {"d_new": SAMPLES[1], "d_drug1": SAMPLES[2], "d_drug2": SAMPLES[0]}
    text = run_demo(prog, data).render()
    p1 = stats.ttest_ind(SAMPLES[1], SAMPLES[2], alternative="greater").pvalue
    p2 = stats.ttest_ind(SAMPLES[1], SAMPLES[0], alternative="greater").pvalue
    assert f"p = {p1 + p2:.6g}" in text
