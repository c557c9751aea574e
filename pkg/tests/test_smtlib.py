from fractions import Fraction

import pytest
from conftest import CORPUS, vcs_of
from oracles import POOL, X, Y

from bhlcheck.logic import (
    EMPTY_HISTORY,
    AtMostP,
    Know,
    Not,
    Possible,
    StatB,
    TestHistory,
)
from bhlcheck.smtlib import (
    UnsupportedConstruct,
    emit_formula_check,
    emit_smtlib,
    smt_filename,
)
from bhlcheck.vcgen import discharge_vc

z3 = pytest.importorskip("z3")

CORPUS_FILES = sorted(p.name for p in CORPUS.glob("*.swl"))


def check(script: str) -> str:
    s = z3.Solver()
    s.from_string(script)
    return str(s.check())


def test_script_shape():
    vc = vcs_of("ttest_priors_stated.swl")[-1]
    text = emit_smtlib(vc)
    assert text.startswith("; p #4:")
    assert "(set-logic QF_LRA)" in text and text.rstrip().endswith("(check-sat)")
    assert smt_filename(vc) == "vc_p_4.smt2"


def test_valid_and_invalid_formulas():
    assert check(emit_formula_check([Know(X)], EMPTY_HISTORY, X)) == "unsat"
    assert check(emit_formula_check([Possible(X)], EMPTY_HISTORY, X)) == "sat"


def test_history_axioms():
    h = TestHistory((POOL[0],))
    assert check(emit_formula_check([], h, StatB(AtMostP(Fraction(1, 5)), X))) == "unsat"
    assert check(emit_formula_check([], h, StatB(AtMostP(Fraction(1, 20)), X))) == "sat"


def test_modal_statb_payload_rejected():
    from bhlcheck.entail import Fact
    from bhlcheck.frontend.errors import Span
    from bhlcheck.vcgen import VerifCondition

    bad = StatB(AtMostP(Fraction(1, 2)), Not(X))
    vc = VerifCondition(0, "f", "x", (Fact(StatB(AtMostP(Fraction(1, 2)), Possible(Y))),), EMPTY_HISTORY, bad, Span(0, 0))
    with pytest.raises(UnsupportedConstruct):
        emit_smtlib(vc)


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_engine_proofs_confirmed_by_z3(name):
    # the engine may be incomplete, never the other way round
    for vc in vcs_of(name):
        if discharge_vc(vc).proved:
            assert check(emit_smtlib(vc)) == "unsat", (name, vc.index, vc.goal_text)


def test_smt_encoding_is_sound_on_the_oracle():
    # the one-pass modal axioms are weaker than the tableau, so only
    # "z3 unsat => valid in every model" is required here
    import random

    import numpy as np
    import oracles

    from bhlcheck.kripke import TruthTable, enumerate_models
    from bhlcheck.logic import normalize

    hists = oracles.histories()
    table = TruthTable(list(enumerate_models(oracles.ATOMS, 2, hists)))
    hist_of = {h: i for i, h in enumerate(table.pool)}
    pool = oracles.formula_pool(random.Random(3), 80)
    rng = random.Random(4)
    unsat = 0
    for _ in range(150):
        facts = rng.sample(pool, rng.randint(0, 2))
        goal = rng.choice(pool)
        h = rng.choice(hists)
        if check(emit_formula_check(facts, h, goal)) != "unsat":
            continue
        unsat += 1
        mask = table.hist == hist_of[h]
        for f in facts:
            mask = mask & table.eval(normalize(f))
        assert not np.any(mask & ~table.eval(normalize(goal)))
    assert unsat > 0
