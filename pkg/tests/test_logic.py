from fractions import Fraction

import pytest

from bhlcheck.logic import (
    IS_EMPTY,
    AtMostP,
    Conj,
    Const,
    DataRef,
    Disj,
    ExactP,
    HistoryEntry,
    Hole,
    KindMismatch,
    Know,
    Mean,
    Not,
    PopRef,
    Possible,
    StatB,
    TestHistory,
    UnboundPlaceholder,
    atom,
    atoms_of,
    gt,
    is_modal_free,
    lt,
    modal_depth,
    neq,
    normalize,
    substitute,
    well_formed,
)

a, b = PopRef("a"), PopRef("b")
x = atom("is_normal", a)
y = atom("is_normal", b)


def test_normalize_flattens_sorts_and_dedups():
    f = Conj(y, Conj(x, y))
    g = Conj(x, y)
    assert normalize(f) == normalize(g)
    assert normalize(Conj(x, x)) == x
    assert normalize(Not(Not(x))) == x


def test_disjunction_order_is_irrelevant():
    assert normalize(Disj(gt(Mean(a), Mean(b)), lt(Mean(a), Mean(b)))) == normalize(
        Disj(lt(Mean(a), Mean(b)), gt(Mean(a), Mean(b)))
    )


def test_well_formed_signatures():
    assert well_formed(atom("sampled", DataRef("d"), a))
    assert not well_formed(atom("sampled", a, DataRef("d")))
    assert not well_formed(atom("no_such_predicate", a))
    assert well_formed(StatB(ExactP(Fraction(1, 20)), neq(Mean(a), Const(1))))


def test_statb_payload_must_be_modal_free():
    bad = StatB(ExactP(Fraction(1, 20)), Possible(x))
    assert not well_formed(bad)
    assert not is_modal_free(Possible(x))


def test_modal_depth_and_atoms():
    f = Know(Disj(Possible(x), y))
    assert modal_depth(f) == 2
    assert atoms_of(f) == {x, y}


def test_pvalue_range_checked():
    with pytest.raises(ValueError):
        ExactP(Fraction(3, 2))
    assert AtMostP(1).p.value == 1


def test_substitute_and_kind_errors():
    tmpl = atom("sampled", Hole("Y", "dataset"), Hole("P", "population"))
    assert substitute(tmpl, {"Y": DataRef("d"), "P": a}) == atom("sampled", DataRef("d"), a)
    with pytest.raises(UnboundPlaceholder):
        substitute(tmpl, {"Y": DataRef("d")})
    with pytest.raises(KindMismatch):
        substitute(tmpl, {"Y": a, "P": a})


def test_history_is_newest_first():
    e1 = HistoryEntry("t", x, ExactP(Fraction(1, 10)))
    e2 = HistoryEntry("t", y, ExactP(Fraction(1, 5)))
    h = TestHistory().cons(e1).cons(e2)
    assert list(h) == [e2, e1]
    assert len(h) == 2 and h.closed
    assert IS_EMPTY.pred == "is_empty"
