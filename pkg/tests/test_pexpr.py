from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bhlcheck import pexpr
from bhlcheck.pexpr import add, cap, const, equivalent, le, minimum, symbol, total

SYMS = ["p1", "p2", "p3"]


@st.composite
def exprs(draw, depth=2):
    if depth == 0 or draw(st.booleans()):
        if draw(st.booleans()):
            return symbol(draw(st.sampled_from(SYMS)))
        return const(Fraction(draw(st.integers(0, 8)), 8))
    a = draw(exprs(depth=depth - 1))
    b = draw(exprs(depth=depth - 1))
    return add(a, b) if draw(st.booleans()) else minimum(a, b)


values = st.fixed_dictionaries({s: st.fractions(0, 1, max_denominator=16) for s in SYMS})


def test_float_constants_are_decimal_exact():
    assert const(0.05).value == Fraction(1, 20)


def test_sum_distributes_over_min():
    p1, p2, p3 = map(symbol, SYMS)
    assert add(minimum(p1, p2), p3) == minimum(add(p1, p3), add(p2, p3))


def test_dominated_forms_are_pruned():
    p1, p2 = symbol("p1"), symbol("p2")
    assert minimum(p1, add(p1, p2)) == p1


def test_cap_and_order():
    p1, p2 = symbol("p1"), symbol("p2")
    assert le(minimum(p1, p2), add(p1, p2))
    assert not le(add(p1, p2), minimum(p1, p2))
    assert le(cap(add(p1, p2)), const(1))
    assert equivalent(cap(const(3)), const(1))


def test_total_of_nothing_is_zero():
    assert total([]) == const(0)


def test_negative_scaling_rejected():
    with pytest.raises(ValueError):
        pexpr._scale(symbol("p"), Fraction(-1))


def test_substitute():
    p = symbol("p")
    e = add(p, const(Fraction(1, 2))).substitute({"p": minimum(symbol("a"), symbol("b"))})
    assert e.evaluate({"a": Fraction(1, 4), "b": Fraction(1, 2)}) == Fraction(3, 4)


@settings(max_examples=300, deadline=None)
@given(exprs(), exprs(), values)
def test_le_is_sound(a, b, v):
    if le(a, b):
        assert a.evaluate(v) <= b.evaluate(v)


@settings(max_examples=200, deadline=None)
@given(exprs(), exprs(), values)
def test_operations_match_evaluation(a, b, v):
    assert add(a, b).evaluate(v) == a.evaluate(v) + b.evaluate(v)
    assert minimum(a, b).evaluate(v) == min(a.evaluate(v), b.evaluate(v))
