
import pytest
from conftest import CORPUS
from hypothesis import given, settings
from hypothesis import strategies as st

from bhlcheck.frontend import (
    FrontendError,
    load_program,
    parse,
    parse_formula,
    pretty_print,
    scope_for,
)
from bhlcheck.frontend.errors import Span, line_col
from bhlcheck.frontend.lexer import tokenize
from bhlcheck.logic import Conj, Const, Disj, Mean, Not, PopRef, Possible, neq

SCOPE = scope_for(populations=["a", "b", "c"], datasets=["da", "db"], pvars=["p1", "p2"])
BASE = "population t : NormalD\ndataset d : t\n"
CALL = "let p = exec_ttest_1samp t 1.0 d Two\n"


def f(text):
    return parse_formula(text, SCOPE)


# -- lexer ---------------------------------------------------------------------


def test_lexer_symbols_and_comments():
    toks = [t.text for t in tokenize("(* c (* nested *) *) mean a <=' 1/2 $!= x")]
    assert toks[:6] == ["mean", "a", "<='", "1/2", "$!=", "x"]


def test_annotation_markers_are_tokens():
    kinds = [t.text for t in tokenize("(*@ requires x *)")]
    assert kinds[0] == "(*@" and "*)" in kinds


def test_line_col():
    assert line_col("ab\ncd", 3) == (2, 1)
    assert Span(2, 4).join(Span(7, 9)) == Span(2, 9)


# -- sugar ---------------------------------------------------------------------


def test_infix_and_prefix_connectives_agree():
    assert f("Conj (is_normal a) (is_normal b)") == f("is_normal a /\\ is_normal b")
    assert f("Disj (is_normal a) (is_normal b)") == f("is_normal b \\/ is_normal a")


def test_world_prefix_is_optional():
    assert f("(World (!st) interp) |= Possible (is_normal a)") == f("Possible (is_normal a)")
    assert f("World !st interp |= is_normal a") == f("is_normal a")


def test_bare_record_means_eq():
    assert f("StatB p1 (mean a $!= mean b)") == f("StatB (Eq p1) (mean a $!= mean b)")


def test_comparison_terms():
    assert f("(mean a) $!= (const_term 1.0)") == neq(Mean(PopRef("a")), Const(1))


def test_folds_unroll():
    groups = "[(a, da); (b, db); (c, da)]"
    pairs = f(f"for_all_pairs {groups} (fun (x, dx) (y, dy) -> mean x <' mean y)")
    explicit = f("mean a <' mean b /\\ mean a <' mean c /\\ mean b <' mean c")
    assert pairs == explicit
    vs = f(f"any_vs_control {groups} 0 (fun (x, dx) (k, dk) -> mean x >' mean k)")
    assert vs == f("mean b >' mean a \\/ mean c >' mean a")


# -- round trip ----------------------------------------------------------------


@pytest.mark.parametrize(
    "text",
    [
        "Possible (mean a <' 1.0) /\\ Not (Possible (mean a >=' mean b))",
        "Know (is_normal a \\/ sampled da a)",
        "StatB (Leq (min p1 p2)) (mean a $!= mean b)",
        "StatB (Leq (p1 +. p2 +. 0.05)) (mean a >' mean b \\/ mean a <' mean c)",
        "pvalue (min p1 (p1 +. p2))",
        "is_empty (!st)",
    ],
)
def test_pretty_print_round_trip(text):
    g = f(text)
    assert f(pretty_print(g)) == g


ATOMS = [f("is_normal a"), f("mean a <' mean b"), f("sampled da a"), f("StatB (Leq p1) (mean a $= 1/3)")]


@st.composite
def formulas(draw, depth=3):
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        return draw(st.sampled_from(ATOMS))
    kind = draw(st.sampled_from(["not", "p", "k", "and", "or"]))
    if kind == "not":
        return Not(draw(formulas(depth=depth - 1)))
    if kind == "p":
        return Possible(draw(formulas(depth=depth - 1)))
    if kind == "k":
        from bhlcheck.logic import Know

        return Know(draw(formulas(depth=depth - 1)))
    parts = [draw(formulas(depth=depth - 1)) for _ in range(2)]
    return (Conj if kind == "and" else Disj)(parts)


@settings(max_examples=200, deadline=None)
@given(formulas())
def test_round_trip_property(g):
    from bhlcheck.logic import normalize

    assert f(pretty_print(g)) == normalize(g)


# -- programs ------------------------------------------------------------------


def test_corpus_parses_and_prints():
    for path in sorted(CORPUS.glob("*.swl")):
        prog = load_program(path.read_text())
        assert prog.functions, path.name


def test_parse_keeps_function_structure():
    ast = parse(BASE + CALL + "(*@ requires sampled d t *)\n")
    assert [fn.name for fn in ast.functions] == ["p"]


def test_population_forms():
    src = "population a : NormalD(mu, s)\npopulation b : NormalD mu2 s\npopulation c : UnknownD\n"
    src += "dataset da : a size 10\n"
    load_program(src)


@pytest.mark.parametrize(
    "code, source, line, col",
    [
        ("E001", BASE + CALL + "(*@ requires sampled d t /\\ *)\n", 4, 29),
        ("E002", BASE + CALL + "(*@ requires sampled e t *)\n", 4, 22),
        ("E003", BASE + "let p = exec_ztest t 1.0 d Two\n(*@ requires sampled d t *)\n", 3, 9),
        ("E004", BASE + "let p = exec_ttest_1samp d 1.0 t Two\n(*@ requires sampled d t *)\n", 3, 26),
        ("E004", BASE + CALL + "(*@ requires sampled t d *)\n", 4, 22),
        ("E005", "dataset d : t\n", 1, 1),
        ("E006", BASE + CALL, 3, 1),
        ("E007", BASE + CALL + "(*@ ensures StatB p (Possible (mean t $!= 1.0)) *)\n", 4, 13),
        ("E007", BASE + CALL + "(*@ requires (Leq p) = compose_pvs (mean t $!= 1.0) !st *)\n", 4, 14),
        ("E008", BASE + "population t : NormalD\n", 3, 1),
    ],
)
def test_diagnostics(code, source, line, col):
    with pytest.raises(FrontendError) as info:
        load_program(source)
    err = info.value
    assert err.code == code
    rendered = err.diagnostic.render(source, "x.swl")
    head, src_line, caret = rendered.splitlines()[:3]
    assert head.startswith(f"x.swl:{line}:{col}: error: {code}: ")
    assert caret.index("^") == src_line.index(source.splitlines()[line - 1]) + col - 1
    doc = err.diagnostic.as_json(source, "x.swl")
    assert doc["code"] == code and doc["line"] == line
