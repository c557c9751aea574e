"""Recursive-descent parser for .swl programs (grammar in docs/grammar.ebnf).

A few constructs share a prefix (``(`` may open a term, a formula, a
p-value record or a parenthesized assertion), so the parser backtracks and
reports the failure that got furthest into the input.
"""

from __future__ import annotations

from fractions import Fraction

from bhlcheck.frontend import ast as A
from bhlcheck.frontend.errors import ParseError, Span
from bhlcheck.frontend.lexer import Token, tokenize
from bhlcheck.frontend.printer import CMP_TOKENS

CMP_OPS = {tok: pred for pred, tok in CMP_TOKENS.items()}
PRED_ARITY = {"sampled": 2, "non_paired": 2, "paired": 2, "is_normal": 1, "eq_var": 2, "pvalue": 1}
ALTS = ("Two", "Up", "Low")
RESERVED = frozenset(
    {"Not", "Possible", "Know", "StatB", "Conj", "Disj", "World", "interp", "Leq", "Eq",
     "mean", "const_term", "compose_pvs", "is_empty", "NormalD", "UnknownD"}
    | set(PRED_ARITY) | set(A.FOLD_OPS) | set(ALTS)
)
CLAUSE_END = ("&&", ")", "*)", "requires", "ensures")


def parse_number(text: str) -> Fraction:
    return Fraction(text)


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = tokenize(source)
        self.pos = 0
        self.furthest: ParseError | None = None

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.is_(text)

    def at_word(self, word: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text == word

    def fail(self, message: str, *expected: str) -> ParseError:
        err = ParseError(message, self.tok.span, tuple(expected))
        if self.furthest is None or err.span.start >= self.furthest.span.start:
            self.furthest = err
        return err

    def unexpected(self, *expected: str) -> ParseError:
        shown = repr(self.tok.text) if self.tok.kind != "eof" else "end of input"
        return self.fail(f"unexpected {shown}", *expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.unexpected(repr(text))
        t = self.tok
        self.pos += 1
        return t

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            raise self.unexpected(repr(word))
        t = self.tok
        self.pos += 1
        return t

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident" or self.tok.text in RESERVED:
            raise self.unexpected(what)
        t = self.tok
        self.pos += 1
        return t

    def span_from(self, start: int) -> Span:
        prev = self.toks[max(self.pos - 1, 0)]
        return Span(start, max(prev.span.end, start))

    def attempt(self, fn, *args):
        """Run ``fn``; on a parse error rewind and return None."""
        saved = self.pos
        try:
            return fn(*args)
        except ParseError:
            self.pos = saved
            return None

    # -- program -----------------------------------------------------------

    def program(self) -> A.ProgramAst:
        decls, funcs = [], []
        while self.tok.kind != "eof":
            if self.at("population"):
                decls.append(self.population())
            elif self.at("dataset"):
                decls.append(self.dataset())
            elif self.at("real"):
                start = self.expect("real").span.start
                name = self.ident("a real variable name")
                decls.append(A.RealDecl(name.text, self.span_from(start)))
            elif self.at("hyp"):
                start = self.expect("hyp").span.start
                name = self.ident("a hypothesis name")
                self.expect("=")
                f = self.formula()
                decls.append(A.HypDecl(name.text, f, self.span_from(start)))
            elif self.at("groups"):
                start = self.expect("groups").span.start
                name = self.ident("a group list name")
                self.expect("=")
                g = self.group_list()
                decls.append(A.GroupsDecl(name.text, g, self.span_from(start)))
            elif self.at("let"):
                funcs.append(self.function())
            else:
                raise self.unexpected("a declaration", "'let'")
        return A.ProgramAst(tuple(decls), tuple(funcs))

    def population(self) -> A.PopulationDecl:
        start = self.expect("population").span.start
        name = self.ident("a population name")
        self.expect(":")
        if self.at_word("UnknownD"):
            self.pos += 1
            return A.PopulationDecl(name.text, "UnknownD", (), self.span_from(start))
        self.expect_word("NormalD")
        params = ()
        if self.at("("):
            self.pos += 1
            mu = self.ident("a mean parameter")
            self.expect(",")
            sigma = self.ident("a deviation parameter")
            self.expect(")")
            params = (mu.text, sigma.text)
        elif self.tok.kind == "ident" and self.peek().kind == "ident" and self.tok.text not in RESERVED:
            mu = self.ident()
            sigma = self.ident()
            params = (mu.text, sigma.text)
        return A.PopulationDecl(name.text, "NormalD", params, self.span_from(start))

    def dataset(self) -> A.DatasetDecl:
        start = self.expect("dataset").span.start
        name = self.ident("a dataset name")
        self.expect(":")
        pop = self.ident("a population name")
        size = None
        if self.at("size"):
            self.pos += 1
            if self.tok.kind != "number" or not self.tok.text.isdigit():
                raise self.unexpected("an integer size")
            size = int(self.tok.text)
            self.pos += 1
        return A.DatasetDecl(name.text, pop.text, size, self.span_from(start))

    def function(self) -> A.FunctionDef:
        start = self.expect("let").span.start
        name = self.ident("a function name")
        params = []
        while self.tok.kind == "ident":
            params.append(self.ident("a parameter name").text)
        self.expect("=")
        body = self.expr()
        head_span = self.span_from(start)
        ann = self.annotation() if self.at("(*@") else None
        return A.FunctionDef(name.text, tuple(params), body, ann, head_span)

    # -- annotations -------------------------------------------------------

    def annotation(self) -> A.Annotation:
        start = self.expect("(*@").span.start
        pattern = None
        if not (self.at("requires") or self.at("ensures") or self.at("*)")):
            pattern = self.pattern()
            self.expect("=")
            self.ident("a function name")
            while self.tok.kind == "ident":
                self.ident()
        requires, ensures = [], []
        while not self.at("*)"):
            if self.at("requires"):
                self.pos += 1
                requires.extend(self.assertion())
            elif self.at("ensures"):
                self.pos += 1
                ensures.extend(self.assertion())
            else:
                raise self.unexpected("'requires'", "'ensures'", "'*)'")
        self.expect("*)")
        return A.Annotation(pattern, tuple(requires), tuple(ensures), self.span_from(start))

    def assertion(self) -> list:
        items = self.assertion_item()
        while self.at("&&"):
            self.pos += 1
            items += self.assertion_item()
        return items

    def assertion_item(self) -> list:
        goal = self.attempt(self.pvalue_goal)
        if goal is not None:
            return [goal]
        f = self.attempt(self.clause_formula)
        if f is not None:
            return [f]
        if self.at("("):
            saved = self.pos
            try:
                self.pos += 1
                items = self.assertion()
                self.expect(")")
                return items
            except ParseError:
                self.pos = saved
        raise self.furthest or self.unexpected("a formula")

    def clause_formula(self):
        f = self.formula()
        if not any(self.at(t) for t in CLAUSE_END):
            raise self.unexpected("'&&'", "'requires'", "'ensures'", "'*)'")
        return f

    def pvalue_goal(self) -> A.PValueGoalAst:
        start = self.tok.span.start
        rec = self.record(allow_bare=False)
        self.expect("=")
        self.expect_word("compose_pvs")
        hyp = self.unary()
        state = self.state(allow_old=True)
        return A.PValueGoalAst(rec, hyp, state, self.span_from(start))

    def state(self, allow_old: bool = False) -> str:
        """``!st``, ``(!st)`` or (when allowed) ``old st`` / ``(old st)``."""
        paren = self.at("(")
        if paren:
            self.pos += 1
        if self.at("!"):
            self.pos += 1
            self.expect_word("st")
            which = "final"
        elif allow_old and self.at("old"):
            self.pos += 1
            self.expect_word("st")
            which = "old"
        else:
            raise self.unexpected("'!st'")
        if paren:
            self.expect(")")
        return which

    # -- formulas ----------------------------------------------------------

    def formula(self):
        start = self.tok.span.start
        parts = [self.conj()]
        while self.at("\\/"):
            self.pos += 1
            parts.append(self.conj())
        if len(parts) == 1:
            return parts[0]
        return A.FDisj(tuple(parts), self.span_from(start))

    def conj(self):
        start = self.tok.span.start
        parts = [self.unary()]
        while self.at("/\\"):
            self.pos += 1
            parts.append(self.unary())
        if len(parts) == 1:
            return parts[0]
        return A.FConj(tuple(parts), self.span_from(start))

    def world_prefix(self) -> bool:
        """Consume ``World (!st) interp |=`` (optionally parenthesized)."""
        saved = self.pos
        try:
            paren = self.at("(") and self.peek().kind == "ident" and self.peek().text == "World"
            if paren:
                self.pos += 1
            self.expect_word("World")
            self.state()
            self.expect_word("interp")
            if paren:
                self.expect(")")
            self.expect("|=")
            return True
        except ParseError:
            self.pos = saved
            return False

    def unary(self):
        start = self.tok.span.start
        if self.world_prefix():
            return self.unary()
        t = self.tok
        if t.kind == "ident":
            if t.text == "Not":
                self.pos += 1
                return A.FNot(self.unary(), self.span_from(start))
            if t.text == "Possible":
                self.pos += 1
                return A.FPossible(self.unary(), self.span_from(start))
            if t.text == "Know":
                self.pos += 1
                return A.FKnow(self.unary(), self.span_from(start))
            if t.text == "StatB":
                self.pos += 1
                rec = self.record(allow_bare=True)
                return A.FStatB(rec, self.unary(), self.span_from(start))
            if t.text in ("Conj", "Disj"):
                self.pos += 1
                a = self.unary()
                b = self.unary()
                kind = A.FConj if t.text == "Conj" else A.FDisj
                return kind((a, b), self.span_from(start))
            if t.text in A.FOLD_OPS:
                return self.fold()
        cmp = self.attempt(self.comparison)
        if cmp is not None:
            return cmp
        return self.primary()

    def fold(self) -> A.FFold:
        start = self.tok.span.start
        op = self.tok.text
        self.pos += 1
        groups = self.group_list() if self.at("[") else A.Name(*self._name())
        control = None
        if op in ("for_each_vs_control", "any_vs_control"):
            if self.tok.kind != "number" or not self.tok.text.isdigit():
                raise self.unexpected("a control group index")
            control = A.Number(Fraction(int(self.tok.text)), self.tok.span)
            self.pos += 1
        self.expect("(")
        self.expect("fun")
        binders = (self.binder(), self.binder())
        self.expect("->")
        body = self.formula()
        self.expect(")")
        return A.FFold(op, groups, control, binders, body, self.span_from(start))

    def _name(self):
        t = self.ident()
        return t.text, t.span

    def binder(self) -> tuple:
        self.expect("(")
        x = self.ident("a population binder").text
        self.expect(",")
        dx = self.ident("a dataset binder").text
        self.expect(")")
        return (x, dx)

    def comparison(self) -> A.FCmp:
        start = self.tok.span.start
        left = self.term()
        if self.tok.kind != "symbol" or self.tok.text not in CMP_OPS:
            raise self.unexpected("a comparison operator")
        op = CMP_OPS[self.tok.text]
        self.pos += 1
        right = self.term()
        return A.FCmp(op, left, right, self.span_from(start))

    def primary(self):
        start = self.tok.span.start
        t = self.tok
        if t.is_("("):
            self.pos += 1
            f = self.formula()
            self.expect(")")
            return f
        if t.kind == "ident" and t.text == "is_empty":
            self.pos += 1
            self.state()
            return A.FPred("is_empty", (), self.span_from(start))
        if t.kind == "ident" and t.text in PRED_ARITY:
            self.pos += 1
            if t.text == "pvalue":
                args = (self.pexpr_arg(),)
            else:
                args = tuple(self.term_arg() for _ in range(PRED_ARITY[t.text]))
            return A.FPred(t.text, args, self.span_from(start))
        if t.kind == "ident" and t.text not in RESERVED:
            self.pos += 1
            return A.FHyp(t.text, t.span)
        raise self.unexpected("a formula")

    # -- terms -------------------------------------------------------------

    def term(self):
        start = self.tok.span.start
        if self.at_word("mean"):
            self.pos += 1
            return A.MeanOf(self.term_arg(), self.span_from(start))
        if self.at_word("const_term"):
            self.pos += 1
            return A.ConstTerm(self.term_arg(), self.span_from(start))
        return self.term_arg()

    def term_arg(self):
        t = self.tok
        if t.kind == "number":
            self.pos += 1
            return A.Number(parse_number(t.text), t.span)
        if t.is_("("):
            self.pos += 1
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "ident" and t.text not in RESERVED:
            self.pos += 1
            return A.Name(t.text, t.span)
        raise self.unexpected("a term")

    # -- p-value records and expressions -----------------------------------

    def record(self, allow_bare: bool) -> A.Record:
        start = self.tok.span.start
        if self.at("(") and self.peek().kind == "ident" and self.peek().text in ("Leq", "Eq"):
            self.pos += 1
            kind = self.tok.text
            self.pos += 1
            e = self.pexpr_arg()
            self.expect(")")
            return A.Record(kind, e, self.span_from(start))
        if self.at_word("Leq") or self.at_word("Eq"):
            kind = self.tok.text
            self.pos += 1
            return A.Record(kind, self.pexpr_arg(), self.span_from(start))
        if allow_bare:
            return A.Record("Eq", self.pexpr_arg(), self.span_from(start))
        raise self.unexpected("'Leq'", "'Eq'")

    def pexpr(self):
        start = self.tok.span.start
        e = self.pterm()
        while self.at("+."):
            self.pos += 1
            e = A.PAdd(e, self.pterm(), self.span_from(start))
        return e

    def pterm(self):
        start = self.tok.span.start
        if self.at("min"):
            self.pos += 1
            a = self.pexpr_arg()
            b = self.pexpr_arg()
            return A.PMin(a, b, self.span_from(start))
        if self.tok.kind == "number" and self.peek().is_("*."):
            k = parse_number(self.tok.text)
            self.pos += 2
            return A.PScale(k, self.pexpr_arg(), self.span_from(start))
        return self.pexpr_arg()

    def pexpr_arg(self):
        t = self.tok
        if t.kind == "number":
            self.pos += 1
            return A.Number(parse_number(t.text), t.span)
        if t.is_("("):
            self.pos += 1
            e = self.pexpr()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text not in RESERVED:
            self.pos += 1
            return A.Name(t.text, t.span)
        raise self.unexpected("a p-value expression")

    # -- program expressions -----------------------------------------------

    def pattern(self) -> tuple:
        if self.at("("):
            self.pos += 1
            names = [self.ident("a variable name").text]
            while self.at(","):
                self.pos += 1
                names.append(self.ident("a variable name").text)
            self.expect(")")
            return tuple(names)
        return (self.ident("a variable name").text,)

    def expr(self):
        start = self.tok.span.start
        if self.at("let"):
            self.pos += 1
            pat = self.pattern()
            self.expect("=")
            value = self.expr()
            self.expect("in")
            body = self.expr()
            return A.LetIn(pat, value, body, self.span_from(start))
        e = self.app()
        while self.at("+."):
            self.pos += 1
            e = A.AddExpr(e, self.app(), self.span_from(start))
        return e

    def _atom_start(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "number") or t.is_("(") or t.is_("[")

    def app(self):
        start = self.tok.span.start
        if self.at("min"):
            self.pos += 1
            a = self.expr_atom()
            b = self.expr_atom()
            return A.MinExpr(a, b, self.span_from(start))
        if self.tok.kind == "ident" and self.tok.text not in ALTS:
            head = self.tok
            self.pos += 1
            args = []
            while self._atom_start():
                args.append(self.expr_atom())
            if args:
                return A.Apply(head.text, tuple(args), self.span_from(start))
            return A.Var(head.text, head.span)
        return self.expr_atom()

    def expr_atom(self):
        t = self.tok
        if t.kind == "number":
            self.pos += 1
            return A.Lit(parse_number(t.text), t.span)
        if t.kind == "ident":
            self.pos += 1
            if t.text in ALTS:
                return A.AltLit(t.text, t.span)
            return A.Var(t.text, t.span)
        if t.is_("["):
            return self.group_list()
        if t.is_("("):
            start = t.span.start
            self.pos += 1
            items = [self.expr()]
            while self.at(","):
                self.pos += 1
                items.append(self.expr())
            self.expect(")")
            if len(items) == 1:
                return items[0]
            return A.TupleExpr(tuple(items), self.span_from(start))
        raise self.unexpected("an expression")

    def group_list(self) -> A.GroupList:
        start = self.expect("[").span.start
        items = []
        while True:
            self.expect("(")
            pop = A.Name(*self._name())
            self.expect(",")
            data = A.Name(*self._name())
            self.expect(")")
            items.append((pop, data))
            if self.at(";"):
                self.pos += 1
                continue
            break
        self.expect("]")
        return A.GroupList(tuple(items), self.span_from(start))


def parse(source: str) -> A.ProgramAst:
    p = Parser(source)
    try:
        return p.program()
    except ParseError as e:
        if p.furthest is not None and p.furthest.span.start > e.span.start:
            raise p.furthest from None
        raise


def parse_formula_ast(source: str):
    p = Parser(source)
    try:
        f = p.formula()
        if p.tok.kind != "eof":
            raise p.unexpected("end of formula")
        return f
    except ParseError as e:
        if p.furthest is not None and p.furthest.span.start > e.span.start:
            raise p.furthest from None
        raise
