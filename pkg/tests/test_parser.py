"""Parser, pretty-printer, and AST normalization tests."""

import pytest
from hypothesis import given, settings, strategies as st

from rqc.classical import (
    BinOp, Cmp, Const, Var, eval_expr, expr_to_str, holds, ClassicalState,
)
from rqc.parser import ParseError, parse, parse_circuit, parse_formula
from rqc.syntax import (
    Assign, Block, Call, Gate, If, QIf, QVarRef, Seq, Skip,
    alpha_normalize, circuits_equal, decl_to_source, program_to_source,
    seq, seq_items, subst_circuit, to_source,
)


class TestCircuitParsing:
    def test_skip(self):
        assert parse_circuit("skip") == Skip()

    def test_qft_declaration_shape(self):
        src = """
        procedure QFT(m, n) <=
          if m = n then S(0)[q[m]]
          else Rot(m, n, 0); QFT(m + 1, n); Shift(m, n)
          fi
        """
        r = parse(src)
        assert r.main is None and len(r.decls) == 1
        d = r.decls[0]
        assert d.name == "QFT" and d.formals == ("m", "n")
        body = d.body
        assert isinstance(body, If)
        assert body.guard == Cmp("=", Var("m"), Var("n"))
        assert body.then_c == Gate("S", (Const(0),), (QVarRef("q", (Var("m"),)),))
        assert body.else_c == Seq(
            Call("Rot", (Var("m"), Var("n"), Const(0))),
            Seq(
                Call("QFT", (BinOp("+", Var("m"), Const(1)), Var("n"))),
                Call("Shift", (Var("m"), Var("n"))),
            ),
        )

    def test_qif_parses_even_when_ill_defined(self):
        # the parser accepts; well-definedness is a separate analysis
        c = parse_circuit("qif[q] |0> -> H[q] [] |1> -> skip fiq")
        assert isinstance(c, QIf) and c.coin == QVarRef("q")
        assert c.zero == Gate("H", (), (QVarRef("q"),))

    def test_unicode_forms(self):
        a = parse_circuit("qif[q[1]] |0⟩ → skip □ |1⟩ → X[q[2]] fiq")
        b = parse_circuit("qif[q[1]] |0> -> skip [] |1> -> X[q[2]] fiq")
        assert a == b

    def test_block_and_assignment(self):
        c = parse_circuit("begin local m := l + 1; x, y := m, 0 end")
        assert isinstance(c, Block) and c.vars == ("m",)
        assert c.body == Assign(("x", "y"), (Var("m"), Const(0)))

    def test_sequences_are_right_nested(self):
        c = parse_circuit("skip; X[q]; skip; Y[p]")
        assert seq_items(c) == [
            Skip(), Gate("X", (), (QVarRef("q"),)), Skip(),
            Gate("Y", (), (QVarRef("p"),)),
        ]
        assert isinstance(c, Seq) and isinstance(c.second, Seq)

    def test_if_without_else(self):
        c = parse_circuit("if m < n then X[q[m]] fi")
        assert isinstance(c, If) and c.else_c == Skip()

    def test_main_after_declarations(self):
        r = parse("procedure P() <= skip\nP()")
        assert r.main == Call("P", ())

    def test_gates_used_is_reported(self):
        r = parse("H[q]; CNOT[q, p]")
        assert r.gates_used == {"H", "CNOT"}


class TestParseErrors:
    def test_unknown_gate(self):
        with pytest.raises(ParseError, match="unknown gate"):
            parse_circuit("Bogus[q]")

    def test_gate_qubit_arity(self):
        with pytest.raises(ParseError, match="acts on 2"):
            parse_circuit("CNOT[q]")

    def test_gate_param_arity(self):
        with pytest.raises(ParseError, match="parameter"):
            parse_circuit("S[q]")

    def test_call_arity_mismatch(self):
        with pytest.raises(ParseError, match="argument"):
            parse("procedure P(a, b) <= skip\nP(1)")

    def test_duplicate_declaration(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse("procedure P() <= skip procedure P() <= skip")

    def test_ket_order_enforced(self):
        with pytest.raises(ParseError, match="branches"):
            parse_circuit("qif[q] |1> -> skip [] |0> -> skip fiq")

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as exc:
            parse_circuit("skip;\n  ??")
        assert exc.value.line == 2

    def test_assignment_repeated_lhs(self):
        with pytest.raises(ParseError, match="repeated"):
            parse_circuit("x, x := 1, 2")


class TestFormulaParsing:
    def test_round_trip_of_printed_formula(self):
        src = "forall k in [m:n - 1] . i[k] = 1"
        f = parse_formula(src)
        assert expr_to_str(f) == src
        assert parse_formula(expr_to_str(f)) == f

    def test_precedence(self):
        f = parse_formula("a + b * 2 ^ c = d and not e < f")
        assert expr_to_str(parse_formula(expr_to_str(f))) == expr_to_str(f)

    def test_window_and_store_and_dist(self):
        f = parse_formula("j[m:n] = store(d, l, 5)[l] and dist(q[x], q[y])")
        s = ClassicalState({
            "j": __import__("rqc.classical", fromlist=["ArrayVal"]).ArrayVal.bits_of(5, 1, 3),
            "m": 1, "n": 3, "d": __import__("rqc.classical", fromlist=["ArrayVal"]).ArrayVal.from_list([0]),
            "l": 0, "x": 0, "y": 1,
        })
        assert holds(f, s)

    def test_exact_fraction_literal(self):
        f = parse_formula("1/2^3")
        from fractions import Fraction
        assert eval_expr(f, ClassicalState()) == Fraction(1, 8)


### property: parse(print(ast)) == ast

_vars = st.sampled_from(["x", "y", "z"])
_qnames = st.sampled_from(["q", "p"])


def _small_exprs():
    base = st.one_of(st.integers(-3, 7).map(Const), _vars.map(Var))
    return st.one_of(
        base,
        st.tuples(st.sampled_from(["+", "-", "*"]), base, base).map(lambda t: BinOp(*t)),
    )


def _qrefs():
    return st.one_of(
        _qnames.map(QVarRef),
        st.tuples(_qnames, _small_exprs()).map(lambda t: QVarRef(t[0], (t[1],))),
    )


def _guards():
    return st.tuples(st.sampled_from(["=", "<", "<="]), _small_exprs(), _small_exprs()).map(
        lambda t: Cmp(*t)
    )


def _circuits(depth=2):
    leaf = st.one_of(
        st.just(Skip()),
        st.tuples(_vars, _small_exprs()).map(lambda t: Assign((t[0],), (t[1],))),
        _qrefs().map(lambda q: Gate("H", (), (q,))),
        st.tuples(_small_exprs(), _qrefs()).map(lambda t: Gate("S", (t[0],), (t[1],))),
        st.tuples(_qrefs(), _qrefs()).map(lambda t: Gate("CNOT", (), t)),
        st.lists(_small_exprs(), min_size=0, max_size=2).map(
            lambda a: Call("P", tuple(a))
        ),
    )
    if depth == 0:
        return leaf
    sub = _circuits(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(sub, sub).map(lambda t: Seq(*t)),
        st.tuples(_guards(), sub, sub).map(lambda t: If(*t)),
        st.tuples(_qrefs(), sub, sub).map(lambda t: QIf(*t)),
        st.tuples(_vars, _small_exprs(), sub).map(lambda t: Block((t[0],), (t[1],), t[2])),
    )


def _rnorm(c):
    # Semicolons carry no grouping, so the parser always associates to
    # the right; compare modulo that.
    if isinstance(c, Seq):
        first = _rnorm(c.first)
        second = _rnorm(c.second)
        if isinstance(first, Seq):
            return _rnorm(Seq(first.first, Seq(first.second, second)))
        return Seq(first, second)
    if isinstance(c, If):
        return If(c.guard, _rnorm(c.then_c), _rnorm(c.else_c))
    if isinstance(c, QIf):
        return QIf(c.coin, _rnorm(c.zero), _rnorm(c.one))
    if isinstance(c, Block):
        return Block(c.vars, c.terms, _rnorm(c.body))
    return c


@settings(max_examples=60, deadline=None)
@given(_circuits())
def test_parse_print_round_trip(c):
    assert parse_circuit(to_source(c)) == _rnorm(c)


@settings(max_examples=30, deadline=None)
@given(_circuits(1))
def test_declaration_round_trip(c):
    d_src = f"procedure Main(x, y) <=\n{to_source(c, 1)}"
    r = parse(d_src)
    assert r.decls[0].body == c
    assert parse(decl_to_source(r.decls[0])).decls[0] == r.decls[0]
    assert parse(program_to_source([r.decls[0]], Skip())).main == Skip()


class TestNormalization:
    def test_alpha_normalize_identifies_renamed_locals(self):
        a = parse_circuit("begin local m := 1; x := m end")
        b = parse_circuit("begin local w := 1; x := w end")
        assert a != b
        assert alpha_normalize(a) == alpha_normalize(b)
        assert circuits_equal(a, b)

    def test_alpha_normalize_keeps_distinct_programs_apart(self):
        a = parse_circuit("begin local m := 1; x := m end")
        b = parse_circuit("begin local m := 2; x := m end")
        assert not circuits_equal(a, b)

    def test_subst_circuit_respects_shadowing(self):
        c = parse_circuit("x := m; begin local m := 1; y := m end")
        out = subst_circuit(c, {"m": Const(9)})
        items = seq_items(out)
        assert items[0] == Assign(("x",), (Const(9),))
        assert items[1].body == Assign(("y",), (Var("m"),))

    def test_subst_circuit_renames_clashing_local(self):
        c = parse_circuit("begin local m := 1; x := m + n end")
        out = subst_circuit(c, {"n": Var("m")})
        assert isinstance(out, Block) and out.vars[0] != "m"
        inner = out.body
        assert inner.terms[0] == BinOp("+", Var(out.vars[0]), Var("m"))

    def test_seq_helper(self):
        c = seq(Skip(), Skip(), Skip())
        assert seq_items(c) == [Skip(), Skip(), Skip()]
